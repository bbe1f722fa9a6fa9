#include "lpvh2/attitude_dynamics.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <gtest/gtest.h>

#include "lpvh2/errors.h"

namespace lpvh2 {
namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Vector3d random_vector(std::mt19937& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

Eigen::Vector3d random_attitude(std::mt19937& rng) {
  std::uniform_real_distribution<double> roll(-kPi, kPi);
  std::uniform_real_distribution<double> pitch(-1.5, 1.5);
  return {roll(rng), pitch(rng), roll(rng)};
}

TEST(SkewTest, ZeroVectorGivesZeroMatrix) {
  EXPECT_TRUE(skew(Eigen::Vector3d::Zero()).isZero(0.0));
}

TEST(SkewTest, UnitVectors) {
  EXPECT_EQ(skew(Eigen::Vector3d::UnitX()) * Eigen::Vector3d::UnitY(),
            Eigen::Vector3d::UnitZ());
}

TEST(SkewTest, MatchesComponentwiseCrossProduct) {
  std::mt19937 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Vector3d v = random_vector(rng, 10.0);
    const Eigen::Vector3d u = random_vector(rng, 10.0);
    const Eigen::Vector3d cross(v(1) * u(2) - v(2) * u(1),
                                v(2) * u(0) - v(0) * u(2),
                                v(0) * u(1) - v(1) * u(0));
    const Eigen::Matrix3d s = skew(v);
    EXPECT_LT((s * u - cross).cwiseAbs().maxCoeff(), 1e-12);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) EXPECT_EQ(s(i, j), -s(j, i));
  }
}

TEST(EulerRateMatrixTest, IdentityAtZeroAttitude) {
  EXPECT_EQ(euler_rate_matrix(Eigen::Vector3d::Zero()),
            Eigen::Matrix3d::Identity());
  EXPECT_EQ(euler_rate_matrix_inverse(Eigen::Vector3d::Zero()),
            Eigen::Matrix3d::Identity());
}

TEST(EulerRateMatrixTest, RejectsGimbalLock) {
  EXPECT_THROW(euler_rate_matrix(Eigen::Vector3d(0.0, kPi / 2, 0.0)),
               SingularAttitude);
  EXPECT_THROW(euler_rate_matrix_inverse(Eigen::Vector3d(0.0, -kPi / 2, 0.0)),
               SingularAttitude);
  EXPECT_THROW(
      check_admissible(Eigen::Vector3d(0.0, kPi / 2 - 0.5 * kSingularityGuard, 0.0)),
      SingularAttitude);
  EXPECT_NO_THROW(
      check_admissible(Eigen::Vector3d(0.0, kPi / 2 - 2.0 * kSingularityGuard, 0.0)));
}

TEST(EulerRateMatrixTest, InverseIsConsistent) {
  std::mt19937 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Vector3d lambda = random_attitude(rng);
    const Eigen::Matrix3d prod =
        euler_rate_matrix(lambda) * euler_rate_matrix_inverse(lambda);
    EXPECT_LT((prod - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(EulerRateMatrixTest, MapsBodyRatesToEulerRates) {
  // Finite difference of the rotation R = Rz(psi) Ry(theta) Rx(phi):
  // R' = R [omega]x.
  std::mt19937 rng(3);
  auto rotation = [](const Eigen::Vector3d& l) {
    return (Eigen::AngleAxisd(l(2), Eigen::Vector3d::UnitZ()) *
            Eigen::AngleAxisd(l(1), Eigen::Vector3d::UnitY()) *
            Eigen::AngleAxisd(l(0), Eigen::Vector3d::UnitX()))
        .toRotationMatrix();
  };
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Vector3d lambda = random_attitude(rng);
    const Eigen::Vector3d omega = random_vector(rng, 1.0);
    const Eigen::Vector3d rate = euler_rate_matrix(lambda) * omega;
    const double h = 1e-6;
    const Eigen::Matrix3d r_dot =
        (rotation(lambda + h * rate) - rotation(lambda - h * rate)) / (2 * h);
    const Eigen::Matrix3d omega_x = rotation(lambda).transpose() * r_dot;
    const Eigen::Vector3d recovered(omega_x(2, 1), omega_x(0, 2), omega_x(1, 0));
    EXPECT_LT((recovered - omega).norm(), 1e-6 * (1.0 + rate.norm()));
  }
}

TEST(EulerRateMatrixDotTest, ZeroForStationaryAttitude) {
  std::mt19937 rng(4);
  EXPECT_TRUE(euler_rate_matrix_dot(random_attitude(rng), Eigen::Vector3d::Zero())
                  .isZero(0.0));
}

TEST(EulerRateMatrixDotTest, MatchesCentralDifference) {
  std::mt19937 rng(5);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Vector3d lambda = random_attitude(rng);
    const Eigen::Vector3d rate = random_vector(rng, 1.0);
    const Eigen::Matrix3d fd = (euler_rate_matrix(lambda + h * rate) -
                                euler_rate_matrix(lambda - h * rate)) /
                               (2 * h);
    EXPECT_LT((euler_rate_matrix_dot(lambda, rate) - fd).cwiseAbs().maxCoeff(),
              1e-6 * (1.0 + fd.cwiseAbs().maxCoeff()));
  }
}

TEST(EulerRateMatrixDotTest, SymbolicDerivativesAtOrigin) {
  const Eigen::Vector3d zero = Eigen::Vector3d::Zero();
  EXPECT_TRUE(euler_rate_matrix_dot(zero, Eigen::Vector3d::UnitZ()).isZero(0.0));
  Eigen::Matrix3d d_phi = Eigen::Matrix3d::Zero();
  d_phi(1, 2) = -1.0;
  d_phi(2, 1) = 1.0;
  EXPECT_LT((euler_rate_matrix_dot(zero, Eigen::Vector3d::UnitX()) - d_phi)
                .cwiseAbs()
                .maxCoeff(),
            1e-15);
  Eigen::Matrix3d d_theta = Eigen::Matrix3d::Zero();
  d_theta(0, 2) = 1.0;
  EXPECT_LT((euler_rate_matrix_dot(zero, Eigen::Vector3d::UnitY()) - d_theta)
                .cwiseAbs()
                .maxCoeff(),
            1e-15);
}

TEST(RigidBodyParamsTest, RejectsNonSpdInertia) {
  EXPECT_THROW(RigidBodyParams(Eigen::Vector3d(1.0, -1.0, 1.0).asDiagonal()),
               NonSpdInertia);
  Eigen::Matrix3d asym = Eigen::Matrix3d::Identity();
  asym(0, 1) = 0.5;
  EXPECT_THROW(RigidBodyParams{asym}, NonSpdInertia);
}

TEST(AngularDynamicsTest, EquilibriumHasZeroDerivative) {
  const RigidBodyParams params(Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal());
  AttitudeState s;
  s.lambda = Eigen::Vector3d(0.3, -0.2, 1.0);
  const StateDerivative d = angular_dynamics(s, Eigen::Vector3d::Zero(), params);
  EXPECT_TRUE(d.lambda_dot.isZero(0.0));
  EXPECT_TRUE(d.omega_dot.isZero(0.0));
}

TEST(AngularDynamicsTest, IsotropicInertiaHasNoGyroscopicTerm) {
  const RigidBodyParams params(Eigen::Matrix3d::Identity());
  AttitudeState s;
  s.omega = Eigen::Vector3d(0.4, -1.2, 2.0);
  EXPECT_LT(angular_dynamics(s, Eigen::Vector3d::Zero(), params)
                .omega_dot.cwiseAbs()
                .maxCoeff(),
            1e-15);
}

TEST(AngularDynamicsTest, MatchesDirectEvaluation) {
  std::mt19937 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Matrix3d m = Eigen::Matrix3d::Random();
    const Eigen::Matrix3d j = m * m.transpose() + Eigen::Matrix3d::Identity();
    const RigidBodyParams params(j);
    AttitudeState s;
    s.lambda = random_attitude(rng);
    s.omega = random_vector(rng, 2.0);
    const Eigen::Vector3d torque = random_vector(rng, 1.0);
    const StateDerivative d = angular_dynamics(s, torque, params);

    const double phi = s.lambda(0), theta = s.lambda(1);
    const double p = s.omega(0), q = s.omega(1), r = s.omega(2);
    const Eigen::Vector3d lambda_dot(
        p + std::tan(theta) * (std::sin(phi) * q + std::cos(phi) * r),
        std::cos(phi) * q - std::sin(phi) * r,
        (std::sin(phi) * q + std::cos(phi) * r) / std::cos(theta));
    const Eigen::Vector3d h = j * s.omega;
    const Eigen::Vector3d gyro(q * h(2) - r * h(1), r * h(0) - p * h(2),
                               p * h(1) - q * h(0));
    const Eigen::Vector3d omega_dot = j.inverse() * (torque - gyro);
    EXPECT_LT((d.lambda_dot - lambda_dot).norm(), 1e-10 * (1 + lambda_dot.norm()));
    EXPECT_LT((d.omega_dot - omega_dot).norm(), 1e-10 * (1 + omega_dot.norm()));
  }
}

TEST(IntegrateTest, EquilibriumIsPreserved) {
  const RigidBodyParams params(Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal());
  AttitudeState s0;
  s0.lambda = Eigen::Vector3d(0.1, 0.2, 0.3);
  const Trajectory traj = integrate(
      s0, [](double, const AttitudeState&) { return Eigen::Vector3d::Zero(); },
      params, 0.01, 1.0);
  ASSERT_EQ(traj.size(), 101u);
  EXPECT_DOUBLE_EQ(traj.back().t, 1.0);
  for (const TimedState& ts : traj) {
    EXPECT_EQ(ts.state.lambda, s0.lambda);
    EXPECT_TRUE(ts.state.omega.isZero(0.0));
  }
}

TEST(IntegrateTest, LastStepLandsOnHorizon) {
  const RigidBodyParams params(Eigen::Matrix3d::Identity());
  const Trajectory traj = integrate(
      AttitudeState{}, [](double, const AttitudeState&) { return Eigen::Vector3d::Zero(); },
      params, 0.3, 1.0);
  ASSERT_EQ(traj.size(), 5u);
  EXPECT_EQ(traj.back().t, 1.0);
}

TEST(IntegrateTest, FourthOrderConvergence) {
  const RigidBodyParams params(Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal());
  const TorqueLaw law = [](double t, const AttitudeState& s) -> Eigen::Vector3d {
    return Eigen::Vector3d(std::sin(t), std::cos(2 * t), 0.1) - 0.5 * s.omega;
  };
  AttitudeState s0;
  s0.lambda = Eigen::Vector3d(0.2, -0.1, 0.4);
  s0.omega = Eigen::Vector3d(0.3, -0.2, 0.5);
  auto endpoint = [&](double dt) {
    const AttitudeState s = integrate(s0, law, params, dt, 2.0).back().state;
    Eigen::Matrix<double, 6, 1> v;
    v << s.lambda, s.omega;
    return v;
  };
  const double dt = 0.05;
  const auto reference = endpoint(dt / 8);
  const double e1 = (endpoint(dt) - reference).norm();
  const double e2 = (endpoint(dt / 2) - reference).norm();
  // With a dt/8 reference the dt/2 error is overestimated by 1/(1 - 2^-8).
  const double order = std::log2(e1 / e2);
  EXPECT_GE(order, 3.8) << "e1 = " << e1 << ", e2 = " << e2;
}

TEST(IntegrateTest, TorqueFreeMotionConservesEnergy) {
  const Eigen::Matrix3d j = Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal();
  const RigidBodyParams params(j);
  AttitudeState s0;
  s0.omega = Eigen::Vector3d(0.1, 0.2, 0.3);
  const Trajectory traj = integrate(
      s0, [](double, const AttitudeState&) { return Eigen::Vector3d::Zero(); },
      params, 1e-3, 10.0);
  const double e0 = 0.5 * s0.omega.dot(j * s0.omega);
  double worst = 0.0;
  for (const TimedState& ts : traj) {
    worst = std::max(worst,
                     std::abs(0.5 * ts.state.omega.dot(j * ts.state.omega) - e0));
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(IntegrateTest, TorqueFreeEnergyForRandomInertia) {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Vector3d v = random_vector(rng, 1.0);
    const Eigen::Matrix3d m = v * v.transpose() + Eigen::Matrix3d::Identity();
    const RigidBodyParams params(m);
    AttitudeState s0;
    s0.omega = random_vector(rng, 0.3);
    const Trajectory traj = integrate(
        s0, [](double, const AttitudeState&) { return Eigen::Vector3d::Zero(); },
        params, 1e-3, 2.0);
    const double e0 = 0.5 * s0.omega.dot(m * s0.omega);
    const AttitudeState& s = traj.back().state;
    EXPECT_NEAR(0.5 * s.omega.dot(m * s.omega), e0, 1e-8);
  }
}

TEST(IntegrateTest, ReportsSingularAttitude) {
  const RigidBodyParams params(Eigen::Matrix3d::Identity());
  AttitudeState s0;
  s0.omega = Eigen::Vector3d(0.0, 1.0, 0.0);  // pitch up at 1 rad/s
  EXPECT_THROW(integrate(
                   s0,
                   [](double, const AttitudeState&) {
                     return Eigen::Vector3d::Zero();
                   },
                   params, 0.01, 3.0),
               SingularAttitude);
}

TEST(IntegrateTest, ReportsNonFiniteState) {
  const RigidBodyParams params(Eigen::Matrix3d::Identity());
  EXPECT_THROW(integrate(
                   AttitudeState{},
                   [](double, const AttitudeState&) {
                     return Eigen::Vector3d(std::nan(""), 0.0, 0.0);
                   },
                   params, 0.01, 1.0),
               NonFiniteState);
}

TEST(TrajectoryCsvTest, HeaderAndPrecision) {
  Trajectory traj(1);
  traj[0].state.lambda = Eigen::Vector3d(1.0 / 3.0, 0.0, 0.0);
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  EXPECT_EQ(os.str(), "t,phi,theta,psi,p,q,r\n0,0.333333333333333,0,0,0,0,0\n");
}

}  // namespace
}  // namespace lpvh2
