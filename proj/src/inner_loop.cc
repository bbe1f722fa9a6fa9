#include "lpvh2/inner_loop.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "lpvh2/errors.h"
#include "lpvh2/numeric_format.h"

namespace lpvh2 {

InnerLoopGains::InnerLoopGains(const Eigen::Vector2d& k1,
                               const Eigen::Vector3d& k2)
    : k1_(k1), k2_(k2) {
  if (!k1.allFinite() || !k2.allFinite() || k1.minCoeff() <= 0.0 ||
      k2.minCoeff() <= 0.0) {
    throw InvalidArgument("inner-loop gains must be finite and positive");
  }
}

InnerLoopGains InnerLoopGains::demo() {
  return InnerLoopGains(Eigen::Vector2d(4.0, 4.0),
                        Eigen::Vector3d(4.0, 4.0, 2.0));
}

void check_command(const InnerLoopCommand& cmd) {
  if (!cmd.vector().allFinite()) {
    throw InvalidArgument("inner-loop command is not finite");
  }
  const double limit = std::numbers::pi / 2.0 - kSingularityGuard;
  if (!(std::abs(cmd.u_theta) < limit)) {
    throw SingularAttitude("commanded pitch " + format_number(cmd.u_theta) +
                           " rad is outside |u_theta| < " +
                           format_number(limit));
  }
}

namespace {

// -K2 (lambda_dot - e3 e3' u) - Pi' K1 Pi (lambda - u)
Eigen::Vector3d linear_accel(const Eigen::Vector3d& lambda,
                             const Eigen::Vector3d& lambda_dot,
                             const InnerLoopCommand& cmd,
                             const InnerLoopGains& gains) {
  const Eigen::Vector3d u = cmd.vector();
  Eigen::Vector3d rate_error = lambda_dot;
  rate_error.z() -= u.z();
  Eigen::Vector3d angle_term = Eigen::Vector3d::Zero();
  angle_term.head<2>() =
      gains.k1().cwiseProduct(lambda.head<2>() - u.head<2>());
  return -gains.k2().cwiseProduct(rate_error) - angle_term;
}

}  // namespace

Eigen::Vector3d closed_loop_accel(const AttitudeState& state,
                                  const InnerLoopCommand& cmd,
                                  const InnerLoopGains& gains) {
  const Eigen::Vector3d lambda_dot =
      euler_rate_matrix(state.lambda) * state.omega;
  return linear_accel(state.lambda, lambda_dot, cmd, gains);
}

Eigen::Vector3d feedback_linearizing_torque(const AttitudeState& state,
                                            const InnerLoopCommand& cmd,
                                            const InnerLoopGains& gains,
                                            const RigidBodyParams& params) {
  check_command(cmd);
  const Eigen::Vector3d& omega = state.omega;
  const Eigen::Matrix3d& inertia = params.inertia();
  const Eigen::Vector3d lambda_dot =
      euler_rate_matrix(state.lambda) * omega;
  const Eigen::Matrix3d q_dot = euler_rate_matrix_dot(state.lambda, lambda_dot);
  // lambda_ddot = Q' omega + Q omega_dot, so Q' omega must be subtracted for
  // the loop to reduce to linear_accel.
  const Eigen::Vector3d bracket =
      linear_accel(state.lambda, lambda_dot, cmd, gains) - q_dot * omega;
  return omega.cross(inertia * omega) +
         inertia * (euler_rate_matrix_inverse(state.lambda) * bracket);
}

InnerLoopLti build_inner_loop_lti(const InnerLoopGains& gains) {
  InnerLoopLti lti;
  lti.a.setZero();
  lti.a(0, 2) = 1.0;
  lti.a(1, 3) = 1.0;
  lti.a(2, 0) = -gains.k1()(0);
  lti.a(3, 1) = -gains.k1()(1);
  lti.a.bottomRightCorner<3, 3>() = (-gains.k2()).asDiagonal();

  lti.b.setZero();
  lti.b(2, 0) = gains.k1()(0);
  lti.b(3, 1) = gains.k1()(1);
  lti.b(4, 2) = gains.k2()(2);
  return lti;
}

Vector5d inner_loop_state(const AttitudeState& state) {
  Vector5d x;
  x << state.lambda.head<2>(), euler_rate_matrix(state.lambda) * state.omega;
  return x;
}

double spectral_abscissa(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch("spectral_abscissa needs a square matrix");
  }
  if (a.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Eigen::MatrixXd> solver(a, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw IllConditioned("eigenvalue iteration did not converge");
  }
  return solver.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const Eigen::MatrixXd& a, double margin) {
  if (!a.allFinite()) return false;
  return spectral_abscissa(a) < -margin;
}

InnerLoopTrajectory simulate_reference_model(const InnerLoopCommand& cmd,
                                             const InnerLoopGains& gains,
                                             const Vector5d& x0, double dt,
                                             double horizon) {
  if (!(dt > 0.0) || !(horizon >= dt) || !std::isfinite(horizon)) {
    throw InvalidArgument(
        "simulate_reference_model requires dt > 0 and horizon >= dt");
  }
  const InnerLoopLti lti = build_inner_loop_lti(gains);
  const Eigen::Vector3d u = cmd.vector();

  // exp([[A, B u], [0, 0]] h) = [[Phi, Gamma u], [0, 1]]
  auto transition = [&](double h) {
    Eigen::Matrix<double, 6, 6> aug = Eigen::Matrix<double, 6, 6>::Zero();
    aug.topLeftCorner<5, 5>() = lti.a * h;
    aug.topRightCorner<5, 1>() = lti.b * u * h;
    return Eigen::Matrix<double, 6, 6>(aug.exp());
  };

  const auto steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
  const Eigen::Matrix<double, 6, 6> full_step = transition(dt);

  InnerLoopTrajectory trajectory;
  trajectory.reserve(static_cast<std::size_t>(steps) + 1);
  trajectory.push_back({0.0, x0});
  Eigen::Matrix<double, 6, 1> z;
  z << x0, 1.0;
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const bool last = (k + 1 == steps);
    const double h = last ? horizon - t : dt;
    z = (last && h != dt ? transition(h) : full_step) * z;
    trajectory.push_back({last ? horizon : t + h, z.head<5>()});
  }
  return trajectory;
}

void write_inner_loop_csv(std::ostream& os,
                          const InnerLoopTrajectory& trajectory) {
  os << "t,phi,theta,dphi,dtheta,dpsi\n";
  for (const TimedInnerLoopState& row : trajectory) {
    os << format_number(row.t);
    for (int i = 0; i < 5; ++i) os << ',' << format_number(row.x(i));
    os << '\n';
  }
}

}  // namespace lpvh2
