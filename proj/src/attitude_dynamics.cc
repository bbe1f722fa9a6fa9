#include "lpvh2/attitude_dynamics.h"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>

#include "lpvh2/errors.h"
#include "lpvh2/numeric_format.h"

namespace lpvh2 {

RigidBodyParams::RigidBodyParams(const Eigen::Matrix3d& inertia)
    : inertia_(inertia) {
  if (!inertia.allFinite()) {
    throw NonSpdInertia("inertia matrix has non-finite entries");
  }
  const double scale = inertia.cwiseAbs().maxCoeff();
  if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(scale, 1.0)) {
    throw NonSpdInertia("inertia matrix is not symmetric");
  }
  Eigen::LLT<Eigen::Matrix3d> llt(inertia);
  if (llt.info() != Eigen::Success) {
    throw NonSpdInertia("inertia matrix is not positive definite");
  }
  cholesky_lower_ = llt.matrixL();
}

Eigen::Vector3d RigidBodyParams::solve(const Eigen::Vector3d& rhs) const {
  const auto lower = cholesky_lower_.triangularView<Eigen::Lower>();
  return lower.transpose().solve(lower.solve(rhs));
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  // clang-format off
  s <<   0.0, -v.z(),  v.y(),
       v.z(),    0.0, -v.x(),
      -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

void check_admissible(const Eigen::Vector3d& lambda) {
  if (!lambda.allFinite()) {
    throw NonFiniteState("Euler angles are not finite");
  }
  const double limit = std::numbers::pi / 2.0 - kSingularityGuard;
  if (!(std::abs(lambda.y()) < limit)) {
    throw SingularAttitude("pitch " + format_number(lambda.y()) +
                           " rad is outside the admissible band |theta| < " +
                           format_number(limit));
  }
}

Eigen::Matrix3d euler_rate_matrix(const Eigen::Vector3d& lambda) {
  check_admissible(lambda);
  const double sphi = std::sin(lambda.x());
  const double cphi = std::cos(lambda.x());
  const double ctheta = std::cos(lambda.y());
  const double ttheta = std::tan(lambda.y());
  Eigen::Matrix3d q;
  // clang-format off
  q << 1.0, sphi * ttheta,   cphi * ttheta,
       0.0, cphi,            -sphi,
       0.0, sphi / ctheta,   cphi / ctheta;
  // clang-format on
  return q;
}

Eigen::Matrix3d euler_rate_matrix_inverse(const Eigen::Vector3d& lambda) {
  check_admissible(lambda);
  const double sphi = std::sin(lambda.x());
  const double cphi = std::cos(lambda.x());
  const double stheta = std::sin(lambda.y());
  const double ctheta = std::cos(lambda.y());
  Eigen::Matrix3d q_inv;
  // clang-format off
  q_inv << 1.0,  0.0,  -stheta,
           0.0,  cphi,  sphi * ctheta,
           0.0, -sphi,  cphi * ctheta;
  // clang-format on
  return q_inv;
}

Eigen::Matrix3d euler_rate_matrix_dot(const Eigen::Vector3d& lambda,
                                      const Eigen::Vector3d& lambda_dot) {
  check_admissible(lambda);
  if (!lambda_dot.allFinite()) {
    throw NonFiniteState("Euler-angle rates are not finite");
  }
  const double sphi = std::sin(lambda.x());
  const double cphi = std::cos(lambda.x());
  const double stheta = std::sin(lambda.y());
  const double ctheta = std::cos(lambda.y());
  const double ttheta = stheta / ctheta;
  const double sec2 = 1.0 / (ctheta * ctheta);

  // Q does not depend on psi.
  Eigen::Matrix3d d_phi;
  // clang-format off
  d_phi << 0.0,  cphi * ttheta, -sphi * ttheta,
           0.0, -sphi,          -cphi,
           0.0,  cphi / ctheta, -sphi / ctheta;
  Eigen::Matrix3d d_theta;
  d_theta << 0.0, sphi * sec2,          cphi * sec2,
             0.0, 0.0,                  0.0,
             0.0, sphi * stheta * sec2, cphi * stheta * sec2;
  // clang-format on
  return d_phi * lambda_dot.x() + d_theta * lambda_dot.y();
}

StateDerivative angular_dynamics(const AttitudeState& state,
                                 const Eigen::Vector3d& torque,
                                 const RigidBodyParams& params) {
  const Eigen::Vector3d& omega = state.omega;
  const Eigen::Vector3d momentum = params.inertia() * omega;
  StateDerivative d;
  d.lambda_dot = euler_rate_matrix(state.lambda) * omega;
  d.omega_dot = params.solve(-omega.cross(momentum) + torque);
  return d;
}

namespace {

using Vector6d = Eigen::Matrix<double, 6, 1>;

Vector6d pack(const AttitudeState& s) {
  Vector6d x;
  x << s.lambda, s.omega;
  return x;
}

AttitudeState unpack(const Vector6d& x) {
  return AttitudeState{x.head<3>(), x.tail<3>()};
}

Vector6d derivative(double t, const Vector6d& x, const TorqueLaw& torque_law,
                    const RigidBodyParams& params) {
  if (!x.allFinite()) {
    throw NonFiniteState("state became non-finite at t = " + format_number(t));
  }
  const AttitudeState s = unpack(x);
  const Eigen::Vector3d torque = torque_law(t, s);
  if (!torque.allFinite()) {
    throw NonFiniteState("torque law returned a non-finite value at t = " +
                         format_number(t));
  }
  const StateDerivative d = angular_dynamics(s, torque, params);
  Vector6d dx;
  dx << d.lambda_dot, d.omega_dot;
  return dx;
}

}  // namespace

Trajectory integrate(const AttitudeState& state0, const TorqueLaw& torque_law,
                     const RigidBodyParams& params, double dt, double horizon) {
  if (!(dt > 0.0) || !(horizon >= dt) || !std::isfinite(horizon)) {
    throw InvalidArgument("integrate requires dt > 0 and horizon >= dt");
  }
  check_admissible(state0.lambda);
  if (!state0.omega.allFinite()) {
    throw NonFiniteState("initial body rates are not finite");
  }

  const auto steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
  Trajectory trajectory;
  trajectory.reserve(static_cast<std::size_t>(steps) + 1);
  trajectory.push_back({0.0, state0});

  Vector6d x = pack(state0);
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double h = (k + 1 == steps) ? horizon - t : dt;
    const Vector6d k1 = derivative(t, x, torque_law, params);
    const Vector6d k2 =
        derivative(t + 0.5 * h, x + 0.5 * h * k1, torque_law, params);
    const Vector6d k3 =
        derivative(t + 0.5 * h, x + 0.5 * h * k2, torque_law, params);
    const Vector6d k4 = derivative(t + h, x + h * k3, torque_law, params);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) {
      throw NonFiniteState("state became non-finite at t = " +
                           format_number(t + h));
    }
    const AttitudeState next = unpack(x);
    check_admissible(next.lambda);
    trajectory.push_back({(k + 1 == steps) ? horizon : t + h, next});
  }
  return trajectory;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory) {
  os << "t,phi,theta,psi,p,q,r\n";
  for (const TimedState& row : trajectory) {
    os << format_number(row.t);
    for (int i = 0; i < 3; ++i) os << ',' << format_number(row.state.lambda(i));
    for (int i = 0; i < 3; ++i) os << ',' << format_number(row.state.omega(i));
    os << '\n';
  }
}

}  // namespace lpvh2
