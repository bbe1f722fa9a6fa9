#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

namespace lpvh2 {

/**
 * Rigid-body rotational dynamics with ZYX (yaw-pitch-roll) Euler angles.
 *
 * lambda = (phi, theta, psi) are roll, pitch and yaw; omega = (p, q, r) are
 * body angular rates. The kinematics are lambda_dot = Q(lambda) * omega with
 *
 *            [ 1   sin(phi) tan(theta)   cos(phi) tan(theta) ]
 *   Q      = [ 0   cos(phi)              -sin(phi)           ]
 *            [ 0   sin(phi)/cos(theta)   cos(phi)/cos(theta) ]
 *
 * so Q(0) = I. Q is singular at theta = +-pi/2; every operation that needs
 * Q or its inverse rejects |theta| >= pi/2 - kSingularityGuard.
 */

/// Distance from |theta| = pi/2 below which attitudes are rejected, rad.
inline constexpr double kSingularityGuard = 1e-3;

struct AttitudeState {
  Eigen::Vector3d lambda = Eigen::Vector3d::Zero();
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
};

/// Body inertia J_B. Construction validates symmetry and positive
/// definiteness (throws NonSpdInertia).
class RigidBodyParams {
 public:
  explicit RigidBodyParams(const Eigen::Matrix3d& inertia);

  const Eigen::Matrix3d& inertia() const { return inertia_; }
  /// Solves J_B x = rhs with the cached Cholesky factor.
  Eigen::Vector3d solve(const Eigen::Vector3d& rhs) const;

 private:
  Eigen::Matrix3d inertia_;
  Eigen::Matrix3d cholesky_lower_;
};

struct TimedState {
  double t = 0.0;
  AttitudeState state;
};

using Trajectory = std::vector<TimedState>;
using TorqueLaw =
    std::function<Eigen::Vector3d(double t, const AttitudeState& state)>;

struct StateDerivative {
  Eigen::Vector3d lambda_dot;
  Eigen::Vector3d omega_dot;
};

/// Cross-product matrix: skew(v) * u == v.cross(u).
Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// Throws SingularAttitude unless |theta| < pi/2 - kSingularityGuard.
void check_admissible(const Eigen::Vector3d& lambda);

Eigen::Matrix3d euler_rate_matrix(const Eigen::Vector3d& lambda);

/// Closed-form inverse of euler_rate_matrix (omega = Q^-1 lambda_dot).
Eigen::Matrix3d euler_rate_matrix_inverse(const Eigen::Vector3d& lambda);

/// Time derivative of Q along lambda_dot.
Eigen::Matrix3d euler_rate_matrix_dot(const Eigen::Vector3d& lambda,
                                      const Eigen::Vector3d& lambda_dot);

/// omega_dot = J^-1 (-[omega]x J omega + torque), lambda_dot = Q omega.
StateDerivative angular_dynamics(const AttitudeState& state,
                                 const Eigen::Vector3d& torque,
                                 const RigidBodyParams& params);

/// Fixed-step classical RK4. The returned trajectory includes the initial
/// state; the last step is shortened to land exactly on `horizon`.
/// Throws SingularAttitude if any stage leaves the admissible pitch band and
/// NonFiniteState on overflow or NaN.
Trajectory integrate(const AttitudeState& state0, const TorqueLaw& torque_law,
                     const RigidBodyParams& params, double dt, double horizon);

/// CSV with header `t,phi,theta,psi,p,q,r` at 15 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory);

}  // namespace lpvh2
