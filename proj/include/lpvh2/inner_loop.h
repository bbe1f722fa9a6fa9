#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "lpvh2/attitude_dynamics.h"

namespace lpvh2 {

using Vector5d = Eigen::Matrix<double, 5, 1>;
using Matrix5d = Eigen::Matrix<double, 5, 5>;
using Matrix53d = Eigen::Matrix<double, 5, 3>;

/// Diagonal gains of the feedback-linearizing attitude loop:
/// K1 = diag(k_phi, k_theta), K2 = diag(k_dphi, k_dtheta, k_dpsi).
class InnerLoopGains {
 public:
  /// Throws InvalidArgument unless every entry is finite and > 0.
  InnerLoopGains(const Eigen::Vector2d& k1, const Eigen::Vector3d& k2);

  /// K1 = diag(4, 4), K2 = diag(4, 4, 2): critically damped roll and pitch.
  static InnerLoopGains demo();

  const Eigen::Vector2d& k1() const { return k1_; }
  const Eigen::Vector3d& k2() const { return k2_; }

 private:
  Eigen::Vector2d k1_;
  Eigen::Vector3d k2_;
};

/// Desired roll, pitch and yaw rate, u_IL = (u_phi, u_theta, u_dpsi).
struct InnerLoopCommand {
  double u_phi = 0.0;
  double u_theta = 0.0;
  double u_psi_dot = 0.0;

  Eigen::Vector3d vector() const { return {u_phi, u_theta, u_psi_dot}; }
};

/// Throws SingularAttitude if u_theta is outside the admissible pitch band.
void check_command(const InnerLoopCommand& cmd);

/// Angular acceleration imposed by the linearized loop:
///   lambda_ddot = -K2 (lambda_dot - e3 e3' u) - Pi' K1 Pi (lambda - u)
Eigen::Vector3d closed_loop_accel(const AttitudeState& state,
                                  const InnerLoopCommand& cmd,
                                  const InnerLoopGains& gains);

/// External torque that cancels the rigid-body nonlinearities so that the
/// Euler angles follow closed_loop_accel exactly:
///   n = w x J w + J Q^-1 (a - Q' w),  a = closed_loop_accel.
Eigen::Vector3d feedback_linearizing_torque(const AttitudeState& state,
                                            const InnerLoopCommand& cmd,
                                            const InnerLoopGains& gains,
                                            const RigidBodyParams& params);

struct InnerLoopLti {
  Matrix5d a;
  Matrix53d b;
};

/// State x_IL = (phi, theta, dphi, dtheta, dpsi).
InnerLoopLti build_inner_loop_lti(const InnerLoopGains& gains);

/// x_IL = (Pi lambda, Q(lambda) omega) for a nonlinear state.
Vector5d inner_loop_state(const AttitudeState& state);

/// True iff every eigenvalue of `a` has real part < -margin.
bool is_hurwitz(const Eigen::MatrixXd& a, double margin = 0.0);

/// Largest real part among the eigenvalues of `a`.
double spectral_abscissa(const Eigen::MatrixXd& a);

struct TimedInnerLoopState {
  double t = 0.0;
  Vector5d x;
};

using InnerLoopTrajectory = std::vector<TimedInnerLoopState>;

/// Exact discretization of x' = A x + B u for constant u, sampled on the same
/// time grid as `integrate`.
InnerLoopTrajectory simulate_reference_model(const InnerLoopCommand& cmd,
                                             const InnerLoopGains& gains,
                                             const Vector5d& x0, double dt,
                                             double horizon);

/// CSV with header `t,phi,theta,dphi,dtheta,dpsi`.
void write_inner_loop_csv(std::ostream& os,
                          const InnerLoopTrajectory& trajectory);

}  // namespace lpvh2
