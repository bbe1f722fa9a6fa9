#pragma once

#include <vector>

#include <Eigen/Core>

#include "lpvh2/lpv_model.h"

namespace lpvh2 {

/// Stability margin used by the Lyapunov and H2 preconditions.
inline constexpr double kHurwitzMargin = 1e-9;

/**
 * Solves A W + W A' + Q = 0 for symmetric W.
 *
 * The equation is vectorized as (I (x) A + A (x) I) vec(W) = -vec(Q) and
 * solved densely with one step of iterative refinement, which is fine up to
 * n ~ 30. The result is symmetrized.
 *
 * Throws UnstableMatrix if A is not Hurwitz (margin kHurwitzMargin) and
 * IllConditioned if the Kronecker system is numerically singular.
 */
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& q);

/// ||A W + W A' + Q||_F / (||A||_F ||W||_F + ||Q||_F).
double lyapunov_relative_residual(const Eigen::MatrixXd& a,
                                  const Eigen::MatrixXd& w,
                                  const Eigen::MatrixXd& q);

/// Controllability Gramian of (Ac, Bc): solve_lyapunov(Ac, Bc Bc').
Eigen::MatrixXd controllability_gramian(const Eigen::MatrixXd& ac,
                                        const Eigen::MatrixXd& bc);

/// sqrt(tr(Cc W Cc')). Throws NonzeroFeedthrough if Dc != 0.
double h2_norm(const ClosedLoopVertex& cl);

struct ImpulseOracleOptions {
  /// Step of the composite Simpson rule; <= 0 selects 0.01 / max|eig(Ac)|.
  double dt = 0.0;
  /// Integration horizon; <= 0 selects 30 / |max Re eig(Ac)|.
  double horizon = 0.0;
};

/// H2 norm from the time-domain integral of tr(H(t)' H(t)), with
/// H(t) = Cc exp(Ac t) Bc. Independent of the Gramian route.
double h2_norm_impulse_oracle(const ClosedLoopVertex& cl,
                              const ImpulseOracleOptions& options = {});

/// Quadratic-stability certificate V(x) = x' X x checked at every vertex.
struct StabilityCertificate {
  Eigen::MatrixXd x;
  /// max eig(Ac' X + X Ac) per vertex.
  std::vector<double> per_vertex_max_eig;
  double x_min_eig = 0.0;
  double margin = 0.0;

  /// X > 0 and every per-vertex maximum < -margin.
  bool valid() const;
};

/// Evaluates Ac_i' X + X Ac_i at each closed-loop vertex. Never throws on
/// indefinite inputs; the certificate is simply invalid.
StabilityCertificate verify_quadratic_stability(
    const Eigen::MatrixXd& x, const std::vector<ClosedLoopVertex>& vertices,
    double margin);

}  // namespace lpvh2
