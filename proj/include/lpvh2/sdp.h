#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lpvh2 {

/// Length of svec for a d x d symmetric matrix, d (d + 1) / 2.
int svec_size(int dim);

/// Lower-triangular, column-by-column vectorization with off-diagonal
/// entries scaled by sqrt(2), so that svec(A) . svec(B) = tr(A B).
Eigen::VectorXd svec(const Eigen::MatrixXd& m);

/// Inverse of svec.
Eigen::MatrixXd smat(const Eigen::VectorXd& v);

/// Dimension d with svec_size(d) == length; throws if there is none.
int smat_dimension(Eigen::Index length);

/// F(x) = smat(constant + coefficients * x) must be positive semidefinite.
struct PsdConstraint {
  int dim = 0;
  Eigen::VectorXd constant;      // svec_size(dim)
  Eigen::MatrixXd coefficients;  // svec_size(dim) x num_vars
  std::string label;
};

struct VariableBound {
  int index = 0;
  std::optional<double> lower;
  std::optional<double> upper;
};

/// minimize objective' x  subject to  F_j(x) >= 0 (PSD) for every block,
/// plus optional scalar bounds on individual variables.
struct SdpProblem {
  int num_vars = 0;
  Eigen::VectorXd objective;
  std::vector<PsdConstraint> psd_constraints;
  std::vector<VariableBound> bounds;

  /// Throws DimensionMismatch / InvalidArgument on malformed problems.
  void validate() const;
  int total_svec_dimension() const;
};

enum class SdpStatus {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kIterationLimit,
  kNumericalError,
};

const char* to_string(SdpStatus status);

struct SdpTolerances {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iter = 200;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::kNumericalError;
  Eigen::VectorXd x;
  double objective_value = 0.0;
  double max_psd_violation = 0.0;
  int iterations = 0;

  // Final iterate diagnostics, relative measures.
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double relative_gap = 0.0;
  std::string message;
};

/**
 * Dense primal-dual interior-point solver.
 *
 * The problem is treated as the dual of a standard-form SDP and solved by an
 * infeasible path-following method with the HKM search direction and
 * Mehrotra predictor-corrector steps. Infeasibility and unboundedness are
 * reported when the iterates approach a Farkas certificate. Deterministic:
 * no threads, no randomness.
 */
SdpSolution solve_sdp(const SdpProblem& problem,
                      const SdpTolerances& tolerances = {});

/// Per-block minimum eigenvalue of F_j(x), recomputed from scratch.
struct ViolationReport {
  std::vector<double> block_min_eig;
  /// max(0, -min_j block_min_eig[j]); 0 for problems without constraints.
  double max_violation = 0.0;

  bool feasible(double tol) const { return max_violation <= tol; }
};

ViolationReport check_solution(const SdpProblem& problem,
                               const Eigen::VectorXd& x);
inline ViolationReport check_solution(const SdpProblem& problem,
                                      const SdpSolution& solution) {
  return check_solution(problem, solution.x);
}

/// Plain-text dump of a problem; see docs/sdp_dump_format.md.
void write_sdp_dump(std::ostream& os, const SdpProblem& problem);
SdpProblem read_sdp_dump(std::istream& is);

}  // namespace lpvh2
