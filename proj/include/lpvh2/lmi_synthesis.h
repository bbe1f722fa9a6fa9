#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lpvh2/h2_analysis.h"
#include "lpvh2/lpv_model.h"
#include "lpvh2/sdp.h"

namespace lpvh2 {

/// Decision matrices of the H2 synthesis LMIs.
struct DecisionVariables {
  Eigen::MatrixXd x;  // n x n, symmetric
  Eigen::MatrixXd w;  // m_u x n
  Eigen::MatrixXd y;  // q x q, symmetric
  double gamma_sq = 0.0;
};

/// Maps DecisionVariables to the SDP variable vector:
///   [ svec(X) | W row-major | svec(Y) | gamma^2 ].
struct VariableLayout {
  int n = 0;
  int m_u = 0;
  int q = 0;

  VariableLayout(int num_states, int num_inputs, int num_outputs);

  int x_offset() const { return 0; }
  int w_offset() const { return svec_size(n); }
  int y_offset() const { return w_offset() + m_u * n; }
  int gamma_sq_index() const { return y_offset() + svec_size(q); }
  int num_vars() const { return gamma_sq_index() + 1; }

  Eigen::VectorXd pack(const DecisionVariables& v) const;
  DecisionVariables unpack(const Eigen::VectorXd& v) const;
};

/// One affine matrix inequality F(v) = constant + sum_k v_k coefficients[k]
/// >= 0 (PSD) in the SDP variables v. Per vertex i, with margin eps:
///   kSyn1:  -[[A X + X A' + B W + W' B', Bw], [Bw', -I]] - eps I
///   kSyn2:   [[Y, C X + E W], [X C' + W' E', X]] - eps I
/// and once: kXPositive X - eps I, kTrace gamma^2 - tr(Y) - eps.
struct LmiBlock {
  enum class Kind { kSyn1, kSyn2, kXPositive, kTrace };

  Kind kind = Kind::kSyn1;
  int vertex_index = -1;  // -1 for the global blocks
  int dim = 0;
  Eigen::MatrixXd constant;
  std::vector<Eigen::MatrixXd> coefficients;  // one per SDP variable

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& v) const;
};

const char* to_string(LmiBlock::Kind kind);

/// Builds the vertex LMIs. Throws NonzeroFeedthrough if any D_i != 0 and
/// DimensionMismatch if the vertices differ in shape.
std::vector<LmiBlock> assemble_lmis(const std::vector<LpvVertexSystem>& vertices,
                                    double epsilon);

/// minimize gamma^2 subject to every block.
SdpProblem to_sdp(const std::vector<LmiBlock>& blocks,
                  const VariableLayout& layout);

/// Default strictness margin 1e-7 (1 + max_i max|A_i|).
double default_epsilon(const std::vector<LpvVertexSystem>& vertices);

struct SynthesisOptions {
  std::optional<double> epsilon;
  SdpTolerances tolerances;
  /// cond(X) above this marks the result ill-conditioned.
  double max_condition = 1e10;
};

struct VertexReport {
  int vertex_index = 0;
  double h2_norm = 0.0;
  double lyapunov_max_eig = 0.0;  // max eig(Ac' X^-1 + X^-1 Ac)
  double closed_loop_abscissa = 0.0;
};

struct SynthesisResult {
  Eigen::MatrixXd x;
  Eigen::MatrixXd w;
  Eigen::MatrixXd y;
  Eigen::MatrixXd k;
  double gamma = 0.0;
  double epsilon = 0.0;
  SdpStatus solver_status = SdpStatus::kOptimal;
  int iterations = 0;
  double max_psd_violation = 0.0;
  double relative_gap = 0.0;
  double x_condition = 0.0;
  bool ill_conditioned = false;
  std::vector<VertexReport> vertices;
};

/**
 * Minimizes gamma subject to the vertex LMIs and recovers K = W X^-1.
 *
 * The returned gain is checked independently of the solver: X^-1 must be a
 * common Lyapunov matrix at every closed-loop vertex and every vertex H2
 * norm must be below gamma.
 *
 * Throws Infeasible when the SDP backend certifies infeasibility,
 * SolverFailure on iteration limits, numerical breakdown or a failed
 * post-solve check, and NonzeroFeedthrough if some D_i != 0.
 */
SynthesisResult synthesize(const PolytopicLpvPlant& plant,
                           const SynthesisOptions& options = {});

/// Same, from an explicit vertex list.
SynthesisResult synthesize(const std::vector<LpvVertexSystem>& vertices,
                           const SynthesisOptions& options = {});

struct RiccatiH2Solution {
  Eigen::MatrixXd k;  // u = K x
  Eigen::MatrixXd p;  // stabilizing ARE solution
  double gamma = 0.0;
};

/**
 * H2-optimal state feedback of a single LTI system from the algebraic
 * Riccati equation
 *   A'P + PA - (PB + C'E)(E'E)^-1(B'P + E'C) + C'C = 0,
 * solved through the stable invariant subspace of the Hamiltonian matrix.
 * gamma = sqrt(tr(Bw' P Bw)). Test oracle for the LMI route.
 *
 * Throws RegularityViolated if E'E is singular or the Hamiltonian has
 * eigenvalues on the imaginary axis.
 */
RiccatiH2Solution riccati_h2_oracle(const LpvVertexSystem& vertex);

}  // namespace lpvh2
