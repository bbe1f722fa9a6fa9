#include "lpvh2/lmi_synthesis.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "lpvh2/errors.h"
#include "lpvh2/inner_loop.h"
#include "lpvh2/numeric_format.h"

namespace lpvh2 {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VariableLayout::VariableLayout(int num_states, int num_inputs, int num_outputs)
    : n(num_states), m_u(num_inputs), q(num_outputs) {
  if (n < 1 || m_u < 1 || q < 1) {
    throw InvalidArgument("synthesis needs n, m_u and q >= 1");
  }
}

VectorXd VariableLayout::pack(const DecisionVariables& v) const {
  if (v.x.rows() != n || v.x.cols() != n || v.w.rows() != m_u ||
      v.w.cols() != n || v.y.rows() != q || v.y.cols() != q) {
    throw DimensionMismatch("decision variables do not match the layout");
  }
  VectorXd out(num_vars());
  out.segment(x_offset(), svec_size(n)) = svec(v.x);
  for (int r = 0; r < m_u; ++r) {
    for (int c = 0; c < n; ++c) out(w_offset() + r * n + c) = v.w(r, c);
  }
  out.segment(y_offset(), svec_size(q)) = svec(v.y);
  out(gamma_sq_index()) = v.gamma_sq;
  return out;
}

DecisionVariables VariableLayout::unpack(const VectorXd& v) const {
  if (v.size() != num_vars()) {
    throw DimensionMismatch("variable vector does not match the layout");
  }
  DecisionVariables d;
  d.x = smat(v.segment(x_offset(), svec_size(n)));
  d.w.resize(m_u, n);
  for (int r = 0; r < m_u; ++r) {
    for (int c = 0; c < n; ++c) d.w(r, c) = v(w_offset() + r * n + c);
  }
  d.y = smat(v.segment(y_offset(), svec_size(q)));
  d.gamma_sq = v(gamma_sq_index());
  return d;
}

MatrixXd LmiBlock::evaluate(const VectorXd& v) const {
  if (v.size() != static_cast<Eigen::Index>(coefficients.size())) {
    throw DimensionMismatch("variable vector does not match the LMI block");
  }
  MatrixXd f = constant;
  for (std::size_t k = 0; k < coefficients.size(); ++k) {
    if (v(static_cast<Eigen::Index>(k)) != 0.0) {
      f += v(static_cast<Eigen::Index>(k)) * coefficients[k];
    }
  }
  return f;
}

const char* to_string(LmiBlock::Kind kind) {
  switch (kind) {
    case LmiBlock::Kind::kSyn1:
      return "syn1";
    case LmiBlock::Kind::kSyn2:
      return "syn2";
    case LmiBlock::Kind::kXPositive:
      return "x_positive";
    case LmiBlock::Kind::kTrace:
      return "trace";
  }
  return "unknown";
}

namespace {

// Homogeneous part of each block, evaluated on decision matrices.
MatrixXd linear_part(LmiBlock::Kind kind, const LpvVertexSystem* p,
                     const DecisionVariables& v) {
  switch (kind) {
    case LmiBlock::Kind::kSyn1: {
      const auto n = p->num_states();
      const auto mw = p->num_disturbances();
      MatrixXd f = MatrixXd::Zero(n + mw, n + mw);
      const MatrixXd ax_bw = p->a * v.x + p->b * v.w;
      f.topLeftCorner(n, n) = -(ax_bw + ax_bw.transpose());
      return f;
    }
    case LmiBlock::Kind::kSyn2: {
      const auto n = p->num_states();
      const auto q = p->num_outputs();
      MatrixXd f(q + n, q + n);
      const MatrixXd cx_ew = p->c * v.x + p->e * v.w;
      f.topLeftCorner(q, q) = v.y;
      f.topRightCorner(q, n) = cx_ew;
      f.bottomLeftCorner(n, q) = cx_ew.transpose();
      f.bottomRightCorner(n, n) = v.x;
      return f;
    }
    case LmiBlock::Kind::kXPositive:
      return v.x;
    case LmiBlock::Kind::kTrace:
      return MatrixXd::Constant(1, 1, v.gamma_sq - v.y.trace());
  }
  return {};
}

LmiBlock make_block(LmiBlock::Kind kind, int vertex_index,
                    const LpvVertexSystem* p, const VariableLayout& layout,
                    MatrixXd constant) {
  LmiBlock block;
  block.kind = kind;
  block.vertex_index = vertex_index;
  block.dim = static_cast<int>(constant.rows());
  block.constant = std::move(constant);
  block.coefficients.reserve(static_cast<std::size_t>(layout.num_vars()));
  for (int k = 0; k < layout.num_vars(); ++k) {
    VectorXd unit = VectorXd::Zero(layout.num_vars());
    unit(k) = 1.0;
    block.coefficients.push_back(linear_part(kind, p, layout.unpack(unit)));
  }
  return block;
}

void check_vertices(const std::vector<LpvVertexSystem>& vertices) {
  if (vertices.empty()) throw InvalidArgument("no vertex systems given");
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    vertices[i].validate();
    if (!vertices[i].same_shape(vertices.front())) {
      throw DimensionMismatch("vertex " + std::to_string(i) +
                              " differs in shape from vertex 0");
    }
    if (vertices[i].d.size() > 0 && vertices[i].d.cwiseAbs().maxCoeff() != 0.0) {
      throw NonzeroFeedthrough("vertex " + std::to_string(i) +
                               " has D != 0; H2 synthesis requires D = 0");
    }
  }
}

}  // namespace

std::vector<LmiBlock> assemble_lmis(const std::vector<LpvVertexSystem>& vertices,
                                    double epsilon) {
  check_vertices(vertices);
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("epsilon must be positive");
  }
  const LpvVertexSystem& shape = vertices.front();
  const VariableLayout layout(shape.num_states(), shape.num_inputs(),
                              shape.num_outputs());
  const int n = layout.n;
  const int q = layout.q;
  const int mw = shape.num_disturbances();

  std::vector<LmiBlock> blocks;
  blocks.reserve(2 * vertices.size() + 2);
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const LpvVertexSystem& p = vertices[i];
    MatrixXd c1 = MatrixXd::Zero(n + mw, n + mw);
    c1.topRightCorner(n, mw) = -p.bw;
    c1.bottomLeftCorner(mw, n) = -p.bw.transpose();
    c1.bottomRightCorner(mw, mw) = MatrixXd::Identity(mw, mw);
    c1.diagonal().array() -= epsilon;
    blocks.push_back(make_block(LmiBlock::Kind::kSyn1, static_cast<int>(i), &p,
                                layout, std::move(c1)));
    blocks.push_back(make_block(LmiBlock::Kind::kSyn2, static_cast<int>(i), &p,
                                layout, -epsilon * MatrixXd::Identity(q + n, q + n)));
  }
  blocks.push_back(make_block(LmiBlock::Kind::kXPositive, -1, nullptr, layout,
                              -epsilon * MatrixXd::Identity(n, n)));
  blocks.push_back(make_block(LmiBlock::Kind::kTrace, -1, nullptr, layout,
                              MatrixXd::Constant(1, 1, -epsilon)));
  return blocks;
}

SdpProblem to_sdp(const std::vector<LmiBlock>& blocks,
                  const VariableLayout& layout) {
  SdpProblem problem;
  problem.num_vars = layout.num_vars();
  problem.objective = VectorXd::Zero(problem.num_vars);
  problem.objective(layout.gamma_sq_index()) = 1.0;
  for (const LmiBlock& block : blocks) {
    if (static_cast<int>(block.coefficients.size()) != problem.num_vars) {
      throw DimensionMismatch("LMI block does not match the variable layout");
    }
    PsdConstraint c;
    c.dim = block.dim;
    c.label = std::string(to_string(block.kind)) +
              (block.vertex_index >= 0 ? "_" + std::to_string(block.vertex_index)
                                       : std::string());
    c.constant = svec(block.constant);
    c.coefficients.resize(svec_size(block.dim), problem.num_vars);
    for (int k = 0; k < problem.num_vars; ++k) {
      c.coefficients.col(k) = svec(block.coefficients[static_cast<std::size_t>(k)]);
    }
    problem.psd_constraints.push_back(std::move(c));
  }
  return problem;
}

double default_epsilon(const std::vector<LpvVertexSystem>& vertices) {
  double a_max = 0.0;
  for (const LpvVertexSystem& v : vertices) {
    if (v.a.size() > 0) a_max = std::max(a_max, v.a.cwiseAbs().maxCoeff());
  }
  return 1e-7 * (1.0 + a_max);
}

SynthesisResult synthesize(const PolytopicLpvPlant& plant,
                           const SynthesisOptions& options) {
  return synthesize(instantiate_vertices(plant), options);
}

SynthesisResult synthesize(const std::vector<LpvVertexSystem>& vertices,
                           const SynthesisOptions& options) {
  check_vertices(vertices);
  const double epsilon = options.epsilon.value_or(default_epsilon(vertices));
  const std::vector<LmiBlock> blocks = assemble_lmis(vertices, epsilon);
  const LpvVertexSystem& shape = vertices.front();
  const VariableLayout layout(shape.num_states(), shape.num_inputs(),
                              shape.num_outputs());
  const SdpProblem problem = to_sdp(blocks, layout);
  const SdpSolution solution = solve_sdp(problem, options.tolerances);

  const std::string diagnostics =
      " after " + std::to_string(solution.iterations) + " iterations (" +
      solution.message + "; pinf " + format_number(solution.primal_infeasibility) +
      ", dinf " + format_number(solution.dual_infeasibility) + ", gap " +
      format_number(solution.relative_gap) + ")";
  switch (solution.status) {
    case SdpStatus::kOptimal:
      break;
    case SdpStatus::kInfeasible:
      throw Infeasible("synthesis LMIs are infeasible with epsilon = " +
                       format_number(epsilon) + diagnostics);
    case SdpStatus::kUnbounded:
    case SdpStatus::kIterationLimit:
    case SdpStatus::kNumericalError:
      throw SolverFailure(std::string("SDP solver returned ") +
                          to_string(solution.status) + diagnostics);
  }

  const DecisionVariables v = layout.unpack(solution.x);
  SynthesisResult result;
  result.x = 0.5 * (v.x + v.x.transpose());
  result.w = v.w;
  result.y = 0.5 * (v.y + v.y.transpose());
  result.gamma = std::sqrt(std::max(v.gamma_sq, 0.0));
  result.epsilon = epsilon;
  result.solver_status = solution.status;
  result.iterations = solution.iterations;
  result.max_psd_violation = solution.max_psd_violation;
  result.relative_gap = solution.relative_gap;

  Eigen::LDLT<MatrixXd> ldlt(result.x);
  const VectorXd x_eig =
      Eigen::SelfAdjointEigenSolver<MatrixXd>(result.x, Eigen::EigenvaluesOnly)
          .eigenvalues();
  if (ldlt.info() != Eigen::Success || !(x_eig.minCoeff() > 0.0)) {
    throw SolverFailure("solver returned a non-positive-definite X" +
                        diagnostics);
  }
  result.x_condition = x_eig.maxCoeff() / x_eig.minCoeff();
  result.ill_conditioned = !(result.x_condition < options.max_condition);
  // K = W X^-1, i.e. X K' = W'.
  result.k = ldlt.solve(result.w.transpose()).transpose();

  // Independent checks: X^-1 is a common Lyapunov matrix and gamma bounds
  // every vertex H2 norm.
  const std::vector<ClosedLoopVertex> closed = close_loop(vertices, result.k);
  const MatrixXd p = ldlt.solve(MatrixXd::Identity(layout.n, layout.n));
  const StabilityCertificate cert =
      verify_quadratic_stability(0.5 * (p + p.transpose()), closed, 0.0);
  for (std::size_t i = 0; i < closed.size(); ++i) {
    VertexReport report;
    report.vertex_index = static_cast<int>(i);
    report.lyapunov_max_eig = cert.per_vertex_max_eig[i];
    report.closed_loop_abscissa = spectral_abscissa(closed[i].ac);
    if (report.closed_loop_abscissa < -kHurwitzMargin) {
      report.h2_norm = h2_norm(closed[i]);
    } else {
      report.h2_norm = std::numeric_limits<double>::infinity();
    }
    result.vertices.push_back(report);
  }
  if (!cert.valid()) {
    throw SolverFailure("recovered gain failed the quadratic-stability check" +
                        diagnostics);
  }
  for (const VertexReport& r : result.vertices) {
    if (!(r.h2_norm < result.gamma)) {
      throw SolverFailure("vertex " + std::to_string(r.vertex_index) +
                          " H2 norm " + format_number(r.h2_norm) +
                          " is not below gamma " + format_number(result.gamma));
    }
  }
  return result;
}

}  // namespace lpvh2
