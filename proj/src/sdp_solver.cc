#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "lpvh2/errors.h"
#include "lpvh2/numeric_format.h"
#include "lpvh2/sdp.h"

namespace lpvh2 {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// One block of the standard-form pair
//   (P) min <C, X>  s.t. <A_i, X> = b_i, X >= 0
//   (D) max b' y    s.t. Z = C - sum_i y_i A_i >= 0.
// The user problem  min c'x s.t. F0 + sum x_i F_i >= 0  is (D) with y = x,
// b = -c, C = F0 and A_i = -F_i.
struct Block {
  int dim = 0;
  MatrixXd c;
  std::vector<int> vars;       // variables with a nonzero A_i in this block
  std::vector<MatrixXd> a;     // parallel to vars
};

using BlockMatrix = std::vector<MatrixXd>;

struct StandardForm {
  int m = 0;
  VectorXd b;
  std::vector<Block> blocks;
  int total_dim = 0;
};

StandardForm to_standard_form(const SdpProblem& problem) {
  StandardForm sf;
  sf.m = problem.num_vars;
  sf.b = -problem.objective;
  for (const PsdConstraint& con : problem.psd_constraints) {
    Block block;
    block.dim = con.dim;
    block.c = smat(con.constant);
    for (int i = 0; i < problem.num_vars; ++i) {
      if (con.coefficients.col(i).isZero(0.0)) continue;
      block.vars.push_back(i);
      block.a.push_back(-smat(con.coefficients.col(i)));
    }
    sf.blocks.push_back(std::move(block));
  }
  auto scalar_block = [&](int var, double c, double a) {
    Block block;
    block.dim = 1;
    block.c = MatrixXd::Constant(1, 1, c);
    block.vars.push_back(var);
    block.a.push_back(MatrixXd::Constant(1, 1, a));
    sf.blocks.push_back(std::move(block));
  };
  for (const VariableBound& bound : problem.bounds) {
    if (bound.lower) scalar_block(bound.index, -*bound.lower, -1.0);  // x - l
    if (bound.upper) scalar_block(bound.index, *bound.upper, 1.0);     // u - x
  }
  for (const Block& block : sf.blocks) sf.total_dim += block.dim;
  return sf;
}

double inner(const BlockMatrix& x, const BlockMatrix& y) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += x[j].cwiseProduct(y[j]).sum();
  return s;
}

double frobenius(const BlockMatrix& x) { return std::sqrt(inner(x, x)); }

// A(X)_i = sum_j <A_ij, X_j>
VectorXd apply_a(const StandardForm& sf, const BlockMatrix& x) {
  VectorXd r = VectorXd::Zero(sf.m);
  for (std::size_t j = 0; j < sf.blocks.size(); ++j) {
    const Block& block = sf.blocks[j];
    for (std::size_t k = 0; k < block.vars.size(); ++k) {
      r(block.vars[k]) += block.a[k].cwiseProduct(x[j]).sum();
    }
  }
  return r;
}

// sum_i y_i A_i
BlockMatrix apply_at(const StandardForm& sf, const VectorXd& y) {
  BlockMatrix out;
  out.reserve(sf.blocks.size());
  for (const Block& block : sf.blocks) {
    MatrixXd s = MatrixXd::Zero(block.dim, block.dim);
    for (std::size_t k = 0; k < block.vars.size(); ++k) {
      s += y(block.vars[k]) * block.a[k];
    }
    out.push_back(std::move(s));
  }
  return out;
}

MatrixXd sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Largest alpha with X + alpha dX >= 0 (infinity if unbounded); NaN if X is
// not positive definite.
double max_step(const BlockMatrix& x, const BlockMatrix& dx) {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < x.size(); ++j) {
    Eigen::LLT<MatrixXd> llt(x[j]);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
    const MatrixXd lower = llt.matrixL();
    const auto tri = lower.triangularView<Eigen::Lower>();
    MatrixXd s = tri.solve(dx[j]);
    s = tri.solve(s.transpose()).transpose();
    const double min_eig = Eigen::SelfAdjointEigenSolver<MatrixXd>(
                               sym(s), Eigen::EigenvaluesOnly)
                               .eigenvalues()
                               .minCoeff();
    if (min_eig < 0.0) alpha = std::min(alpha, -1.0 / min_eig);
  }
  return alpha;
}

double min_eigenvalue(const BlockMatrix& x) {
  double v = std::numeric_limits<double>::infinity();
  for (const MatrixXd& m : x) {
    v = std::min(v, Eigen::SelfAdjointEigenSolver<MatrixXd>(
                        sym(m), Eigen::EigenvaluesOnly)
                        .eigenvalues()
                        .minCoeff());
  }
  return v;
}

struct Direction {
  VectorXd dy;
  BlockMatrix dx;
  BlockMatrix dz;
};

class InteriorPointSolver {
 public:
  InteriorPointSolver(const StandardForm& sf, const SdpTolerances& tol)
      : sf_(sf), tol_(tol), used_(static_cast<std::size_t>(sf.m), false) {
    for (const Block& block : sf.blocks) {
      for (int v : block.vars) used_[static_cast<std::size_t>(v)] = true;
    }
  }

  SdpSolution run(const SdpProblem& problem);

 private:
  void initialize();
  bool factor();
  Direction direction(const BlockMatrix& target) const;

  const StandardForm& sf_;
  SdpTolerances tol_;
  std::vector<bool> used_;

  BlockMatrix x_, z_, z_inv_, rd_, x_rd_zinv_;
  VectorXd y_;
  Eigen::LLT<MatrixXd> schur_;
};

void InteriorPointSolver::initialize() {
  double b_scale = 0.0;
  for (int i = 0; i < sf_.m; ++i) b_scale = std::max(b_scale, std::abs(sf_.b(i)));
  x_.clear();
  z_.clear();
  for (const Block& block : sf_.blocks) {
    const double d = block.dim;
    double a_max = 0.0;
    double xi = std::max(10.0, std::sqrt(d));
    for (std::size_t k = 0; k < block.vars.size(); ++k) {
      const double a_norm = block.a[k].norm();
      a_max = std::max(a_max, a_norm);
      xi = std::max(xi, d * (1.0 + std::abs(sf_.b(block.vars[k]))) /
                            (1.0 + a_norm));
    }
    const double eta =
        std::max({10.0, std::sqrt(d), a_max, block.c.norm(), b_scale});
    x_.push_back(xi * MatrixXd::Identity(block.dim, block.dim));
    z_.push_back(eta * MatrixXd::Identity(block.dim, block.dim));
  }
  y_ = VectorXd::Zero(sf_.m);
}

// Builds Z^-1, X R_d Z^-1 and the Cholesky factor of the Schur complement
// M_ik = <A_i, X A_k Z^-1>.
bool InteriorPointSolver::factor() {
  const std::size_t nb = sf_.blocks.size();
  z_inv_.resize(nb);
  x_rd_zinv_.resize(nb);
  MatrixXd m = MatrixXd::Zero(sf_.m, sf_.m);
  for (std::size_t j = 0; j < nb; ++j) {
    const Block& block = sf_.blocks[j];
    Eigen::LLT<MatrixXd> llt(z_[j]);
    if (llt.info() != Eigen::Success) return false;
    z_inv_[j] = sym(llt.solve(MatrixXd::Identity(block.dim, block.dim)));
    x_rd_zinv_[j] = x_[j] * rd_[j] * z_inv_[j];
    for (std::size_t k = 0; k < block.vars.size(); ++k) {
      const MatrixXd g = x_[j] * block.a[k] * z_inv_[j];
      for (std::size_t i = 0; i <= k; ++i) {
        const double v = block.a[i].cwiseProduct(g).sum();
        m(block.vars[i], block.vars[k]) += v;
        if (i != k) m(block.vars[k], block.vars[i]) += v;
      }
    }
  }
  for (int i = 0; i < sf_.m; ++i) {
    if (!used_[static_cast<std::size_t>(i)]) m(i, i) = 1.0;
  }
  schur_.compute(m);
  if (schur_.info() != Eigen::Success) {
    // Tiny diagonal shift for numerically semidefinite Schur complements.
    const double shift =
        1e-14 * std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    m.diagonal().array() += shift;
    schur_.compute(m);
    if (schur_.info() != Eigen::Success) return false;
  }
  return true;
}

// HKM direction for the complementarity target dX = T - X - X dZ Z^-1.
Direction InteriorPointSolver::direction(const BlockMatrix& target) const {
  const std::size_t nb = sf_.blocks.size();
  VectorXd rhs = sf_.b;
  for (std::size_t j = 0; j < nb; ++j) {
    const Block& block = sf_.blocks[j];
    for (std::size_t k = 0; k < block.vars.size(); ++k) {
      rhs(block.vars[k]) += block.a[k].cwiseProduct(x_rd_zinv_[j] - target[j]).sum();
    }
  }
  Direction d;
  d.dy = schur_.solve(rhs);
  const BlockMatrix at_dy = apply_at(sf_, d.dy);
  d.dz.resize(nb);
  d.dx.resize(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    d.dz[j] = rd_[j] - at_dy[j];
    d.dx[j] = sym(target[j] - x_[j] - x_[j] * d.dz[j] * z_inv_[j]);
  }
  return d;
}

SdpSolution InteriorPointSolver::run(const SdpProblem& problem) {
  SdpSolution solution;
  const std::size_t nb = sf_.blocks.size();
  const double n_total = std::max(1, sf_.total_dim);
  BlockMatrix c_blocks;
  for (const Block& block : sf_.blocks) c_blocks.push_back(block.c);
  const double b_norm = sf_.b.norm();
  const double c_norm = frobenius(c_blocks);

  initialize();
  int stalled = 0;

  auto finish = [&](SdpStatus status, std::string message) {
    solution.status = status;
    solution.x = y_;
    solution.objective_value = problem.objective.dot(y_);
    solution.max_psd_violation = check_solution(problem, y_).max_violation;
    solution.message = std::move(message);
    return solution;
  };

  for (int i = 0; i < sf_.m; ++i) {
    if (!used_[static_cast<std::size_t>(i)] && sf_.b(i) != 0.0) {
      return finish(SdpStatus::kUnbounded,
                    "variable " + std::to_string(i) +
                        " is unconstrained but has a nonzero cost");
    }
  }

  for (int iter = 0;; ++iter) {
    solution.iterations = iter;

    const BlockMatrix at_y = apply_at(sf_, y_);
    rd_.resize(nb);
    for (std::size_t j = 0; j < nb; ++j) rd_[j] = c_blocks[j] - z_[j] - at_y[j];
    const VectorXd rp = sf_.b - apply_a(sf_, x_);
    const double mu = inner(x_, z_) / n_total;
    const double pobj = inner(c_blocks, x_);
    const double dobj = sf_.b.dot(y_);

    solution.primal_infeasibility = rp.norm() / (1.0 + b_norm);
    solution.dual_infeasibility = frobenius(rd_) / (1.0 + c_norm);
    solution.relative_gap =
        std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    if (!std::isfinite(pobj) || !std::isfinite(dobj) || !y_.allFinite()) {
      return finish(SdpStatus::kNumericalError, "non-finite iterate");
    }

    if (solution.primal_infeasibility <= tol_.feas_tol &&
        solution.dual_infeasibility <= tol_.feas_tol &&
        solution.relative_gap <= tol_.gap_tol &&
        check_solution(problem, y_).max_violation <= tol_.feas_tol) {
      return finish(SdpStatus::kOptimal, "converged");
    }

    // Farkas certificate for (D): X >= 0, A(X) = 0, <C, X> < 0.
    if (pobj < 0.0 &&
        (sf_.b - rp).norm() / (-pobj) <= tol_.feas_tol) {
      return finish(SdpStatus::kInfeasible,
                    "constraints are infeasible (primal ray found)");
    }
    // Improving ray for (D): -sum y_i A_i >= 0 with b'y > 0.
    if (dobj > 0.0 && sf_.m > 0) {
      BlockMatrix ray = apply_at(sf_, -y_ / dobj);
      if (min_eigenvalue(ray) >= -tol_.feas_tol) {
        return finish(SdpStatus::kUnbounded, "objective is unbounded below");
      }
    }

    if (iter >= tol_.max_iter) {
      return finish(SdpStatus::kIterationLimit,
                    "iteration limit reached (pinf " +
                        format_number(solution.primal_infeasibility) +
                        ", dinf " + format_number(solution.dual_infeasibility) +
                        ", gap " + format_number(solution.relative_gap) + ")");
    }
    if (!factor()) {
      return finish(SdpStatus::kNumericalError,
                    "Schur complement factorization failed at iteration " +
                        std::to_string(iter));
    }

    // Predictor (affine scaling).
    BlockMatrix target(nb);
    for (std::size_t j = 0; j < nb; ++j) {
      target[j] = MatrixXd::Zero(sf_.blocks[j].dim, sf_.blocks[j].dim);
    }
    const Direction affine = direction(target);
    const double ap_aff = std::min(1.0, max_step(x_, affine.dx));
    const double ad_aff = std::min(1.0, max_step(z_, affine.dz));
    if (std::isnan(ap_aff) || std::isnan(ad_aff)) {
      return finish(SdpStatus::kNumericalError, "iterate lost definiteness");
    }
    double mu_aff = 0.0;
    for (std::size_t j = 0; j < nb; ++j) {
      mu_aff += (x_[j] + ap_aff * affine.dx[j])
                    .cwiseProduct(z_[j] + ad_aff * affine.dz[j])
                    .sum();
    }
    mu_aff /= n_total;
    const double sigma =
        std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    // Corrector with the second-order term.
    for (std::size_t j = 0; j < nb; ++j) {
      target[j] = sigma * mu * z_inv_[j] -
                  affine.dx[j] * affine.dz[j] * z_inv_[j];
    }
    const Direction step = direction(target);
    const double tau = 0.9 + 0.09 * std::min(ap_aff, ad_aff);
    const double ap = std::min(1.0, tau * max_step(x_, step.dx));
    const double ad = std::min(1.0, tau * max_step(z_, step.dz));
    if (std::isnan(ap) || std::isnan(ad)) {
      return finish(SdpStatus::kNumericalError, "iterate lost definiteness");
    }

    for (std::size_t j = 0; j < nb; ++j) {
      x_[j] = sym(x_[j] + ap * step.dx[j]);
      z_[j] = sym(z_[j] + ad * step.dz[j]);
    }
    y_ += ad * step.dy;

    stalled = (std::max(ap, ad) < 1e-10) ? stalled + 1 : 0;
    if (stalled >= 5) {
      return finish(SdpStatus::kNumericalError,
                    "step lengths collapsed at iteration " +
                        std::to_string(iter));
    }
  }
}

}  // namespace

SdpSolution solve_sdp(const SdpProblem& problem,
                      const SdpTolerances& tolerances) {
  problem.validate();
  if (!(tolerances.feas_tol > 0.0) || !(tolerances.gap_tol > 0.0) ||
      tolerances.max_iter < 1) {
    throw InvalidArgument("SDP tolerances must be positive");
  }
  const StandardForm sf = to_standard_form(problem);

  if (sf.blocks.empty()) {
    SdpSolution solution;
    solution.x = VectorXd::Zero(problem.num_vars);
    solution.status = problem.objective.isZero(0.0) ? SdpStatus::kOptimal
                                                    : SdpStatus::kUnbounded;
    solution.message = "problem has no constraints";
    return solution;
  }
  InteriorPointSolver solver(sf, tolerances);
  return solver.run(problem);
}

}  // namespace lpvh2
