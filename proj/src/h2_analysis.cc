#include "lpvh2/h2_analysis.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>

#include "lpvh2/errors.h"
#include "lpvh2/inner_loop.h"
#include "lpvh2/numeric_format.h"

namespace lpvh2 {

namespace {

void require_hurwitz(const Eigen::MatrixXd& a, const char* who) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch(std::string(who) + ": A must be square");
  }
  if (!a.allFinite()) {
    throw InvalidArgument(std::string(who) + ": A has non-finite entries");
  }
  const double abscissa = spectral_abscissa(a);
  if (!(abscissa < -kHurwitzMargin)) {
    throw UnstableMatrix(std::string(who) +
                         ": matrix is not Hurwitz (max Re eig = " +
                         format_number(abscissa) + ")");
  }
}

void require_zero_feedthrough(const ClosedLoopVertex& cl) {
  if (cl.dc.size() > 0 && cl.dc.cwiseAbs().maxCoeff() != 0.0) {
    throw NonzeroFeedthrough("closed loop has D != 0; its H2 norm is infinite");
  }
}

void check_closed_loop_shape(const ClosedLoopVertex& cl) {
  const Eigen::Index n = cl.ac.rows();
  if (cl.ac.cols() != n || cl.bc.rows() != n || cl.cc.cols() != n ||
      cl.dc.rows() != cl.cc.rows() || cl.dc.cols() != cl.bc.cols()) {
    throw DimensionMismatch("closed-loop blocks have inconsistent shapes");
  }
}

}  // namespace

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& q) {
  require_hurwitz(a, "solve_lyapunov");
  const Eigen::Index n = a.rows();
  if (q.rows() != n || q.cols() != n) {
    throw DimensionMismatch("solve_lyapunov: Q must match A");
  }
  const double q_scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * q_scale) {
    throw InvalidArgument("solve_lyapunov: Q must be symmetric");
  }

  // (I kron A + A kron I) vec(W) = -vec(Q), column-major vec.
  const Eigen::Index nn = n * n;
  Eigen::MatrixXd kron = Eigen::MatrixXd::Zero(nn, nn);
  for (Eigen::Index j = 0; j < n; ++j) {
    kron.block(j * n, j * n, n, n) += a;
    for (Eigen::Index i = 0; i < n; ++i) {
      kron.block(i * n, j * n, n, n).diagonal().array() += a(i, j);
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(kron);
  if (!(lu.rcond() > 1e3 * std::numeric_limits<double>::epsilon())) {
    throw IllConditioned("solve_lyapunov: Kronecker system is near-singular "
                         "(rcond = " + format_number(lu.rcond()) + ")");
  }
  const Eigen::VectorXd rhs =
      -Eigen::Map<const Eigen::VectorXd>(q.data(), nn);
  Eigen::VectorXd vec_w = lu.solve(rhs);
  vec_w += lu.solve(rhs - kron * vec_w);

  Eigen::MatrixXd w = Eigen::Map<Eigen::MatrixXd>(vec_w.data(), n, n);
  return 0.5 * (w + w.transpose());
}

double lyapunov_relative_residual(const Eigen::MatrixXd& a,
                                  const Eigen::MatrixXd& w,
                                  const Eigen::MatrixXd& q) {
  const double residual = (a * w + w * a.transpose() + q).norm();
  const double scale = a.norm() * w.norm() + q.norm();
  return scale > 0.0 ? residual / scale : residual;
}

Eigen::MatrixXd controllability_gramian(const Eigen::MatrixXd& ac,
                                        const Eigen::MatrixXd& bc) {
  if (bc.rows() != ac.rows()) {
    throw DimensionMismatch("controllability_gramian: Bc rows must match Ac");
  }
  return solve_lyapunov(ac, bc * bc.transpose());
}

double h2_norm(const ClosedLoopVertex& cl) {
  check_closed_loop_shape(cl);
  require_zero_feedthrough(cl);
  const Eigen::MatrixXd w = controllability_gramian(cl.ac, cl.bc);
  const double trace = (cl.cc * w * cl.cc.transpose()).trace();
  return std::sqrt(std::max(trace, 0.0));
}

double h2_norm_impulse_oracle(const ClosedLoopVertex& cl,
                              const ImpulseOracleOptions& options) {
  check_closed_loop_shape(cl);
  require_hurwitz(cl.ac, "h2_norm_impulse_oracle");
  require_zero_feedthrough(cl);

  Eigen::EigenSolver<Eigen::MatrixXd> eig(cl.ac, false);
  const double abscissa = eig.eigenvalues().real().maxCoeff();
  const double radius = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double min_horizon = 20.0 / std::abs(abscissa);

  double horizon = options.horizon > 0.0 ? options.horizon
                                         : 30.0 / std::abs(abscissa);
  if (horizon < min_horizon * (1.0 - 1e-12)) {
    throw InvalidArgument("impulse oracle horizon must be >= 20/|max Re eig|");
  }
  const double dt = options.dt > 0.0 ? options.dt : 0.01 / radius;

  auto intervals = static_cast<long>(std::ceil(horizon / dt));
  if (intervals % 2 != 0) ++intervals;
  const double h = horizon / static_cast<double>(intervals);

  const Eigen::MatrixXd step = (cl.ac * h).exp();
  Eigen::MatrixXd propagated = cl.bc;  // exp(Ac t_k) Bc
  double sum = 0.0;
  for (long k = 0; k <= intervals; ++k) {
    const double f = (cl.cc * propagated).squaredNorm();
    const double weight = (k == 0 || k == intervals) ? 1.0
                          : (k % 2 == 1)             ? 4.0
                                                     : 2.0;
    sum += weight * f;
    propagated = step * propagated;
  }
  return std::sqrt(std::max(sum * h / 3.0, 0.0));
}

bool StabilityCertificate::valid() const {
  if (!(x_min_eig > 0.0)) return false;
  return std::all_of(per_vertex_max_eig.begin(), per_vertex_max_eig.end(),
                     [this](double e) { return e < -margin; });
}

StabilityCertificate verify_quadratic_stability(
    const Eigen::MatrixXd& x, const std::vector<ClosedLoopVertex>& vertices,
    double margin) {
  StabilityCertificate cert;
  cert.x = 0.5 * (x + x.transpose());
  cert.margin = margin;
  const bool square = x.rows() == x.cols();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (!square || !x.allFinite()) {
    cert.x_min_eig = nan;
    cert.per_vertex_max_eig.assign(vertices.size(), nan);
    return cert;
  }
  cert.x_min_eig = x.size() == 0
                       ? nan
                       : Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                             cert.x, Eigen::EigenvaluesOnly)
                             .eigenvalues()
                             .minCoeff();
  for (const ClosedLoopVertex& v : vertices) {
    if (v.ac.rows() != x.rows() || v.ac.cols() != x.cols() ||
        !v.ac.allFinite()) {
      cert.per_vertex_max_eig.push_back(nan);
      continue;
    }
    const Eigen::MatrixXd lyap =
        v.ac.transpose() * cert.x + cert.x * v.ac;
    const Eigen::MatrixXd sym = 0.5 * (lyap + lyap.transpose());
    cert.per_vertex_max_eig.push_back(
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym,
                                                       Eigen::EigenvaluesOnly)
            .eigenvalues()
            .maxCoeff());
  }
  return cert;
}

}  // namespace lpvh2
