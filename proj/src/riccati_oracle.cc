#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "lpvh2/errors.h"
#include "lpvh2/lmi_synthesis.h"
#include "lpvh2/numeric_format.h"

namespace lpvh2 {

RiccatiH2Solution riccati_h2_oracle(const LpvVertexSystem& vertex) {
  vertex.validate();
  if (vertex.d.size() > 0 && vertex.d.cwiseAbs().maxCoeff() != 0.0) {
    throw NonzeroFeedthrough("Riccati oracle requires D = 0");
  }
  const Eigen::Index n = vertex.num_states();
  const Eigen::MatrixXd r = vertex.e.transpose() * vertex.e;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> r_eig(r, Eigen::EigenvaluesOnly);
  const double r_max = r.size() > 0 ? r_eig.eigenvalues().maxCoeff() : 0.0;
  if (r.size() == 0 || !(r_eig.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, r_max))) {
    throw RegularityViolated("E'E is singular; the H2 problem is not regular");
  }
  const Eigen::MatrixXd r_inv = r.inverse();
  const Eigen::MatrixXd s = vertex.c.transpose() * vertex.e;

  // Remove the cross term: A~ = A - B R^-1 S', Q~ = C'C - S R^-1 S'.
  const Eigen::MatrixXd a_t = vertex.a - vertex.b * r_inv * s.transpose();
  const Eigen::MatrixXd q_t =
      vertex.c.transpose() * vertex.c - s * r_inv * s.transpose();
  const Eigen::MatrixXd g = vertex.b * r_inv * vertex.b.transpose();

  Eigen::MatrixXd h(2 * n, 2 * n);
  h << a_t, -g, -q_t, -a_t.transpose();

  Eigen::ComplexEigenSolver<Eigen::MatrixXd> eig(h);
  if (eig.info() != Eigen::Success) {
    throw RegularityViolated("Hamiltonian eigen-decomposition failed");
  }
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> stable;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    const double re = eig.eigenvalues()(i).real();
    if (std::abs(re) <= 1e-9 * scale) {
      throw RegularityViolated(
          "Hamiltonian has an eigenvalue on the imaginary axis");
    }
    if (re < 0.0) stable.push_back(i);
  }
  if (static_cast<Eigen::Index>(stable.size()) != n) {
    throw RegularityViolated("Hamiltonian stable subspace has wrong dimension");
  }
  Eigen::MatrixXcd basis(2 * n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    basis.col(k) = eig.eigenvectors().col(stable[static_cast<std::size_t>(k)]);
  }
  const Eigen::MatrixXcd u1 = basis.topRows(n);
  const Eigen::MatrixXcd u2 = basis.bottomRows(n);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(u1);
  if (!lu.isInvertible()) {
    throw RegularityViolated("stable subspace is not a graph; no stabilizing "
                             "Riccati solution");
  }
  // P U1 = U2.
  Eigen::MatrixXd p = (u2 * lu.inverse()).real();
  p = 0.5 * (p + p.transpose());

  RiccatiH2Solution solution;
  solution.p = p;
  solution.k = -r_inv * (vertex.b.transpose() * p + s.transpose());
  solution.gamma = std::sqrt(
      std::max(0.0, (vertex.bw.transpose() * p * vertex.bw).trace()));
  return solution;
}

}  // namespace lpvh2
