#include "lpvh2/sdp.h"

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "lpvh2/errors.h"

namespace lpvh2 {
namespace {

Eigen::MatrixXd random_symmetric(int d, std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = n(rng);
  return m + m.transpose();
}

// One-block problem from the matrices F0 + sum x_i F_i.
SdpProblem single_block(const Eigen::VectorXd& objective,
                        const Eigen::MatrixXd& f0,
                        const std::vector<Eigen::MatrixXd>& fi) {
  SdpProblem p;
  p.num_vars = static_cast<int>(objective.size());
  p.objective = objective;
  PsdConstraint c;
  c.dim = static_cast<int>(f0.rows());
  c.constant = svec(f0);
  c.coefficients.resize(svec_size(c.dim), p.num_vars);
  for (int i = 0; i < p.num_vars; ++i) c.coefficients.col(i) = svec(fi[i]);
  p.psd_constraints.push_back(c);
  return p;
}

TEST(SvecTest, RoundTripIsIdentityOnSymmetricMatrices) {
  std::mt19937 rng(7);
  for (int d = 1; d <= 6; ++d) {
    const Eigen::MatrixXd m = random_symmetric(d, rng);
    EXPECT_EQ(svec(m).size(), svec_size(d));
    EXPECT_LT((smat(svec(m)) - m).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(SvecTest, PreservesTraceInnerProduct) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 7;
    const Eigen::MatrixXd a = random_symmetric(d, rng);
    const Eigen::MatrixXd b = random_symmetric(d, rng);
    EXPECT_NEAR(svec(a).dot(svec(b)), (a * b).trace(),
                1e-12 * (1.0 + a.norm() * b.norm()));
  }
}

TEST(SvecTest, RejectsNonTriangularLength) {
  EXPECT_THROW(smat(Eigen::VectorXd::Zero(4)), DimensionMismatch);
}

TEST(SolveSdpTest, ScalarNonnegativityGivesZero) {
  const SdpProblem p = single_block(Eigen::VectorXd::Ones(1),
                                    Eigen::MatrixXd::Zero(1, 1),
                                    {Eigen::MatrixXd::Ones(1, 1)});
  const SdpSolution s = solve_sdp(p);
  ASSERT_EQ(s.status, SdpStatus::kOptimal) << s.message;
  EXPECT_NEAR(s.x(0), 0.0, 1e-7);
  EXPECT_TRUE(check_solution(p, s).feasible(1e-8));
}

TEST(SolveSdpTest, SchurComplementBoundary) {
  // minimize -x s.t. [[1, x], [x, 1]] >= 0  =>  x = 1.
  Eigen::MatrixXd f1(2, 2);
  f1 << 0, 1, 1, 0;
  const SdpProblem p = single_block(-Eigen::VectorXd::Ones(1),
                                    Eigen::MatrixXd::Identity(2, 2), {f1});
  const SdpSolution s = solve_sdp(p);
  ASSERT_EQ(s.status, SdpStatus::kOptimal) << s.message;
  EXPECT_NEAR(s.x(0), 1.0, 1e-6);
  EXPECT_LE(s.max_psd_violation, 1e-8);
  EXPECT_TRUE(check_solution(p, s).feasible(1e-8));
}

TEST(SolveSdpTest, MinimumEigenvalueProblemMatchesEigensolver) {
  // maximize t s.t. S - t I >= 0  =>  t = lambda_min(S).
  std::mt19937 rng(3);
  const Eigen::MatrixXd s_mat = random_symmetric(5, rng);
  const SdpProblem p =
      single_block(-Eigen::VectorXd::Ones(1), s_mat,
                   {-Eigen::MatrixXd::Identity(5, 5)});
  const SdpSolution s = solve_sdp(p);
  ASSERT_EQ(s.status, SdpStatus::kOptimal) << s.message;
  const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s_mat)
                          .eigenvalues()
                          .minCoeff();
  EXPECT_NEAR(s.x(0), lmin, 1e-7);
}

TEST(SolveSdpTest, VariableBoundsAreHonored) {
  SdpProblem p;
  p.num_vars = 2;
  p.objective = Eigen::Vector2d(2.0, -1.0);
  p.bounds = {{0, -2.0, 3.0}, {1, std::nullopt, 5.0}};
  // x1 <= x0 + 4 keeps the problem interesting.
  PsdConstraint c;
  c.dim = 1;
  c.constant = Eigen::VectorXd::Constant(1, 4.0);
  c.coefficients = Eigen::RowVector2d(1.0, -1.0);
  p.psd_constraints.push_back(c);
  const SdpSolution s = solve_sdp(p);
  ASSERT_EQ(s.status, SdpStatus::kOptimal) << s.message;
  EXPECT_NEAR(s.x(0), -2.0, 1e-6);
  EXPECT_NEAR(s.x(1), 2.0, 1e-6);
}

TEST(SolveSdpTest, DetectsInfeasibility) {
  // x >= 1 and x <= -1.
  SdpProblem p;
  p.num_vars = 1;
  p.objective = Eigen::VectorXd::Ones(1);
  p.bounds = {{0, 1.0, -1.0}};
  const SdpSolution s = solve_sdp(p);
  EXPECT_EQ(s.status, SdpStatus::kInfeasible) << s.message;
}

TEST(SolveSdpTest, DetectsInfeasibleLmi) {
  // [[x, 1], [1, -x]] >= 0 has no solution.
  Eigen::MatrixXd f0(2, 2), f1(2, 2);
  f0 << 0, 1, 1, 0;
  f1 << 1, 0, 0, -1;
  const SdpProblem p = single_block(Eigen::VectorXd::Ones(1), f0, {f1});
  EXPECT_EQ(solve_sdp(p).status, SdpStatus::kInfeasible);
}

TEST(SolveSdpTest, DetectsUnboundedness) {
  // minimize -x s.t. x >= 0.
  SdpProblem p;
  p.num_vars = 1;
  p.objective = -Eigen::VectorXd::Ones(1);
  p.bounds = {{0, 0.0, std::nullopt}};
  EXPECT_EQ(solve_sdp(p).status, SdpStatus::kUnbounded);
}

TEST(SolveSdpTest, IsDeterministic) {
  std::mt19937 rng(5);
  const Eigen::MatrixXd s_mat = random_symmetric(4, rng);
  Eigen::MatrixXd f1 = random_symmetric(4, rng);
  const SdpProblem p = single_block(Eigen::Vector2d(-1.0, 0.5), s_mat,
                                    {-Eigen::MatrixXd::Identity(4, 4), f1});
  const SdpSolution a = solve_sdp(p);
  const SdpSolution b = solve_sdp(p);
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.objective_value, b.objective_value);
  EXPECT_TRUE(a.x == b.x);
}

TEST(SolveSdpTest, IterationLimitIsReported) {
  Eigen::MatrixXd f1(2, 2);
  f1 << 0, 1, 1, 0;
  const SdpProblem p = single_block(-Eigen::VectorXd::Ones(1),
                                    Eigen::MatrixXd::Identity(2, 2), {f1});
  SdpTolerances tol;
  tol.max_iter = 2;
  EXPECT_EQ(solve_sdp(p, tol).status, SdpStatus::kIterationLimit);
}

TEST(SolveSdpTest, RejectsMalformedProblem) {
  SdpProblem p;
  p.num_vars = 2;
  p.objective = Eigen::VectorXd::Zero(1);
  EXPECT_THROW(solve_sdp(p), DimensionMismatch);
}

TEST(CheckSolutionTest, ReportsConstructedViolation) {
  Eigen::MatrixXd f1(2, 2);
  f1 << 0, 1, 1, 0;
  const SdpProblem p = single_block(-Eigen::VectorXd::Ones(1),
                                    Eigen::MatrixXd::Identity(2, 2), {f1});
  const SdpSolution s = solve_sdp(p);
  ASSERT_EQ(s.status, SdpStatus::kOptimal);
  EXPECT_TRUE(check_solution(p, s).feasible(1e-8));

  const double feas_tol = 1e-8;
  Eigen::VectorXd pushed = s.x;
  pushed(0) += 10.0 * feas_tol;
  const ViolationReport report = check_solution(p, pushed);
  EXPECT_FALSE(report.feasible(feas_tol));
  ASSERT_EQ(report.block_min_eig.size(), 1u);
  EXPECT_LT(report.block_min_eig[0], -feas_tol);
}

TEST(CheckSolutionTest, EmptyProblemHasEmptyReport) {
  SdpProblem p;
  p.num_vars = 1;
  p.objective = Eigen::VectorXd::Zero(1);
  const ViolationReport report = check_solution(p, Eigen::VectorXd::Zero(1));
  EXPECT_TRUE(report.block_min_eig.empty());
  EXPECT_EQ(report.max_violation, 0.0);
}

TEST(SdpDumpTest, RoundTripsThroughText) {
  std::mt19937 rng(9);
  SdpProblem p = single_block(Eigen::Vector2d(1.0, -0.25),
                              random_symmetric(3, rng),
                              {random_symmetric(3, rng),
                               Eigen::MatrixXd::Zero(3, 3)});
  p.psd_constraints[0].label = "demo";
  p.bounds = {{1, -1.0, std::nullopt}};
  std::stringstream ss;
  write_sdp_dump(ss, p);
  const SdpProblem q = read_sdp_dump(ss);
  EXPECT_EQ(q.num_vars, p.num_vars);
  EXPECT_EQ(q.psd_constraints[0].label, "demo");
  EXPECT_LT((q.objective - p.objective).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((q.psd_constraints[0].coefficients -
             p.psd_constraints[0].coefficients)
                .cwiseAbs()
                .maxCoeff(),
            1e-13);
  ASSERT_EQ(q.bounds.size(), 1u);
  EXPECT_FALSE(q.bounds[0].upper.has_value());
}

TEST(SdpDumpTest, ReportsLineOfError) {
  std::istringstream in("lpvh2-sdp 1\nnum_vars 2\nobjective 1 x\n");
  try {
    read_sdp_dump(in);
    FAIL() << "expected FileFormatError";
  } catch (const FileFormatError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

}  // namespace
}  // namespace lpvh2
