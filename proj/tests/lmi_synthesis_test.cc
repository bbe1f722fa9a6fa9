#include "lpvh2/lmi_synthesis.h"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "lpvh2/errors.h"
#include "lpvh2/h2_analysis.h"
#include "test_systems.h"

namespace lpvh2 {
namespace {

using testing::double_integrator_demo;
using testing::rotorcraft_error_plant;
using testing::scalar_demo;
using testing::unstabilizable_demo;

double max_real_eig(const Eigen::MatrixXd& a) {
  return Eigen::EigenSolver<Eigen::MatrixXd>(a, false)
      .eigenvalues()
      .real()
      .maxCoeff();
}

double min_sym_eig(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
             0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

TEST(VariableLayoutTest, CountsVariables) {
  const VariableLayout layout(2, 1, 2);
  EXPECT_EQ(layout.num_vars(), 3 + 2 + 3 + 1);
  EXPECT_EQ(layout.gamma_sq_index(), 8);
}

TEST(VariableLayoutTest, PackUnpackRoundTrip) {
  const VariableLayout layout(3, 2, 4);
  std::mt19937 rng(1);
  DecisionVariables v;
  const Eigen::MatrixXd x = testing::random_matrix(3, 3, rng);
  const Eigen::MatrixXd y = testing::random_matrix(4, 4, rng);
  v.x = x + x.transpose();
  v.w = testing::random_matrix(2, 3, rng);
  v.y = y + y.transpose();
  v.gamma_sq = 2.5;
  const Eigen::VectorXd packed = layout.pack(v);
  ASSERT_EQ(packed.size(), layout.num_vars());
  const DecisionVariables u = layout.unpack(packed);
  EXPECT_LT((u.x - v.x).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((u.w - v.w).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((u.y - v.y).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(u.gamma_sq, 2.5);
}

TEST(AssembleLmisTest, BlockCountsAndShapes) {
  const PolytopicLpvPlant plant = rotorcraft_error_plant();
  const auto vertices = instantiate_vertices(plant);
  const auto blocks = assemble_lmis(vertices, 1e-7);
  ASSERT_EQ(blocks.size(), 2u * vertices.size() + 2u);
  const VariableLayout layout(5, 3, 8);
  for (const LmiBlock& b : blocks) {
    EXPECT_EQ(b.coefficients.size(),
              static_cast<std::size_t>(layout.num_vars()));
    switch (b.kind) {
      case LmiBlock::Kind::kSyn1: EXPECT_EQ(b.dim, 5 + 5); break;
      case LmiBlock::Kind::kSyn2: EXPECT_EQ(b.dim, 8 + 5); break;
      case LmiBlock::Kind::kXPositive: EXPECT_EQ(b.dim, 5); break;
      case LmiBlock::Kind::kTrace: EXPECT_EQ(b.dim, 1); break;
    }
  }
}

TEST(AssembleLmisTest, MatchesHandAssembledBlocks) {
  // Evaluate at random decision variables and compare against the block
  // matrices written out directly.
  std::mt19937 rng(17);
  LpvVertexSystem s = LpvVertexSystem::zeros(3, 2, 2, 4);
  s.a = testing::random_matrix(3, 3, rng);
  s.bw = testing::random_matrix(3, 2, rng);
  s.b = testing::random_matrix(3, 2, rng);
  s.c = testing::random_matrix(4, 3, rng);
  s.e = testing::random_matrix(4, 2, rng);
  const double eps = 1e-3;
  const auto blocks = assemble_lmis({s}, eps);
  const VariableLayout layout(3, 2, 4);

  DecisionVariables v;
  Eigen::MatrixXd x = testing::random_matrix(3, 3, rng);
  Eigen::MatrixXd y = testing::random_matrix(4, 4, rng);
  v.x = x + x.transpose();
  v.y = y + y.transpose();
  v.w = testing::random_matrix(2, 3, rng);
  v.gamma_sq = 1.7;
  const Eigen::VectorXd packed = layout.pack(v);

  Eigen::MatrixXd syn1(5, 5);
  syn1 << s.a * v.x + v.x * s.a.transpose() + s.b * v.w +
              v.w.transpose() * s.b.transpose(),
      s.bw, s.bw.transpose(), -Eigen::MatrixXd::Identity(2, 2);
  syn1 = -syn1 - eps * Eigen::MatrixXd::Identity(5, 5);
  const Eigen::MatrixXd cxew = s.c * v.x + s.e * v.w;
  Eigen::MatrixXd syn2(7, 7);
  syn2 << v.y, cxew, cxew.transpose(), v.x;
  syn2 -= eps * Eigen::MatrixXd::Identity(7, 7);

  int seen = 0;
  for (const LmiBlock& b : blocks) {
    const Eigen::MatrixXd got = b.evaluate(packed);
    Eigen::MatrixXd want;
    switch (b.kind) {
      case LmiBlock::Kind::kSyn1: want = syn1; break;
      case LmiBlock::Kind::kSyn2: want = syn2; break;
      case LmiBlock::Kind::kXPositive:
        want = v.x - eps * Eigen::MatrixXd::Identity(3, 3);
        break;
      case LmiBlock::Kind::kTrace:
        want = Eigen::MatrixXd::Constant(1, 1, 1.7 - v.y.trace() - eps);
        break;
    }
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-12) << to_string(b.kind);
    ++seen;
  }
  EXPECT_EQ(seen, 4);
}

TEST(AssembleLmisTest, RejectsFeedthrough) {
  LpvVertexSystem s = scalar_demo();
  s.d(0, 0) = 1.0;
  EXPECT_THROW(assemble_lmis({s}, 1e-7), NonzeroFeedthrough);
}

TEST(AssembleLmisTest, RejectsMixedShapes) {
  EXPECT_THROW(assemble_lmis({scalar_demo(), double_integrator_demo()}, 1e-7),
               DimensionMismatch);
}

TEST(RiccatiOracleTest, ScalarClosedForm) {
  const RiccatiH2Solution r = riccati_h2_oracle(scalar_demo());
  const double p = 1.0 + std::sqrt(2.0);
  EXPECT_NEAR(r.p(0, 0), p, 1e-12);
  EXPECT_NEAR(r.k(0, 0), -p, 1e-12);
  EXPECT_NEAR(r.gamma * r.gamma, p, 1e-12);
}

TEST(RiccatiOracleTest, DoubleIntegratorClosedForm) {
  const RiccatiH2Solution r = riccati_h2_oracle(double_integrator_demo());
  const double s2 = std::sqrt(2.0);
  Eigen::Matrix2d p;
  p << s2, 1.0, 1.0, s2;
  EXPECT_LT((r.p - p).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(r.k(0, 0), -1.0, 1e-10);
  EXPECT_NEAR(r.k(0, 1), -s2, 1e-10);
  EXPECT_NEAR(r.gamma * r.gamma, 2.0 * s2, 1e-10);
}

TEST(RiccatiOracleTest, GammaEqualsClosedLoopNorm) {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    LpvVertexSystem s = LpvVertexSystem::zeros(4, 2, 2, 6);
    s.a = testing::random_matrix(4, 4, rng);
    s.b = testing::random_matrix(4, 2, rng);
    s.bw = testing::random_matrix(4, 2, rng);
    s.c.topRows(4) = testing::random_matrix(4, 4, rng);
    s.e.bottomRows(2) = Eigen::Matrix2d::Identity();
    const RiccatiH2Solution r = riccati_h2_oracle(s);
    const ClosedLoopVertex cl = close_loop(s, r.k);
    EXPECT_LT(max_real_eig(cl.ac), 0.0);
    EXPECT_NEAR(h2_norm(cl), r.gamma,
                1e-8 * (1.0 + r.gamma));
  }
}

TEST(RiccatiOracleTest, SingularInputWeightIsIrregular) {
  LpvVertexSystem s = scalar_demo();
  s.e.setZero();
  EXPECT_THROW(riccati_h2_oracle(s), RegularityViolated);
}

TEST(SynthesizeTest, ScalarDemoReachesClosedForm) {
  SynthesisOptions options;
  options.epsilon = 1e-9;
  const SynthesisResult r = synthesize({scalar_demo()}, options);
  EXPECT_NEAR(r.gamma * r.gamma, 1.0 + std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(r.k(0, 0), -(1.0 + std::sqrt(2.0)), 1e-3);
}

TEST(SynthesizeTest, SingleVertexMatchesRiccati) {
  for (const LpvVertexSystem& s : {scalar_demo(), double_integrator_demo()}) {
    const SynthesisResult r = synthesize({s});
    const double opt = riccati_h2_oracle(s).gamma;
    EXPECT_GE(r.gamma, opt * (1.0 - 1e-6));
    EXPECT_LE(r.gamma, opt * 1.05);
    EXPECT_FALSE(r.ill_conditioned);
  }
}

TEST(SynthesizeTest, DoubleIntegratorGainNearRiccati) {
  SynthesisOptions options;
  options.epsilon = 1e-9;
  const SynthesisResult r = synthesize({double_integrator_demo()}, options);
  EXPECT_NEAR(r.gamma * r.gamma, 2.0 * std::sqrt(2.0), 1e-5);
  EXPECT_NEAR(r.k(0, 0), -1.0, 1e-2);
  EXPECT_NEAR(r.k(0, 1), -std::sqrt(2.0), 1e-2);
}

TEST(SynthesizeTest, DuplicateVerticesDoNotChangeResult) {
  const SynthesisResult once = synthesize({double_integrator_demo()});
  const SynthesisResult twice =
      synthesize({double_integrator_demo(), double_integrator_demo()});
  EXPECT_NEAR(once.gamma, twice.gamma, 1e-6 * once.gamma);
}

TEST(SynthesizeTest, UnstabilizablePlantIsInfeasible) {
  EXPECT_THROW(synthesize({unstabilizable_demo()}), Infeasible);
}

TEST(SynthesizeTest, GammaIsMonotoneInEpsilon) {
  double previous = 0.0;
  for (double eps : {1e-8, 1e-6, 1e-4}) {
    SynthesisOptions options;
    options.epsilon = eps;
    const SynthesisResult r = synthesize({double_integrator_demo()}, options);
    EXPECT_GE(r.gamma, previous - 1e-9);
    previous = r.gamma;
  }
}

TEST(SynthesizeTest, PolytopicResultIsCertified) {
  const PolytopicLpvPlant plant = rotorcraft_error_plant();
  const SynthesisResult r = synthesize(plant);
  ASSERT_EQ(r.vertices.size(), 4u);

  const auto vertices = instantiate_vertices(plant);
  const auto closed = close_loop(vertices, r.k);
  const StabilityCertificate cert =
      verify_quadratic_stability(r.x.inverse(), closed, 0.0);
  EXPECT_TRUE(cert.valid());
  for (const ClosedLoopVertex& cl : closed) {
    EXPECT_LT(h2_norm(cl), r.gamma);
    // Invariant: the certificate implies a Hurwitz vertex.
    EXPECT_LT(max_real_eig(cl.ac), 0.0);
  }
  EXPECT_GT(min_sym_eig(r.x), 0.0);
  EXPECT_LE(r.y.trace(), r.gamma * r.gamma);

  // The common X also certifies the vertex-wise performance bound.
  for (const LpvVertexSystem& v : vertices) {
    EXPECT_LE(riccati_h2_oracle(v).gamma, r.gamma * (1.0 + 1e-9));
  }
}

TEST(SynthesizeTest, PolytopicGainStabilizesInterior) {
  const PolytopicLpvPlant plant = rotorcraft_error_plant();
  const SynthesisResult r = synthesize(plant);
  std::mt19937 rng(29);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Vector2d xi(-0.5 + u01(rng), 0.8 + 0.4 * u01(rng));
    const LpvVertexSystem s = evaluate(plant, xi);
    EXPECT_LT(max_real_eig(s.a + s.b * r.k), 0.0);
  }
}

}  // namespace
}  // namespace lpvh2
