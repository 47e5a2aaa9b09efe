#include "covertlqr/design_trace.h"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "covertlqr/error.h"
#include "covertlqr/gramian_metrics.h"
#include "covertlqr/linalg.h"
#include "covertlqr/tradeoff_bounds.h"
#include "support.h"

namespace covertlqr {
namespace {

TEST(BuildProblem1, UnknownCount) {
  const LinearSystem sys = testing::DoubleIntegrator();
  const DesignWeights w = testing::DoubleIntegratorWeights(0.1);
  const sdp::Model m = BuildProblem1Sdp(sys, w, SolveCare(sys.A, sys.B, w.Q, w.R).P);
  EXPECT_EQ(m.num_unknowns(), 6);
  EXPECT_EQ(m.variable("S").count, 3);
  EXPECT_EQ(m.variable("Z").count, 1);
  EXPECT_EQ(m.variable("X").count, 2);
}

// 2 (a s + b x) + v = 0 in the scalar case.
TEST(BuildProblem1, ScalarEquality) {
  const testing::Scalar s{.a = 0.5, .b = 2.0, .v = 3.0};
  const sdp::Model m = BuildProblem1Sdp(s.System(), s.Weights(1.0),
                                        Eigen::MatrixXd::Constant(1, 1, s.PStar()));
  const Eigen::VectorXd z = m.Pack({{"S", Eigen::MatrixXd::Constant(1, 1, 0.7)},
                                    {"X", Eigen::MatrixXd::Constant(1, 1, -0.4)},
                                    {"Z", Eigen::MatrixXd::Constant(1, 1, 0.0)}});
  int equalities = 0;
  for (const auto& c : m.constraints()) {
    if (c.kind != sdp::ConstraintKind::kEquality) continue;
    ++equalities;
    EXPECT_NEAR(c.expr.Evaluate(z)(0, 0), 2 * (0.5 * 0.7 + 2.0 * -0.4) + 3.0, 1e-14);
  }
  EXPECT_EQ(equalities, 1);
}

TEST(SolveProblem1, ZeroBudgetGivesLqr) {
  const LinearSystem sys = testing::DoubleIntegrator();
  const DesignWeights w = testing::DoubleIntegratorWeights(0.0);
  const Problem1Result r = SolveProblem1(sys, w);
  const CareSolution care = SolveCare(sys.A, sys.B, w.Q, w.R);
  EXPECT_LT((r.design.K - care.K).cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_NEAR(r.design.J_o1, MetricJo1(ObservabilityGramian(sys, care.K, 0.0), w.V), 1e-8);
}

TEST(SolveProblem1, ScalarOracle) {
  const testing::Scalar s;
  const Problem1Result r = SolveProblem1(s.System(), s.Weights(1.0));
  const double f = testing::ScalarOptimalPole(s, 1.0);
  EXPECT_NEAR(r.design.K(0, 0), s.Gain(f), 1e-3);
  EXPECT_NEAR(r.design.K(0, 0), -5.3708, 1e-3);
  EXPECT_NEAR(r.design.J_o1, s.W(f) * s.v, 1e-3);
  EXPECT_NEAR(r.design.J_o1, 0.1144, 1e-3);
  EXPECT_NEAR(r.design.J_o1, r.sdp_objective, 1e-6 * r.sdp_objective);
}

TEST(SolveProblem1, RandomScalarInstances) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> pos(0.5, 2.0);
  std::uniform_real_distribution<double> drift(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const testing::Scalar s{drift(rng), pos(rng), pos(rng), pos(rng), pos(rng), pos(rng)};
    for (const double lambda : {0.1, 1.0, 10.0}) {
      SCOPED_TRACE(::testing::Message() << "trial " << trial << " lambda " << lambda);
      const Problem1Result r = SolveProblem1(s.System(), s.Weights(lambda));
      const double oracle = s.W(testing::ScalarOptimalPole(s, lambda)) * s.v;
      EXPECT_NEAR(r.design.J_o1, oracle, 1e-3 * oracle);
      // tr(W V) always improves with a faster loop, so the budget binds.
      EXPECT_NEAR(r.design.performance_slack, 0.0, 1e-4);
    }
  }
}

TEST(SolveProblem1, AuditsAndMonotoneSweep) {
  const LinearSystem sys = testing::DoubleIntegrator();
  const TradeoffAnalyzer an(sys, testing::DoubleIntegratorWeights(0.0));
  double previous = std::numeric_limits<double>::infinity();
  for (const double lambda : {0.0, 0.01, 0.05, 0.1, 0.5, 1.0, 2.0}) {
    SCOPED_TRACE(lambda);
    const DesignWeights w = testing::DoubleIntegratorWeights(lambda);
    const Problem1Result r = SolveProblem1(sys, w);
    EXPECT_TRUE(IsHurwitz(sys.ClosedLoop(r.design.K)).hurwitz);
    EXPECT_GE(r.design.performance_slack, -1e-6);
    EXPECT_LE(r.design.J_o1, previous + 1e-6);
    const TradeoffReport b = an.Evaluate(lambda);
    EXPECT_GE(r.design.J_o1, b.j1_lower - 1e-6);
    EXPECT_LE((r.design.K - an.stars().K_star).norm(), b.f_lambda + 1e-6);
    previous = r.design.J_o1;
  }
}

TEST(RecoverAndAudit, SMatchesControllabilityGramian) {
  const LinearSystem sys = testing::DoubleIntegrator();
  const DesignWeights w = testing::DoubleIntegratorWeights(0.1);
  const Problem1Result r = SolveProblem1(sys, w);
  const Eigen::MatrixXd S = SolveLyapunovCtrl(sys.ClosedLoop(r.design.K), w.V);
  EXPECT_LT((S - r.variables.S).norm(), 1e-6 * (1 + S.norm()));
}

TEST(RecoverAndAudit, RejectsSingularS) {
  const LinearSystem sys = testing::DoubleIntegrator();
  const DesignWeights w = testing::DoubleIntegratorWeights(0.1);
  Problem1Variables v{Eigen::MatrixXd::Zero(1, 2), Eigen::MatrixXd::Zero(2, 2),
                      Eigen::MatrixXd::Zero(1, 1)};
  EXPECT_THROW(RecoverAndAudit(v, sys, w, SolveCare(sys.A, sys.B, w.Q, w.R).P, 0.0), Error);
}

}  // namespace
}  // namespace covertlqr
