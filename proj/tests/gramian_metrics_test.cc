#include "covertlqr/gramian_metrics.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "covertlqr/error.h"
#include "covertlqr/linalg.h"
#include "support.h"

namespace covertlqr {
namespace {

constexpr double kSqrt2 = 1.4142135623730951;

TEST(PerformanceCost, ScalarAtOptimum) {
  const testing::Scalar s;
  const DesignWeights w = s.Weights(0.0);
  const Eigen::MatrixXd K = Eigen::MatrixXd::Constant(1, 1, -(1 + kSqrt2));
  const PerformanceCost c = ComputePerformanceCost(s.System(), K, w.Q, w.R, w.V);
  EXPECT_NEAR(c.J_s, 1 + kSqrt2, 1e-10);
}

TEST(PerformanceCost, ScalarAwayFromOptimum) {
  const testing::Scalar s;
  const DesignWeights w = s.Weights(0.0);
  const double k = -5.3708;
  const PerformanceCost c =
      ComputePerformanceCost(s.System(), Eigen::MatrixXd::Constant(1, 1, k), w.Q, w.R, w.V);
  EXPECT_NEAR(c.P(0, 0), (1 + k * k) / (2 * (-1 - k)), 1e-10);
  EXPECT_NEAR(c.P(0, 0), s.PStar() + 1.0, 1e-3);
}

TEST(PerformanceCost, DoubleIntegratorOptimum) {
  const LinearSystem sys = testing::DoubleIntegrator();
  const DesignWeights w = testing::DoubleIntegratorWeights(0.0);
  const CareSolution care = SolveCare(sys.A, sys.B, w.Q, w.R);
  const PerformanceCost c = ComputePerformanceCost(sys, care.K, w.Q, w.R, w.V);
  EXPECT_NEAR(c.J_s, (care.P * w.V).trace(), 1e-9);
}

TEST(PerformanceCost, RejectsUnstableGain) {
  const testing::Scalar s;
  const DesignWeights w = s.Weights(0.0);
  EXPECT_THROW(ComputePerformanceCost(s.System(), Eigen::MatrixXd::Zero(1, 1), w.Q, w.R, w.V), Error);
}

TEST(Gramian, Scalar) {
  const testing::Scalar s;
  const Eigen::MatrixXd K = Eigen::MatrixXd::Constant(1, 1, -kSqrt2 - 1);
  EXPECT_NEAR(ObservabilityGramian(s.System(), K, 0.0)(0, 0), 1 / (2 * kSqrt2), 1e-12);
}

TEST(Gramian, ZeroOutput) {
  LinearSystem sys = testing::DoubleIntegrator();
  sys.C = Eigen::MatrixXd::Zero(1, 2);
  const Eigen::MatrixXd K = (Eigen::MatrixXd(1, 2) << -1, -1).finished();
  EXPECT_LT(ObservabilityGramian(sys, K, 0.0).norm(), 1e-15);
}

TEST(Gramian, EpsilonIsAdditive) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd F = testing::RandomHurwitz(3, rng);
    const Eigen::MatrixXd C = testing::RandomMatrix(1, 3, rng);
    const Eigen::MatrixXd W0 = ObservabilityGramian(F, C, 0.0);
    const Eigen::MatrixXd We = ObservabilityGramian(F, C, 1e-4);
    const Eigen::MatrixXd D = SolveLyapunovObs(F, 1e-4 * Eigen::MatrixXd::Identity(3, 3));
    EXPECT_LT((We - W0 - D).norm(), 1e-10 * (1 + We.norm()));
    EXPECT_GE(MinEigenvalue(We - W0), -1e-12);
    EXPECT_TRUE(MetricJo2(We, Eigen::MatrixXd::Identity(3, 3)).has_value());
  }
}

TEST(Metrics, Identity) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_DOUBLE_EQ(MetricJo1(I, I), 3.0);
  ASSERT_TRUE(MetricJo2(I, I).has_value());
  EXPECT_DOUBLE_EQ(*MetricJo2(I, I), -3.0);
}

TEST(Metrics, SingularIsUnbounded) {
  const Eigen::MatrixXd W = Eigen::Vector2d(2, 1e-15).asDiagonal();
  EXPECT_TRUE(IsNumericallySingular(W));
  EXPECT_FALSE(MetricJo2(W, Eigen::MatrixXd::Identity(2, 2)).has_value());
}

TEST(Metrics, TraceInequality) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 4;
    const Eigen::MatrixXd W = testing::RandomPd(n, rng, 1e-3);
    const Eigen::MatrixXd V = testing::RandomPd(n, rng, 1e-3);
    const double lhs = -*MetricJo2(W, V);
    EXPECT_GE(lhs * (1 + 1e-12), n * n / MetricJo1(W, V));
  }
}

// tr(W V) is the output energy averaged over x0 with covariance V.
TEST(Metrics, EnergyIdentity) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd F = testing::RandomHurwitz(3, rng);
    const Eigen::MatrixXd C = testing::RandomMatrix(2, 3, rng);
    const Eigen::MatrixXd V = testing::RandomPd(3, rng);
    const double lyap = MetricJo1(ObservabilityGramian(F, C, 0.0), V);
    const double quad = (testing::QuadratureGramian(F, C.transpose() * C) * V).trace();
    EXPECT_NEAR(lyap, quad, 1e-5 * std::abs(quad));
  }
}

TEST(Quadrature, MatchesIndependentOracle) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd F = testing::RandomHurwitz(4, rng);
    const Eigen::MatrixXd Q = testing::RandomPd(4, rng);
    EXPECT_LT((GramianQuadrature(F, Q) - testing::QuadratureGramian(F, Q)).norm(),
              1e-6 * (1 + Q.norm()));
  }
}

TEST(EigenReport, RowShape) {
  const GramianReport r = EigenReport(Eigen::Vector3d(1, 3, 2).asDiagonal());
  EXPECT_DOUBLE_EQ(r.trace_W, 6.0);
  ASSERT_TRUE(r.trace_W_inv.has_value());
  EXPECT_NEAR(*r.trace_W_inv, 1 + 1.0 / 3 + 0.5, 1e-14);
  EXPECT_DOUBLE_EQ(r.eigenvalues(0), 3.0);
  EXPECT_DOUBLE_EQ(r.eigenvalues(2), 1.0);
  EXPECT_FALSE(EigenReport(Eigen::Vector2d(1, 0).asDiagonal()).trace_W_inv.has_value());
}

}  // namespace
}  // namespace covertlqr
