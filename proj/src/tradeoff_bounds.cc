#include "covertlqr/tradeoff_bounds.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "covertlqr/error.h"
#include "covertlqr/gramian_metrics.h"
#include "covertlqr/linalg.h"

namespace covertlqr {
namespace {

Eigen::MatrixXd Inverse(const Eigen::MatrixXd& M) {
  return Symmetrize(M).llt().solve(
      Eigen::MatrixXd::Identity(M.rows(), M.cols()));
}

}  // namespace

StarMatrices ComputeStarMatrices(const LinearSystem& sys,
                                 const Eigen::MatrixXd& Q,
                                 const Eigen::MatrixXd& R,
                                 const Eigen::MatrixXd& V) {
  const CareSolution care = SolveCare(sys.A, sys.B, Q, R);
  const Eigen::MatrixXd F = sys.ClosedLoop(care.K);
  const auto n = sys.A.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  StarMatrices s;
  s.K_star = care.K;
  s.P_star = care.P;
  s.Z_star = SolveLyapunovCtrl(F, V);
  s.S_star = SolveLyapunovCtrl(F, I);
  s.U_star = SolveLyapunovObs(F, I);
  return s;
}

double FLambda(double lambda, const StarMatrices& stars,
               const Eigen::MatrixXd& B, const Eigen::MatrixXd& R,
               const Eigen::MatrixXd& V) {
  if (lambda <= 0.0) return 0.0;
  const double a = SpectralNorm(stars.Z_star) * SpectralNorm(Inverse(V)) *
                   SpectralNorm(B);
  const double d = MinEigenvalue(stars.Z_star) * MinEigenvalue(R);
  return (lambda * a + std::sqrt(lambda * lambda * a * a + lambda * d)) / d;
}

double J1LowerBound(double /*lambda*/, double f_lambda,
                    const StarMatrices& stars, const Eigen::MatrixXd& B,
                    const Eigen::MatrixXd& V, double J1_at_zero) {
  const double denom = 1.0 + 2.0 * stars.Z_star.trace() * f_lambda *
                                 SpectralNorm(Inverse(V)) * SpectralNorm(B);
  return J1_at_zero / denom;
}

LocalJ2Bound J2LowerBoundLocal(double /*lambda*/, double f_lambda,
                               const StarMatrices& stars,
                               const Eigen::MatrixXd& B,
                               const Eigen::MatrixXd& V,
                               const Eigen::MatrixXd& W_eps_zero) {
  const Eigen::MatrixXd V_inv = Inverse(V);
  const Eigen::MatrixXd W0_inv = Inverse(W_eps_zero);
  const double J2_zero = -(W0_inv * V_inv).trace();
  const Eigen::VectorXd v_eig = SymmetricEigenvaluesDescending(V);
  const double kappa_V = v_eig(0) / v_eig(v_eig.size() - 1);
  const double norm_B = SpectralNorm(B);

  const double inner = 1.0 - 2.0 * stars.S_star.trace() * f_lambda * norm_B;
  const double common = 2.0 * kappa_V * f_lambda * SpectralNorm(V) * norm_B *
                        SpectralNorm(stars.U_star) * W_eps_zero.trace();

  auto evaluate = [&](double inverse_trace, double* value, bool* valid) {
    // The formula value is kept for reporting even outside its validity
    // regime; NaN when the inner denominator is not positive.
    *valid = false;
    *value = std::numeric_limits<double>::quiet_NaN();
    if (!(inner > 0.0)) return;
    const double outer = 1.0 - common * inverse_trace / inner;
    *value = J2_zero / outer;
    *valid = outer > 0.0 && outer <= 1.0;
  };
  LocalJ2Bound out;
  evaluate(W0_inv.trace(), &out.value, &out.valid);
  evaluate((W0_inv * V_inv).trace(), &out.value_trace_weighted,
           &out.valid_trace_weighted);
  return out;
}

double J2LowerBoundGlobal(double f_lambda, const Eigen::MatrixXd& B,
                          const Eigen::MatrixXd& V, double epsilon,
                          double A_clstar_norm) {
  return -2.0 * Inverse(V).trace() *
         (A_clstar_norm + SpectralNorm(B) * f_lambda) / epsilon;
}

TradeoffAnalyzer::TradeoffAnalyzer(const LinearSystem& sys,
                                   const DesignWeights& w)
    : sys_(sys), w_(w) {
  ValidateOrThrow(sys, w);
  stars_ = ComputeStarMatrices(sys, w.Q, w.R, w.V);
  const Eigen::MatrixXd W0 = ObservabilityGramian(sys, stars_.K_star, 0.0);
  J1_at_zero_ = MetricJo1(W0, w.V);
  W_eps_zero_ = ObservabilityGramian(sys, stars_.K_star, w.epsilon);
  J2_at_zero_ = -(Inverse(W_eps_zero_) * Inverse(w.V)).trace();
  A_clstar_norm_ = SpectralNorm(sys.ClosedLoop(stars_.K_star));
}

TradeoffReport TradeoffAnalyzer::Evaluate(double lambda) const {
  if (!(lambda >= 0.0)) throw ConfigError("lambda negative");
  TradeoffReport r;
  r.lambda = lambda;
  r.f_lambda = FLambda(lambda, stars_, sys_.B, w_.R, w_.V);
  r.j1_lower =
      J1LowerBound(lambda, r.f_lambda, stars_, sys_.B, w_.V, J1_at_zero_);
  const LocalJ2Bound local =
      J2LowerBoundLocal(lambda, r.f_lambda, stars_, sys_.B, w_.V, W_eps_zero_);
  r.j2_lower_local = local.value;
  r.j2_local_valid = local.valid;
  r.j2_lower_local_trace_weighted = local.value_trace_weighted;
  r.j2_lower_global =
      J2LowerBoundGlobal(r.f_lambda, sys_.B, w_.V, w_.epsilon, A_clstar_norm_);
  r.j2_lower_best = local.valid
                        ? std::max(local.value, r.j2_lower_global)
                        : r.j2_lower_global;
  return r;
}

std::vector<TradeoffReport> TradeoffAnalyzer::Sweep(
    const std::vector<double>& lambdas) const {
  std::vector<TradeoffReport> out;
  out.reserve(lambdas.size());
  for (double lambda : lambdas) out.push_back(Evaluate(lambda));
  return out;
}

SubsetMonotonicityReport SubsetMonotonicityCheck(
    const LinearSystem& sys, const Eigen::MatrixXd& K,
    const Eigen::MatrixXd& V, const Eigen::MatrixXd& C_hat,
    const std::vector<int>& row_map) {
  const auto n = sys.A.rows();
  if (C_hat.cols() != n || static_cast<std::size_t>(C_hat.rows()) != row_map.size()) {
    throw ConfigError("row_map inconsistent with C_hat shape");
  }
  std::set<int> distinct;
  for (std::size_t i = 0; i < row_map.size(); ++i) {
    const int r = row_map[i];
    if (r < 0 || r >= sys.C.rows() || !distinct.insert(r).second) {
      throw ConfigError("row_map entry " + std::to_string(r) + " invalid");
    }
    const double scale = std::max(1.0, sys.C.row(r).norm());
    if ((C_hat.row(static_cast<Eigen::Index>(i)) - sys.C.row(r)).norm() >
        1e-12 * scale) {
      throw ConfigError("C_hat row " + std::to_string(i) +
                        " does not match C row " + std::to_string(r));
    }
  }

  const Eigen::MatrixXd A_cl = sys.ClosedLoop(K);
  const Eigen::MatrixXd W_full = ObservabilityGramian(A_cl, sys.C, 0.0);
  const Eigen::MatrixXd W_sub = ObservabilityGramian(A_cl, C_hat, 0.0);

  SubsetMonotonicityReport rep;
  rep.J_o1_full = MetricJo1(W_full, V);
  rep.J_o1_subset = MetricJo1(W_sub, V);
  rep.o1_holds = rep.J_o1_subset <=
                 rep.J_o1_full + 1e-9 * std::max(1.0, std::abs(rep.J_o1_full));
  rep.J_o2_full = MetricJo2(W_full, V);
  rep.J_o2_subset = MetricJo2(W_sub, V);
  if (rep.J_o2_full && rep.J_o2_subset) {
    rep.o2_holds = *rep.J_o2_subset <=
                   *rep.J_o2_full + 1e-9 * std::max(1.0, std::abs(*rep.J_o2_full));
  } else {
    rep.note = "J_o2 comparison skipped: unbounded";
  }
  return rep;
}

}  // namespace covertlqr
