#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covertlqr/system_model.h"

namespace covertlqr {

/// LQR optimum and the Lyapunov solutions at the nominal closed loop
/// F* = A + B K*:
///   F* Z* + Z* F*^T + V = 0,  F* S* + S* F*^T + I = 0,
///   F*^T U* + U* F* + I = 0.
struct StarMatrices {
  Eigen::MatrixXd K_star;
  Eigen::MatrixXd P_star;
  Eigen::MatrixXd Z_star;
  Eigen::MatrixXd S_star;
  Eigen::MatrixXd U_star;
};

StarMatrices ComputeStarMatrices(const LinearSystem& sys,
                                 const Eigen::MatrixXd& Q,
                                 const Eigen::MatrixXd& R,
                                 const Eigen::MatrixXd& V);

/// Upper bound on ||K - K*|| for any gain meeting the budget lambda:
///   f = (lambda a + sqrt(lambda^2 a^2 + lambda d)) / d,
///   a = ||Z*|| ||V^{-1}|| ||B||,  d = lambda_min(Z*) lambda_min(R).
/// Written without the 1/lambda factor so that f(0) = 0 exactly.
double FLambda(double lambda, const StarMatrices& stars,
               const Eigen::MatrixXd& B, const Eigen::MatrixXd& R,
               const Eigen::MatrixXd& V);

/// Lower bound on the optimal tr(W V) under budget lambda.
double J1LowerBound(double lambda, double f_lambda, const StarMatrices& stars,
                    const Eigen::MatrixXd& B, const Eigen::MatrixXd& V,
                    double J1_at_zero);

struct LocalJ2Bound {
  double value = 0.0;
  bool valid = false;
  /// Same expression with tr((W_eps^0)^{-1} V^{-1}) in place of
  /// tr((W_eps^0)^{-1}) inside the outer fraction; equal when V = I.
  double value_trace_weighted = 0.0;
  bool valid_trace_weighted = false;
};

/// Local lower bound on the optimal -tr(W_eps^{-1} V^{-1}). `valid` holds iff
/// 1 - 2 tr(S*) f ||B|| > 0 and the outer denominator lies in (0, 1].
LocalJ2Bound J2LowerBoundLocal(double lambda, double f_lambda,
                               const StarMatrices& stars,
                               const Eigen::MatrixXd& B,
                               const Eigen::MatrixXd& V,
                               const Eigen::MatrixXd& W_eps_zero);

/// Global lower bound -2 tr(V^{-1}) (||A + B K*|| + ||B|| f) / epsilon.
double J2LowerBoundGlobal(double f_lambda, const Eigen::MatrixXd& B,
                          const Eigen::MatrixXd& V, double epsilon,
                          double A_clstar_norm);

struct TradeoffReport {
  double lambda = 0.0;
  double f_lambda = 0.0;
  double j1_lower = 0.0;
  double j2_lower_local = 0.0;
  bool j2_local_valid = false;
  double j2_lower_local_trace_weighted = 0.0;
  double j2_lower_global = 0.0;
  double j2_lower_best = 0.0;  // max(valid local, global)
};

/// Everything the bounds need that does not depend on lambda.
class TradeoffAnalyzer {
 public:
  TradeoffAnalyzer(const LinearSystem& sys, const DesignWeights& w);

  TradeoffReport Evaluate(double lambda) const;
  std::vector<TradeoffReport> Sweep(const std::vector<double>& lambdas) const;

  const StarMatrices& stars() const { return stars_; }
  double J1_at_zero() const { return J1_at_zero_; }
  double J2_at_zero() const { return J2_at_zero_; }
  const Eigen::MatrixXd& W_eps_zero() const { return W_eps_zero_; }

 private:
  LinearSystem sys_;
  DesignWeights w_;
  StarMatrices stars_;
  Eigen::MatrixXd W_eps_zero_;
  double J1_at_zero_ = 0.0;
  double J2_at_zero_ = 0.0;
  double A_clstar_norm_ = 0.0;
};

struct SubsetMonotonicityReport {
  double J_o1_full = 0.0;
  double J_o1_subset = 0.0;
  std::optional<double> J_o2_full;
  std::optional<double> J_o2_subset;
  bool o1_holds = false;
  std::optional<bool> o2_holds;  // empty when a metric is unbounded
  std::string note;

  bool passed() const { return o1_holds && o2_holds.value_or(true); }
};

/// Compares both metrics for the sensing matrix C and a row subset C_hat,
/// where C_hat.row(i) == sys.C.row(row_map[i]). Ordering is checked with a
/// 1e-9 relative slack. Throws a configuration error when row_map does not
/// describe C_hat.
SubsetMonotonicityReport SubsetMonotonicityCheck(
    const LinearSystem& sys, const Eigen::MatrixXd& K,
    const Eigen::MatrixXd& V, const Eigen::MatrixXd& C_hat,
    const std::vector<int>& row_map);

}  // namespace covertlqr
