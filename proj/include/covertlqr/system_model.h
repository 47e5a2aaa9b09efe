#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace covertlqr {

/// Plant x' = A x + B u together with the adversary's sensing map y = C x.
struct LinearSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;

  int num_states() const { return static_cast<int>(A.rows()); }
  int num_inputs() const { return static_cast<int>(B.cols()); }
  int num_outputs() const { return static_cast<int>(C.rows()); }

  /// A + B K.
  Eigen::MatrixXd ClosedLoop(const Eigen::MatrixXd& K) const {
    return A + B * K;
  }
};

/// Cost weights, initial-state covariance and the knobs of both designers.
struct DesignWeights {
  Eigen::MatrixXd Q;  // state weight, PSD
  Eigen::MatrixXd R;  // input weight, PD
  Eigen::MatrixXd V;  // covariance of x0, PD
  double lambda = 0.0;    // performance-loss budget
  double epsilon = 1e-4;  // Gramian regularization
  double delta = 1e-3;    // convex-concave stopping tolerance
};

/// A synthesized gain with its certificates. `J_o2` is empty when the
/// Gramian is numerically singular ("unbounded").
struct ControllerDesign {
  Eigen::MatrixXd K;
  Eigen::MatrixXd P;
  Eigen::MatrixXd W;
  double J_s = 0.0;
  double J_o1 = 0.0;
  std::optional<double> J_o2;
  double performance_slack = 0.0;  // lambda - tr((P - P*) V)
};

/// Numerical rank: singular values above max(rows, cols) * sigma_max * 1e-12.
int NumericalRank(const Eigen::MatrixXd& M);

/// Kalman rank test on [B, AB, ..., A^{n-1}B]. Throws a configuration error
/// on inconsistent dimensions.
bool CheckControllability(const LinearSystem& sys);

/// Kalman rank test on the pair (A_cl, C).
bool CheckObservability(const Eigen::MatrixXd& A_cl, const Eigen::MatrixXd& C);

/// Dimension checks only; throws a configuration error naming the field.
void CheckDimensions(const LinearSystem& sys);

/// Outcome of Validate: one message per violated invariant, each prefixed
/// by the offending field.
struct ValidationReport {
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
  std::string Summary() const;
};

ValidationReport Validate(const LinearSystem& sys, const DesignWeights& w);

/// Throws a configuration error carrying the report summary when `Validate`
/// finds anything.
void ValidateOrThrow(const LinearSystem& sys, const DesignWeights& w);

}  // namespace covertlqr
