#pragma once

#include <optional>

#include <Eigen/Dense>

#include "covertlqr/system_model.h"

namespace covertlqr {

struct PerformanceCost {
  double J_s = 0.0;   // tr(P V)
  Eigen::MatrixXd P;  // (A+BK)^T P + P (A+BK) + Q + K^T R K = 0
};

/// LQR cost of the gain K under x0 ~ N(0, V). Throws "unstable gain" when
/// A + B K is not Hurwitz.
PerformanceCost ComputePerformanceCost(const LinearSystem& sys,
                                       const Eigen::MatrixXd& K,
                                       const Eigen::MatrixXd& Q,
                                       const Eigen::MatrixXd& R,
                                       const Eigen::MatrixXd& V);

/// Solves (A+BK)^T W + W (A+BK) + C^T C + epsilon I = 0.
Eigen::MatrixXd ObservabilityGramian(const LinearSystem& sys,
                                     const Eigen::MatrixXd& K,
                                     double epsilon = 0.0);

/// Same with an explicit sensing matrix, used for row-subset comparisons.
Eigen::MatrixXd ObservabilityGramian(const Eigen::MatrixXd& A_cl,
                                     const Eigen::MatrixXd& C,
                                     double epsilon);

/// tr(W V).
double MetricJo1(const Eigen::MatrixXd& W, const Eigen::MatrixXd& V);

/// True when lambda_min(W) <= 1e-12 * max(1, ||W||): the inverse metric is
/// then reported as unbounded.
bool IsNumericallySingular(const Eigen::MatrixXd& W);

/// -tr(W^{-1} V^{-1}), or nullopt ("unbounded") for a singular W.
std::optional<double> MetricJo2(const Eigen::MatrixXd& W,
                                const Eigen::MatrixXd& V);

/// Independent quadrature of int_0^inf e^{A^T t} Qs e^{A t} dt by the
/// composite Simpson rule with step 1e-3 / |min Re eig(A)|, truncated once
/// ||e^{A t}|| < horizon_tol. Test oracle for the Lyapunov solvers.
Eigen::MatrixXd GramianQuadrature(const Eigen::MatrixXd& A_cl,
                                  const Eigen::MatrixXd& Qs,
                                  double horizon_tol = 1e-12);

/// Table-row view of a Gramian.
struct GramianReport {
  double trace_W = 0.0;
  std::optional<double> trace_W_inv;   // nullopt = unbounded
  Eigen::VectorXd eigenvalues;         // descending
};

GramianReport EigenReport(const Eigen::MatrixXd& W);

}  // namespace covertlqr
