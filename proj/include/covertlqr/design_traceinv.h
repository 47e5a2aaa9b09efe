#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covertlqr/sdp.h"
#include "covertlqr/system_model.h"

namespace covertlqr {

struct CcpIterate {
  Eigen::MatrixXd K;
  Eigen::MatrixXd P;
  Eigen::MatrixXd Y;
  double objective = 0.0;  // -tr(Y V^{-1})
  int iteration = 0;
};

/// One line of the optional iterate-history dump.
struct CcpHistoryRow {
  int iteration = 0;
  double objective = 0.0;
  double trace_difference = 0.0;  // tr(Y_j - Y_{j-1}); 0 for j = 0
  double budget_slack = 0.0;      // lambda - tr((P_j - P*) V)
  int solver_iterations = 0;
  bool inexact = false;  // accepted from an unconverged but feasible solve
};

struct CcpResult {
  Eigen::MatrixXd K_hat;
  Eigen::MatrixXd P_hat;
  Eigen::MatrixXd Y_hat;
  int iterations = 0;
  bool converged = false;
  double J2_reported = 0.0;  // -tr(Y_hat V^{-1})
  double J2_true = 0.0;      // -tr(W_eps^{-1} V^{-1}) at K_hat
  ControllerDesign design;   // Lyapunov-certified quantities at K_hat
  std::vector<CcpIterate> iterates;
  std::vector<CcpHistoryRow> history;
  std::string failure;  // nonempty when a subproblem could not be solved
};

/// K0 = K*, P0 from the closed-loop Lyapunov equation, Y0 = W_eps^{-1}.
CcpIterate CcpInitialize(const LinearSystem& sys, const DesignWeights& w);

enum class LinearizationSide {
  kLeftTranspose,   // 1/2 M^T M + 1/2 M^T D + 1/2 D^T M
  kRightTranspose,  // 1/2 M M^T + 1/2 M D^T + 1/2 D M^T
};

/// First-order expansion of 1/2 (M_j + D)^T (M_j + D) (or of the
/// right-transpose product) in the affine increment D.
sdp::AffineMatrix LinearizeQuadratic(const Eigen::MatrixXd& M_j,
                                     const sdp::AffineMatrix& delta,
                                     LinearizationSide side);

/// The convexified subproblem about `iterate`, with variables "K", "P" and
/// "Y". M_sqrt is the PSD square root of C^T C + epsilon I.
sdp::Model BuildCcpSubproblem(const CcpIterate& iterate, const LinearSystem& sys,
                              const DesignWeights& w,
                              const Eigen::MatrixXd& P_star,
                              const Eigen::MatrixXd& M_sqrt);

/// Largest relative violation of the unlinearized constraints at an iterate:
///   [[F^T P + P F + Q, K^T], [K, -R^{-1}]] <= 0,
///   [[Y F^T + F Y, Y M_sqrt], [M_sqrt Y, -I]] <= 0,
///   tr((P - P*) V) <= lambda,  P >= 0,  Y >= 0,   with F = A + B K.
double CcpFeasibilityViolation(const CcpIterate& iterate, const LinearSystem& sys,
                               const DesignWeights& w,
                               const Eigen::MatrixXd& P_star,
                               const Eigen::MatrixXd& M_sqrt);

/// Sequential SDP loop. Stops once |tr(Y_j - Y_{j-1})| < delta or the
/// objective changes by less than 1e-9 relative; otherwise returns the best
/// iterate after max_iters with converged = false. A subproblem that stops
/// short of optimality is still taken when its point passes the audit and
/// does not raise the objective. Y_hat is scaled down by at most 1e-6
/// relative when needed to satisfy the unlinearized observability inequality.
CcpResult CcpRun(const LinearSystem& sys, const DesignWeights& w,
                 int max_iters = 200, const sdp::SolveOptions& options = {});

}  // namespace covertlqr
