#pragma once

#include <Eigen/Dense>

#include "covertlqr/sdp.h"
#include "covertlqr/system_model.h"

namespace covertlqr {

/// Change of variables: S solves (A+BK) S + S (A+BK)^T + V = 0, X = K S,
/// and Z bounds the input-cost term.
struct Problem1Variables {
  Eigen::MatrixXd X;  // m x n
  Eigen::MatrixXd S;  // n x n
  Eigen::MatrixXd Z;  // m x m
};

/// Minimize tr(C S C^T) subject to
///   A S + B X + S A^T + X^T B^T + V = 0,
///   tr(S Q) + tr(Z) <= tr(P* V) + lambda,
///   [[Z, R^{1/2} X], [X^T R^{1/2}, S]] >= 0,  Z >= 0,  S >= 0.
/// Variables are named "X", "S" and "Z".
sdp::Model BuildProblem1Sdp(const LinearSystem& sys, const DesignWeights& w,
                            const Eigen::MatrixXd& P_star);

Problem1Variables ExtractProblem1(const sdp::Solution& solution);

/// K = X S^{-1}, then P and W from Lyapunov solves at A + B K. Throws a
/// solver error tagged "recovery failure" when S is numerically singular
/// or the closed loop is not Hurwitz, and "audit failure" when the budget,
/// the S consistency check or the objective match fail.
ControllerDesign RecoverAndAudit(const Problem1Variables& vars,
                                 const LinearSystem& sys,
                                 const DesignWeights& w,
                                 const Eigen::MatrixXd& P_star,
                                 double sdp_objective);

struct Problem1Result {
  ControllerDesign design;
  Problem1Variables variables;
  double sdp_objective = 0.0;
  int solver_iterations = 0;
  double max_audit_residual = 0.0;
};

/// Budgets at or below kZeroBudget * (1 + tr(P* V)) admit only K*; the
/// designers return it directly instead of solving a degenerate SDP.
inline constexpr double kZeroBudget = 1e-12;

Problem1Result SolveProblem1(const LinearSystem& sys, const DesignWeights& w,
                             const sdp::SolveOptions& options = {});

}  // namespace covertlqr
