#include "covertlqr/design_trace.h"

#include <algorithm>
#include <cmath>

#include "covertlqr/error.h"
#include "covertlqr/gramian_metrics.h"
#include "covertlqr/linalg.h"

namespace covertlqr {

sdp::Model BuildProblem1Sdp(const LinearSystem& sys, const DesignWeights& w,
                            const Eigen::MatrixXd& P_star) {
  const int n = sys.num_states();
  const int m = sys.num_inputs();
  sdp::Model model;
  const sdp::AffineMatrix X = model.AddMatrixVariable("X", m, n);
  const sdp::AffineMatrix S = model.AddSymmetricVariable("S", n);
  const sdp::AffineMatrix Z = model.AddSymmetricVariable("Z", m);

  model.Minimize((sys.C * S * sys.C.transpose()).Trace());

  model.AddEquality(sys.A * S + sys.B * X + S * sys.A.transpose() +
                        X.transpose() * sys.B.transpose() + w.V,
                    "lyapunov");

  const double budget = (P_star * w.V).trace() + w.lambda;
  model.AddScalarNonPositive(
      (S * w.Q).Trace() + Z.Trace() - Eigen::MatrixXd::Constant(1, 1, budget),
      "budget");

  const Eigen::MatrixXd R_half = PsdSqrt(w.R);
  const sdp::AffineMatrix RX = R_half * X;
  model.AddLmiNonPositive(
      -sdp::AffineMatrix::Blocks({{Z, RX}, {RX.transpose(), S}}), "schur");
  model.AddPsd("Z", "Z_psd");
  model.AddPsd("S", "S_psd");
  return model;
}

Problem1Variables ExtractProblem1(const sdp::Solution& solution) {
  return {solution.value("X"), solution.value("S"), solution.value("Z")};
}

ControllerDesign RecoverAndAudit(const Problem1Variables& vars,
                                 const LinearSystem& sys,
                                 const DesignWeights& w,
                                 const Eigen::MatrixXd& P_star,
                                 double sdp_objective) {
  const Eigen::MatrixXd S = Symmetrize(vars.S);
  const double s_tol = 1e-9 * std::max(1.0, SpectralNorm(S));
  if (MinEigenvalue(S) <= s_tol) throw SolverError("recovery failure: S singular");

  ControllerDesign d;
  d.K = S.llt().solve(vars.X.transpose()).transpose();
  const Eigen::MatrixXd F = sys.ClosedLoop(d.K);
  if (!IsHurwitz(F).hurwitz) throw SolverError("recovery failure: A + BK not Hurwitz");

  const PerformanceCost cost = ComputePerformanceCost(sys, d.K, w.Q, w.R, w.V);
  d.P = cost.P;
  d.J_s = cost.J_s;
  d.W = ObservabilityGramian(F, sys.C, 0.0);
  d.J_o1 = MetricJo1(d.W, w.V);
  d.J_o2 = MetricJo2(d.W, w.V);
  d.performance_slack = w.lambda - ((d.P - P_star) * w.V).trace();

  if (d.performance_slack < -1e-6) {
    throw SolverError("audit failure: budget exceeded by " +
                      std::to_string(-d.performance_slack));
  }
  const Eigen::MatrixXd S_lyap = SolveLyapunovCtrl(F, w.V);
  if ((S_lyap - S).norm() > 1e-6 * std::max(1.0, S_lyap.norm())) {
    throw SolverError("audit failure: S inconsistent with A + BK");
  }
  if (std::abs(d.J_o1 - sdp_objective) >
      1e-6 * std::max(std::abs(sdp_objective), 1e-12)) {
    throw SolverError("audit failure: tr(WV) differs from SDP objective");
  }
  return d;
}

Problem1Result SolveProblem1(const LinearSystem& sys, const DesignWeights& w,
                             const sdp::SolveOptions& options) {
  ValidateOrThrow(sys, w);
  const CareSolution care = SolveCare(sys.A, sys.B, w.Q, w.R);
  const double J_star = (care.P * w.V).trace();
  if (w.lambda <= kZeroBudget * (1.0 + J_star)) {
    // The feasible set collapses to the LQR gain; the SDP has no interior.
    Problem1Result r;
    const Eigen::MatrixXd S = SolveLyapunovCtrl(sys.ClosedLoop(care.K), w.V);
    const Eigen::MatrixXd R_half = PsdSqrt(w.R);
    r.variables = {care.K * S, S, R_half * care.K * S * care.K.transpose() * R_half};
    r.sdp_objective = (sys.C * S * sys.C.transpose()).trace();
    r.design = RecoverAndAudit(r.variables, sys, w, care.P, r.sdp_objective);
    return r;
  }
  const sdp::Model model = BuildProblem1Sdp(sys, w, care.P);
  const sdp::Solution sol = sdp::Solve(model, options);
  if (sol.status == sdp::Status::kInfeasible) {
    throw SolverError("internal error: Problem 1 SDP reported infeasible");
  }
  if (sol.status != sdp::Status::kOptimal) {
    throw SolverError(std::string("Problem 1 SDP: ") + sdp::ToString(sol.status));
  }
  const sdp::AuditReport audit = sdp::Audit(model, sol, options.feas_tol);
  if (!audit.passed) throw SolverError("audit failure: SDP constraint residuals");

  Problem1Result r;
  r.variables = ExtractProblem1(sol);
  r.sdp_objective = sol.objective;
  r.solver_iterations = sol.iterations;
  r.max_audit_residual = audit.max_relative;
  r.design = RecoverAndAudit(r.variables, sys, w, care.P, sol.objective);
  return r;
}

}  // namespace covertlqr
