#include "covertlqr/design_traceinv.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "covertlqr/design_trace.h"
#include "covertlqr/error.h"
#include "covertlqr/gramian_metrics.h"
#include "covertlqr/linalg.h"

namespace covertlqr {
namespace {

Eigen::MatrixXd SpdInverse(const Eigen::MatrixXd& M) {
  return Symmetrize(Symmetrize(M).llt().solve(
      Eigen::MatrixXd::Identity(M.rows(), M.cols())));
}

Eigen::MatrixXd RegularizedOutput(const LinearSystem& sys, double epsilon) {
  Eigen::MatrixXd M = sys.C.transpose() * sys.C;
  M.diagonal().array() += epsilon;
  return M;
}

// Largest eigenvalue of Y F^T + F Y + Y M Y, the unlinearized observability
// inequality in Riccati form.
double RiccatiExcess(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Y,
                     const Eigen::MatrixXd& M) {
  const Eigen::MatrixXd FY = F * Y;
  return MaxEigenvalue(FY + FY.transpose() + Y * M * Y);
}

// t Y keeps the inequality for 0 < t < 1 and adds slack t (1 - t) Y M Y, so a
// small shrink removes solver-tolerance violations.
Eigen::MatrixXd RestoreFeasibility(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Y,
                                   const Eigen::MatrixXd& M) {
  if (RiccatiExcess(F, Y, M) <= 0.0) return Y;
  for (double eta = 1e-12; eta <= 1e-6; eta *= 2.0) {
    const Eigen::MatrixXd shrunk = (1.0 - eta) * Y;
    if (RiccatiExcess(F, shrunk, M) <= 0.0) return shrunk;
  }
  return Y;
}

double BudgetSlack(const Eigen::MatrixXd& P, const Eigen::MatrixXd& P_star,
                   const DesignWeights& w) {
  return w.lambda - ((P - P_star) * w.V).trace();
}

}  // namespace

CcpIterate CcpInitialize(const LinearSystem& sys, const DesignWeights& w) {
  const CareSolution care = SolveCare(sys.A, sys.B, w.Q, w.R);
  CcpIterate it;
  it.K = care.K;
  const Eigen::MatrixXd F = sys.ClosedLoop(it.K);
  it.P = SolveLyapunovObs(F, Symmetrize(w.Q + it.K.transpose() * w.R * it.K));
  it.Y = SpdInverse(ObservabilityGramian(F, sys.C, w.epsilon));
  it.objective = -(it.Y * SpdInverse(w.V)).trace();
  return it;
}

sdp::AffineMatrix LinearizeQuadratic(const Eigen::MatrixXd& M_j,
                                     const sdp::AffineMatrix& delta,
                                     LinearizationSide side) {
  if (delta.rows() != M_j.rows() || delta.cols() != M_j.cols()) {
    throw ConfigError("linearization: shape mismatch");
  }
  if (side == LinearizationSide::kLeftTranspose) {
    return sdp::AffineMatrix(0.5 * M_j.transpose() * M_j) +
           0.5 * (M_j.transpose() * delta + delta.transpose() * M_j);
  }
  return sdp::AffineMatrix(0.5 * M_j * M_j.transpose()) +
         0.5 * (M_j * delta.transpose() + delta * M_j.transpose());
}

sdp::Model BuildCcpSubproblem(const CcpIterate& iterate, const LinearSystem& sys,
                              const DesignWeights& w,
                              const Eigen::MatrixXd& P_star,
                              const Eigen::MatrixXd& M_sqrt) {
  const int n = sys.num_states();
  const int m = sys.num_inputs();
  const double r2 = 1.0 / std::sqrt(2.0);
  using sdp::AffineMatrix;

  sdp::Model model;
  const AffineMatrix K = model.AddMatrixVariable("K", m, n);
  const AffineMatrix P = model.AddSymmetricVariable("P", n);
  const AffineMatrix Y = model.AddSymmetricVariable("Y", n);
  const AffineMatrix F = sys.A + sys.B * K;
  const Eigen::MatrixXd F_j = sys.ClosedLoop(iterate.K);

  const Eigen::MatrixXd M1 = F_j - iterate.P;
  const AffineMatrix L1 = LinearizeQuadratic(M1, (F - P) - M1, LinearizationSide::kLeftTranspose);
  const AffineMatrix Fp = r2 * (F + P);
  model.AddLmiNonPositive(
      AffineMatrix::Blocks({
          {w.Q - L1, K.transpose(), Fp.transpose()},
          {K, AffineMatrix(-SpdInverse(w.R)), AffineMatrix::Zero(m, n)},
          {Fp, AffineMatrix::Zero(n, m), AffineMatrix(-Eigen::MatrixXd::Identity(n, n))},
      }),
      "performance");

  const Eigen::MatrixXd M2 = F_j - iterate.Y;
  const AffineMatrix L2 = LinearizeQuadratic(M2, (F - Y) - M2, LinearizationSide::kRightTranspose);
  const AffineMatrix Fy = r2 * (F + Y);
  const AffineMatrix YM = Y * M_sqrt;
  const AffineMatrix I_n(Eigen::MatrixXd::Identity(n, n));
  model.AddLmiNonPositive(
      AffineMatrix::Blocks({
          {-L2, YM, Fy},
          {YM.transpose(), -I_n, AffineMatrix::Zero(n, n)},
          {Fy.transpose(), AffineMatrix::Zero(n, n), -I_n},
      }),
      "observability");

  model.AddScalarNonPositive(
      (P * w.V).Trace() -
          Eigen::MatrixXd::Constant(1, 1, (P_star * w.V).trace() + w.lambda),
      "budget");
  model.AddPsd("P", "P_psd");
  model.AddPsd("Y", "Y_psd");
  model.Minimize(-(Y * SpdInverse(w.V)).Trace());
  return model;
}

double CcpFeasibilityViolation(const CcpIterate& it, const LinearSystem& sys,
                               const DesignWeights& w,
                               const Eigen::MatrixXd& P_star,
                               const Eigen::MatrixXd& M_sqrt) {
  const int n = sys.num_states();
  const int m = sys.num_inputs();
  const Eigen::MatrixXd F = sys.ClosedLoop(it.K);

  Eigen::MatrixXd c1(n + m, n + m);
  const Eigen::MatrixXd FtP = F.transpose() * it.P;
  c1 << FtP + FtP.transpose() + w.Q, it.K.transpose(), it.K, -SpdInverse(w.R);
  const double s1 = 1.0 + 2.0 * FtP.norm() + w.Q.norm() + 2.0 * it.K.norm() +
                    SpdInverse(w.R).norm();

  Eigen::MatrixXd c2(2 * n, 2 * n);
  const Eigen::MatrixXd FY = F * it.Y;
  const Eigen::MatrixXd YM = it.Y * M_sqrt;
  c2 << FY + FY.transpose(), YM, YM.transpose(), -Eigen::MatrixXd::Identity(n, n);
  const double s2 = 1.0 + 2.0 * FY.norm() + 2.0 * YM.norm() + std::sqrt(n);

  const double budget = -BudgetSlack(it.P, P_star, w);
  const double sb = 1.0 + std::abs((P_star * w.V).trace()) + w.lambda;

  double v = std::max(0.0, MaxEigenvalue(c1)) / s1;
  v = std::max(v, std::max(0.0, MaxEigenvalue(c2)) / s2);
  v = std::max(v, std::max(0.0, budget) / sb);
  v = std::max(v, std::max(0.0, -MinEigenvalue(it.P)) / (1.0 + it.P.norm()));
  v = std::max(v, std::max(0.0, -MinEigenvalue(it.Y)) / (1.0 + it.Y.norm()));
  return v;
}

CcpResult CcpRun(const LinearSystem& sys, const DesignWeights& w, int max_iters,
                 const sdp::SolveOptions& options) {
  ValidateOrThrow(sys, w);
  const CareSolution care = SolveCare(sys.A, sys.B, w.Q, w.R);
  const Eigen::MatrixXd M_sqrt = PsdSqrt(RegularizedOutput(sys, w.epsilon));
  const double J_star = (care.P * w.V).trace();

  CcpResult res;
  CcpIterate current = CcpInitialize(sys, w);
  res.iterates.push_back(current);
  res.history.push_back({0, current.objective, 0.0, BudgetSlack(current.P, care.P, w), 0});

  if (w.lambda <= kZeroBudget * (1.0 + J_star)) {
    res.converged = true;
  } else {
    for (int j = 1; j <= max_iters; ++j) {
      const sdp::Model model = BuildCcpSubproblem(current, sys, w, care.P, M_sqrt);
      const sdp::Solution sol = sdp::Solve(model, options);
      // An unconverged solve still yields a usable step when its point is
      // audited feasible and does not increase the objective.
      const bool inexact =
          sol.status == sdp::Status::kNumericalFailure &&
          sol.primal_residual <= options.feas_tol &&
          sol.objective <= current.objective + 1e-9 * std::max(1.0, std::abs(current.objective));
      if (sol.status != sdp::Status::kOptimal && !inexact) {
        res.failure = "subproblem " + std::to_string(j) + ": " + sdp::ToString(sol.status);
        break;
      }
      CcpIterate next;
      next.K = sol.value("K");
      next.P = Symmetrize(sol.value("P"));
      next.Y = Symmetrize(sol.value("Y"));
      next.objective = sol.objective;
      next.iteration = j;
      const double trace_diff = (next.Y - current.Y).trace();
      const double change = std::abs(next.objective - current.objective);
      res.history.push_back({j, next.objective, trace_diff,
                             BudgetSlack(next.P, care.P, w), sol.iterations, inexact});
      res.iterates.push_back(next);
      current = next;
      if (std::abs(trace_diff) < w.delta ||
          change < 1e-9 * std::max(1.0, std::abs(next.objective))) {
        res.converged = true;
        break;
      }
    }
  }

  const auto best = std::min_element(
      res.iterates.begin(), res.iterates.end(),
      [](const CcpIterate& a, const CcpIterate& b) { return a.objective < b.objective; });
  res.iterations = static_cast<int>(res.iterates.size()) - 1;
  res.K_hat = best->K;
  res.P_hat = best->P;
  res.Y_hat = RestoreFeasibility(sys.ClosedLoop(res.K_hat), best->Y,
                                 RegularizedOutput(sys, w.epsilon));
  res.J2_reported = -(res.Y_hat * SpdInverse(w.V)).trace();

  const Eigen::MatrixXd F = sys.ClosedLoop(res.K_hat);
  if (!IsHurwitz(F).hurwitz) throw SolverError("audit failure: A + BK not Hurwitz");
  const PerformanceCost cost = ComputePerformanceCost(sys, res.K_hat, w.Q, w.R, w.V);
  ControllerDesign& d = res.design;
  d.K = res.K_hat;
  d.P = cost.P;
  d.J_s = cost.J_s;
  d.W = ObservabilityGramian(F, sys.C, w.epsilon);
  d.J_o1 = MetricJo1(ObservabilityGramian(F, sys.C, 0.0), w.V);
  d.J_o2 = MetricJo2(d.W, w.V);
  d.performance_slack = BudgetSlack(d.P, care.P, w);
  res.J2_true = d.J_o2.value_or(-std::numeric_limits<double>::infinity());
  return res;
}

}  // namespace covertlqr
