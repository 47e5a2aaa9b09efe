#include "covertlqr/gramian_metrics.h"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "covertlqr/error.h"
#include "covertlqr/linalg.h"

namespace covertlqr {

PerformanceCost ComputePerformanceCost(const LinearSystem& sys,
                                       const Eigen::MatrixXd& K,
                                       const Eigen::MatrixXd& Q,
                                       const Eigen::MatrixXd& R,
                                       const Eigen::MatrixXd& V) {
  const Eigen::MatrixXd A_cl = sys.ClosedLoop(K);
  if (!IsHurwitz(A_cl).hurwitz) throw SolverError("unstable gain");
  PerformanceCost out;
  out.P = SolveLyapunovObs(A_cl, Symmetrize(Q + K.transpose() * R * K));
  out.J_s = (out.P * V).trace();
  return out;
}

Eigen::MatrixXd ObservabilityGramian(const Eigen::MatrixXd& A_cl,
                                     const Eigen::MatrixXd& C, double epsilon) {
  if (!IsHurwitz(A_cl).hurwitz) throw SolverError("unstable gain");
  Eigen::MatrixXd rhs = C.transpose() * C;
  rhs.diagonal().array() += epsilon;
  return SolveLyapunovObs(A_cl, rhs);
}

Eigen::MatrixXd ObservabilityGramian(const LinearSystem& sys,
                                     const Eigen::MatrixXd& K, double epsilon) {
  return ObservabilityGramian(sys.ClosedLoop(K), sys.C, epsilon);
}

double MetricJo1(const Eigen::MatrixXd& W, const Eigen::MatrixXd& V) {
  return (W * V).trace();
}

bool IsNumericallySingular(const Eigen::MatrixXd& W) {
  if (W.rows() == 0) return true;
  const Eigen::VectorXd ev = SymmetricEigenvaluesDescending(W);
  const double norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  return ev(ev.size() - 1) <= 1e-12 * std::max(1.0, norm);
}

std::optional<double> MetricJo2(const Eigen::MatrixXd& W,
                                const Eigen::MatrixXd& V) {
  if (IsNumericallySingular(W)) return std::nullopt;
  const Eigen::MatrixXd W_inv = Symmetrize(W).llt().solve(
      Eigen::MatrixXd::Identity(W.rows(), W.cols()));
  const Eigen::MatrixXd V_inv = Symmetrize(V).llt().solve(
      Eigen::MatrixXd::Identity(V.rows(), V.cols()));
  return -(W_inv * V_inv).trace();
}

Eigen::MatrixXd GramianQuadrature(const Eigen::MatrixXd& A_cl,
                                  const Eigen::MatrixXd& Qs,
                                  double horizon_tol) {
  const HurwitzTest test = IsHurwitz(A_cl);
  if (!test.hurwitz) throw SolverError("unstable matrix");
  const double fastest = std::abs(test.spectrum.min_real_part);
  const double h = 1e-3 / fastest;
  const Eigen::MatrixXd step = (A_cl * h).exp();
  const auto n = A_cl.rows();

  auto integrand = [&Qs](const Eigen::MatrixXd& phi) -> Eigen::MatrixXd {
    return phi.transpose() * Qs * phi;
  };
  // Composite Simpson over pairs of intervals until the propagator decays.
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = integrand(phi);
  constexpr long kMaxPairs = 200'000'000;
  for (long pair = 0; pair < kMaxPairs; ++pair) {
    phi = phi * step;
    sum += 4.0 * integrand(phi);
    phi = phi * step;
    const double decay = phi.norm();
    if (decay < horizon_tol) {
      sum += integrand(phi);
      return Symmetrize(sum * (h / 3.0));
    }
    sum += 2.0 * integrand(phi);
  }
  throw SolverError("quadrature horizon not reached");
}

GramianReport EigenReport(const Eigen::MatrixXd& W) {
  GramianReport r;
  r.eigenvalues = SymmetricEigenvaluesDescending(W);
  r.trace_W = W.trace();
  if (!IsNumericallySingular(W)) {
    r.trace_W_inv = r.eigenvalues.cwiseInverse().sum();
  }
  return r;
}

}  // namespace covertlqr
