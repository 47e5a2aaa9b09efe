#include "covertlqr/linalg.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "covertlqr/error.h"
#include "covertlqr/system_model.h"

namespace covertlqr {
namespace {

constexpr double kHurwitzMargin = 1e-9;
constexpr int kKroneckerMaxDim = 30;
constexpr double kIllConditioned = 1e-14;

void RequireSquare(const Eigen::MatrixXd& M, const char* what) {
  if (M.rows() != M.cols()) {
    throw ConfigError(std::string(what) + " must be square");
  }
}

void RequireHurwitz(const Eigen::MatrixXd& A) {
  if (!IsHurwitz(A).hurwitz) throw SolverError("unstable matrix");
}

// Solves A^T W + W A = -Qs by Kronecker vectorization with one step of
// iterative refinement.
Eigen::MatrixXd LyapunovKronecker(const Eigen::MatrixXd& A,
                                  const Eigen::MatrixXd& Qs) {
  const int n = static_cast<int>(A.rows());
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd At = A.transpose();
  Eigen::MatrixXd op(n * n, n * n);
  // vec(A^T W) = (I kron A^T) vec W,  vec(W A) = (A^T kron I) vec W.
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      op.block(i * n, j * n, n, n) = I(i, j) * At + At(i, j) * I;
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(op);
  if (!(lu.rcond() > kIllConditioned)) {
    throw SolverError("ill-conditioned Lyapunov");
  }
  Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Qs.data(), n * n);
  Eigen::VectorXd w = lu.solve(rhs);
  w += lu.solve(rhs - op * w);
  return Eigen::Map<Eigen::MatrixXd>(w.data(), n, n);
}

// Bartels-Stewart on the complex Schur form, for n beyond the Kronecker
// range. With A = U T U^*, solves T^* Y + Y T = -U^* Qs U column by column.
Eigen::MatrixXd LyapunovSchur(const Eigen::MatrixXd& A,
                              const Eigen::MatrixXd& Qs) {
  const int n = static_cast<int>(A.rows());
  Eigen::ComplexSchur<Eigen::MatrixXd> schur(A);
  const Eigen::MatrixXcd& T = schur.matrixT();
  const Eigen::MatrixXcd& U = schur.matrixU();
  const Eigen::MatrixXcd F = -(U.adjoint() * Qs.cast<std::complex<double>>() * U);
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  const Eigen::MatrixXcd Th = T.adjoint();  // lower triangular
  for (int j = 0; j < n; ++j) {
    // (T^* + T(j,j) I) y_j = f_j - sum_{k<j} T(k,j) y_k
    Eigen::VectorXcd rhs = F.col(j);
    for (int k = 0; k < j; ++k) rhs -= T(k, j) * Y.col(k);
    Eigen::MatrixXcd L = Th;
    L.diagonal().array() += T(j, j);
    for (int i = 0; i < n; ++i) {
      if (std::abs(L(i, i)) < kIllConditioned * (1.0 + L.norm())) {
        throw SolverError("ill-conditioned Lyapunov");
      }
    }
    Y.col(j) = L.triangularView<Eigen::Lower>().solve(rhs);
  }
  return (U * Y * U.adjoint()).real();
}

}  // namespace

Spectrum ComputeSpectrum(const Eigen::MatrixXd& M) {
  RequireSquare(M, "spectrum input");
  Spectrum s;
  if (M.rows() == 0) return s;
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
  s.eigenvalues = es.eigenvalues();
  s.min_real_part = s.eigenvalues.real().minCoeff();
  s.max_real_part = s.eigenvalues.real().maxCoeff();
  return s;
}

HurwitzTest IsHurwitz(const Eigen::MatrixXd& M) {
  HurwitzTest out;
  out.spectrum = ComputeSpectrum(M);
  out.hurwitz = M.rows() > 0 && M.allFinite() &&
                out.spectrum.max_real_part < -kHurwitzMargin;
  return out;
}

Eigen::MatrixXd Symmetrize(const Eigen::MatrixXd& M) {
  return 0.5 * (M + M.transpose());
}

double SpectralNorm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

double MinEigenvalue(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Symmetrize(M),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double MaxEigenvalue(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Symmetrize(M),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues()(M.rows() - 1);
}

Eigen::VectorXd SymmetricEigenvaluesDescending(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Symmetrize(M),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

Eigen::MatrixXd SolveLyapunovObs(const Eigen::MatrixXd& A,
                                 const Eigen::MatrixXd& Qs) {
  RequireSquare(A, "Lyapunov matrix");
  if (Qs.rows() != A.rows() || Qs.cols() != A.cols()) {
    throw ConfigError("Lyapunov right-hand side has wrong shape");
  }
  RequireHurwitz(A);
  const Eigen::MatrixXd W = A.rows() <= kKroneckerMaxDim
                                ? LyapunovKronecker(A, Qs)
                                : LyapunovSchur(A, Qs);
  return Symmetrize(W);
}

Eigen::MatrixXd SolveLyapunovCtrl(const Eigen::MatrixXd& A,
                                  const Eigen::MatrixXd& Vs) {
  RequireSquare(A, "Lyapunov matrix");
  return SolveLyapunovObs(A.transpose(), Vs);
}

double CareResidual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                    const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                    const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd BtP = B.transpose() * P;
  const Eigen::MatrixXd res = A.transpose() * P + P * A + Q -
                              BtP.transpose() * R.ldlt().solve(BtP);
  return res.norm();
}

CareSolution SolveCare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                       const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  RequireSquare(A, "A");
  const int n = static_cast<int>(A.rows());
  const Eigen::LDLT<Eigen::MatrixXd> r_ldlt(R);
  const Eigen::MatrixXd Rinv_Bt = r_ldlt.solve(B.transpose());

  // Stabilizing seed from the shifted Lyapunov equation.
  const Spectrum spec = ComputeSpectrum(A);
  const double beta =
      1.0 + std::max(std::abs(spec.min_real_part), std::abs(spec.max_real_part));
  const Eigen::MatrixXd shifted =
      -(A + beta * Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd Z =
      SolveLyapunovCtrl(shifted, Symmetrize(2.0 * B * Rinv_Bt));
  Eigen::LDLT<Eigen::MatrixXd> z_ldlt(Z);
  if (z_ldlt.info() != Eigen::Success || !z_ldlt.isPositive() ||
      MinEigenvalue(Z) <= 0.0) {
    throw SolverError("CARE failure: no stabilizing seed ((A, B) not controllable?)");
  }
  Eigen::MatrixXd K = -Rinv_Bt * z_ldlt.solve(Eigen::MatrixXd::Identity(n, n));

  CareSolution sol;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  constexpr int kMaxIterations = 100;
  constexpr double kTarget = 1e-10;
  for (int it = 1; it <= kMaxIterations; ++it) {
    const Eigen::MatrixXd Acl = A + B * K;
    if (!IsHurwitz(Acl).hurwitz) {
      throw SolverError("CARE failure: Newton iterate lost stability");
    }
    const Eigen::MatrixXd P_next =
        SolveLyapunovObs(Acl, Symmetrize(Q + K.transpose() * R * K));
    const double change = (P_next - P).norm();
    P = P_next;
    K = -Rinv_Bt * P;
    sol.iterations = it;
    sol.residual = CareResidual(A, B, Q, R, P);
    const double scale = 1.0 + P.squaredNorm();
    if (sol.residual <= kTarget * scale ||
        (it > 1 && change <= 1e-15 * (1.0 + P.norm()))) {
      break;
    }
  }
  if (!(sol.residual <= 1e-8 * (1.0 + P.squaredNorm())) ||
      !IsHurwitz(A + B * K).hurwitz) {
    throw SolverError("CARE failure: residual " + std::to_string(sol.residual));
  }
  sol.P = P;
  sol.K = K;
  return sol;
}

Eigen::MatrixXd PsdSqrt(const Eigen::MatrixXd& M) {
  RequireSquare(M, "square-root input");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Symmetrize(M));
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double tol = 1e-10 * std::max(1.0, M.norm());
  if (ev.size() > 0 && ev(0) < -tol) throw SolverError("not PSD");
  const Eigen::VectorXd root = ev.cwiseMax(0.0).cwiseSqrt();
  return Symmetrize(es.eigenvectors() * root.asDiagonal() *
                    es.eigenvectors().transpose());
}

std::vector<std::complex<double>> SplitRepeatedPoles(
    std::span<const std::complex<double>> poles) {
  std::vector<std::complex<double>> out(poles.begin(), poles.end());
  std::vector<std::complex<double>> seen;
  std::vector<int> counts;
  for (auto& p : out) {
    int k = 0;
    auto it = std::find_if(seen.begin(), seen.end(), [&](const auto& q) {
      return std::abs(q - p) <= 1e-12 * (1.0 + std::abs(p));
    });
    if (it == seen.end()) {
      seen.push_back(p);
      counts.push_back(0);
    } else {
      k = ++counts[it - seen.begin()];
    }
    p += std::complex<double>(1e-6 * k, 0.0);
  }
  return out;
}

Eigen::MatrixXd PlaceObserverGain(const Eigen::MatrixXd& A_cl,
                                  const Eigen::MatrixXd& C,
                                  std::span<const std::complex<double>> poles,
                                  std::mt19937_64& rng) {
  RequireSquare(A_cl, "observer state matrix");
  const int n = static_cast<int>(A_cl.rows());
  const int p = static_cast<int>(C.rows());
  if (C.cols() != n) throw ConfigError("observer: C has wrong column count");
  if (static_cast<int>(poles.size()) != n) {
    throw ConfigError("observer: need " + std::to_string(n) + " poles, got " +
                      std::to_string(poles.size()));
  }
  for (const auto& pole : poles) {
    if (!(pole.real() < 0.0)) {
      throw ConfigError("observer: poles must have negative real part");
    }
  }
  // Self-conjugacy: every complex pole must be matched by its conjugate.
  {
    std::vector<bool> used(poles.size(), false);
    for (std::size_t i = 0; i < poles.size(); ++i) {
      if (used[i] || poles[i].imag() == 0.0) continue;
      bool matched = false;
      for (std::size_t j = 0; j < poles.size(); ++j) {
        if (j != i && !used[j] &&
            std::abs(poles[j] - std::conj(poles[i])) <=
                1e-12 * (1.0 + std::abs(poles[i]))) {
          used[i] = used[j] = true;
          matched = true;
          break;
        }
      }
      if (!matched) throw ConfigError("observer: poles not closed under conjugation");
    }
  }
  if (!CheckObservability(A_cl, C)) {
    throw SolverError("pole placement infeasible: (A_cl, C) not observable");
  }

  // Real block-diagonal G with the (split) poles. Only the upper member of a
  // complex pair opens a 2x2 block.
  const auto split = SplitRepeatedPoles(poles);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  {
    int at = 0;
    std::vector<bool> used(split.size(), false);
    for (std::size_t i = 0; i < split.size(); ++i) {
      if (used[i]) continue;
      const auto& z = split[i];
      if (z.imag() == 0.0) {
        G(at, at) = z.real();
        at += 1;
        used[i] = true;
        continue;
      }
      for (std::size_t j = i + 1; j < split.size(); ++j) {
        if (!used[j] && std::abs(split[j] - std::conj(z)) <= 1e-9 * (1.0 + std::abs(z))) {
          used[j] = true;
          break;
        }
      }
      used[i] = true;
      const double a = z.real();
      const double b = std::abs(z.imag());
      G(at, at) = a;
      G(at, at + 1) = b;
      G(at + 1, at) = -b;
      G(at + 1, at + 1) = a;
      at += 2;
    }
  }

  // vec(A^T X - X G^T) = (I kron A^T - G kron I) vec X.
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd At = A_cl.transpose();
  Eigen::MatrixXd op(n * n, n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      op.block(i * n, j * n, n, n) = I(i, j) * At - G(i, j) * I;
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(op);
  if (!(lu.rcond() > kIllConditioned)) {
    throw SolverError(
        "pole placement infeasible: requested poles collide with eig(A_cl)");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr int kMaxDraws = 10;
  for (int draw = 0; draw < kMaxDraws; ++draw) {
    Eigen::MatrixXd H(p, n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < p; ++i) H(i, j) = normal(rng);
    }
    const Eigen::MatrixXd rhs_m = C.transpose() * H;
    const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(rhs_m.data(), n * n);
    Eigen::VectorXd x = lu.solve(rhs);
    x += lu.solve(rhs - op * x);
    const Eigen::MatrixXd X = Eigen::Map<Eigen::MatrixXd>(x.data(), n, n);
    Eigen::PartialPivLU<Eigen::MatrixXd> x_lu(X);
    if (!(x_lu.rcond() > 1e-12)) continue;
    // L^T = H X^{-1}  <=>  X^T L = H^T.
    return X.transpose().partialPivLu().solve(H.transpose());
  }
  throw SolverError("pole placement failed: auxiliary matrix singular after " +
                    std::to_string(kMaxDraws) + " draws");
}

}  // namespace covertlqr
