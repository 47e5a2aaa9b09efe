#pragma once

#include <complex>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace covertlqr {

/// Eigenvalues of a square matrix with their extreme real parts.
struct Spectrum {
  Eigen::VectorXcd eigenvalues;
  double min_real_part = 0.0;
  double max_real_part = 0.0;
};

Spectrum ComputeSpectrum(const Eigen::MatrixXd& M);

struct HurwitzTest {
  bool hurwitz = false;
  Spectrum spectrum;
};

/// Hurwitz iff every eigenvalue has real part below -1e-9.
HurwitzTest IsHurwitz(const Eigen::MatrixXd& M);

// Small helpers shared across modules.
Eigen::MatrixXd Symmetrize(const Eigen::MatrixXd& M);
double SpectralNorm(const Eigen::MatrixXd& M);
double MinEigenvalue(const Eigen::MatrixXd& M);  // of (M + M^T) / 2
double MaxEigenvalue(const Eigen::MatrixXd& M);  // of (M + M^T) / 2
/// Eigenvalues of (M + M^T) / 2 sorted in descending order.
Eigen::VectorXd SymmetricEigenvaluesDescending(const Eigen::MatrixXd& M);

/// Solves A^T W + W A + Qs = 0 for Hurwitz A. Throws a solver error tagged
/// "unstable matrix" or "ill-conditioned Lyapunov".
Eigen::MatrixXd SolveLyapunovObs(const Eigen::MatrixXd& A,
                                 const Eigen::MatrixXd& Qs);

/// Solves A Z + Z A^T + Vs = 0 for Hurwitz A.
Eigen::MatrixXd SolveLyapunovCtrl(const Eigen::MatrixXd& A,
                                  const Eigen::MatrixXd& Vs);

struct CareSolution {
  Eigen::MatrixXd P;  // stabilizing solution
  Eigen::MatrixXd K;  // -R^{-1} B^T P
  int iterations = 0;
  double residual = 0.0;  // Frobenius norm of the Riccati residual
};

/// Stabilizing solution of A^T P + P A + Q - P B R^{-1} B^T P = 0 by
/// Newton-Kleinman iteration.
///
/// The initial stabilizing gain comes from the shifted Lyapunov equation
///   -(A + beta I) Z - Z (A + beta I)^T + 2 B R^{-1} B^T = 0,
/// beta > max |Re eig(A)|, giving K0 = -R^{-1} B^T Z^{-1}; controllability
/// makes Z positive definite and A + B K0 Hurwitz. Throws "CARE failure"
/// when the residual target cannot be met within 100 iterations.
CareSolution SolveCare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                       const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

/// Frobenius norm of A^T P + P A + Q - P B R^{-1} B^T P.
double CareResidual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                    const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                    const Eigen::MatrixXd& P);

/// Symmetric PSD square root. Throws "not PSD" when an eigenvalue is below
/// -1e-10 * max(1, ||M||).
Eigen::MatrixXd PsdSqrt(const Eigen::MatrixXd& M);

/// Splits repeated entries of a self-conjugate pole list: the k-th repeat of
/// a value (k = 0, 1, ...) is shifted by 1e-6 * k along the real axis.
std::vector<std::complex<double>> SplitRepeatedPoles(
    std::span<const std::complex<double>> poles);

/// Observer gain L with eig(A_cl - L C) at `poles`, by the Sylvester method:
/// with G real block-diagonal carrying the poles and a random p x n matrix H,
/// solve A_cl^T X - X G^T = C^T H and set L = (H X^{-1})^T. H is redrawn
/// from `rng` (up to 10 times) whenever X is numerically singular.
Eigen::MatrixXd PlaceObserverGain(const Eigen::MatrixXd& A_cl,
                                  const Eigen::MatrixXd& C,
                                  std::span<const std::complex<double>> poles,
                                  std::mt19937_64& rng);

}  // namespace covertlqr
