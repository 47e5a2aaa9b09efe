#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner. Nothing here calls the library's solvers.

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "covertlqr/system_model.h"

namespace covertlqr::testing {

// Scalar plant x' = a x + b u, y = c x with weights q, r, v.
struct Scalar {
  double a = 1, b = 1, c = 1, q = 1, r = 1, v = 1;

  LinearSystem System() const {
    LinearSystem s;
    s.A = Eigen::MatrixXd::Constant(1, 1, a);
    s.B = Eigen::MatrixXd::Constant(1, 1, b);
    s.C = Eigen::MatrixXd::Constant(1, 1, c);
    return s;
  }
  DesignWeights Weights(double lambda, double epsilon = 1e-4, double delta = 1e-3) const {
    DesignWeights w;
    w.Q = Eigen::MatrixXd::Constant(1, 1, q);
    w.R = Eigen::MatrixXd::Constant(1, 1, r);
    w.V = Eigen::MatrixXd::Constant(1, 1, v);
    w.lambda = lambda;
    w.epsilon = epsilon;
    w.delta = delta;
    return w;
  }

  // Stabilizing root of (b^2 / r) p^2 - 2 a p - q = 0.
  double PStar() const { return r * (a + std::sqrt(a * a + q * b * b / r)) / (b * b); }
  double KStar() const { return -b * PStar() / r; }

  // Closed-loop pole f = a + b k parameterizes every stabilizing gain.
  double Gain(double f) const { return (f - a) / b; }
  double P(double f) const {
    const double k = Gain(f);
    return (q + r * k * k) / (-2.0 * f);
  }
  double W(double f, double eps = 0.0) const { return (c * c + eps) / (-2.0 * f); }
};

// Both scalar problems reward the fastest closed loop the budget allows, so
// the optimum is the most negative f with (P(f) - p*) v <= lambda. A coarse
// grid brackets the crossing and bisection refines it.
inline double ScalarOptimalPole(const Scalar& s, double lambda) {
  const double f_star = s.a + s.b * s.KStar();
  const double limit = s.PStar() + lambda / s.v;
  double lo = f_star, hi = f_star;
  double step = 1e-3 * std::max(1.0, std::abs(f_star));
  for (int i = 0; i < 200000; ++i) {
    const double f = f_star - step * (i + 1);
    if (s.P(f) > limit) {
      lo = f;
      break;
    }
    hi = f;
    if (i > 1000) step *= 1.01;
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (s.P(mid) > limit ? lo : hi) = mid;
  }
  return hi;
}

// Composite Simpson quadrature of int_0^T e^{A^T t} Qs e^{A t} dt with a
// truncation where ||e^{A t}|| has dropped below tol.
inline Eigen::MatrixXd QuadratureGramian(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Qs,
                                         double tol = 1e-12) {
  const Eigen::VectorXcd ev = A.eigenvalues();
  double slow = 0.0, fast = 0.0;
  slow = -ev.real().maxCoeff();
  fast = -ev.real().minCoeff();
  const double h = 1e-3 / fast;
  const Eigen::MatrixXd step = (A * h).exp();
  Eigen::MatrixXd E = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(A.rows(), A.cols());
  auto f = [&](const Eigen::MatrixXd& Et) { return (Et.transpose() * Qs * Et).eval(); };
  Eigen::MatrixXd prev = f(E);
  const int max_pairs = static_cast<int>(std::ceil(60.0 / (slow * 2 * h))) + 10;
  for (int i = 0; i < max_pairs; ++i) {
    const Eigen::MatrixXd E1 = E * step;
    const Eigen::MatrixXd E2 = E1 * step;
    const Eigen::MatrixXd mid = f(E1);
    const Eigen::MatrixXd next = f(E2);
    sum += (h / 3.0) * (prev + 4.0 * mid + next);
    prev = next;
    E = E2;
    if (E.norm() < tol) break;
  }
  return 0.5 * (sum + sum.transpose());
}

// Random Hurwitz matrix: Gaussian entries shifted left of the spectrum.
inline Eigen::MatrixXd RandomHurwitz(int n, std::mt19937_64& rng, double margin = 0.5) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return g(rng); });
  const double shift = A.eigenvalues().real().maxCoeff() + margin;
  return A - shift * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::MatrixXd RandomMatrix(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  return Eigen::MatrixXd::NullaryExpr(r, c, [&] { return g(rng); });
}

inline Eigen::MatrixXd RandomPd(int n, std::mt19937_64& rng, double floor = 0.1) {
  const Eigen::MatrixXd M = RandomMatrix(n, n, rng);
  return M * M.transpose() + floor * Eigen::MatrixXd::Identity(n, n);
}

inline LinearSystem DoubleIntegrator() {
  LinearSystem s;
  s.A = (Eigen::MatrixXd(2, 2) << 0, 1, 0, 0).finished();
  s.B = (Eigen::MatrixXd(2, 1) << 1, 1).finished();
  s.C = (Eigen::MatrixXd(1, 2) << 1, 0).finished();
  return s;
}

inline DesignWeights DoubleIntegratorWeights(double lambda) {
  DesignWeights w;
  w.Q = 0.2 * Eigen::MatrixXd::Identity(2, 2);
  w.R = Eigen::MatrixXd::Identity(1, 1);
  w.V = Eigen::MatrixXd::Identity(2, 2);
  w.lambda = lambda;
  w.epsilon = 1e-4;
  w.delta = 1e-3;
  return w;
}

}  // namespace covertlqr::testing
