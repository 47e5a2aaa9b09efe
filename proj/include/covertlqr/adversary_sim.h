#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "covertlqr/system_model.h"

namespace covertlqr {

/// eta_i(t) = sum_k magnitude * sin(omega_k t + phase(i, k)).
struct NoiseModel {
  double magnitude = 0.01;
  int num_sinusoids = 5;
  std::vector<double> angular_frequencies;  // rad/s
  Eigen::MatrixXd phases;                   // p x num_sinusoids
  std::optional<std::uint64_t> seed;        // set when phases were drawn
};

/// Five sinusoids of magnitude 0.01 at omega_k = k / 5 rad/s, k = 1..5,
/// spanning the band 0 to 1/(2 pi) Hz. Phases are zero, or uniform on
/// [0, 2 pi) from a mt19937_64 seeded with `seed`.
NoiseModel DefaultNoise(int num_outputs, std::optional<std::uint64_t> seed = {});

/// Same frequency layout with zero magnitude.
NoiseModel ZeroNoise(int num_outputs);

Eigen::VectorXd SensingNoise(const NoiseModel& model, double t);

struct ObserverGain {
  Eigen::MatrixXd L;
  double norm = 0.0;     // spectral norm of L
  bool large = false;    // norm above 1e6: closed loop nearly unobservable
};

/// Luenberger gain for the adversary, who predicts with A + B K.
ObserverGain BuildAdversaryObserver(const LinearSystem& sys, const Eigen::MatrixXd& K,
                                    std::span<const std::complex<double>> poles,
                                    std::mt19937_64& rng);

struct SimOptions {
  Eigen::VectorXd x0;     // empty: all ones
  Eigen::VectorXd xhat0;  // empty: zeros
  double horizon = 0.0;   // <= 0: 20 time constants
  double dt = 0.0;        // <= 0: 1e-3 time constants
};

struct SimTrace {
  Eigen::VectorXd t;
  Eigen::MatrixXd x;        // n x (steps + 1)
  Eigen::MatrixXd xhat;
  Eigen::MatrixXd e;        // x - xhat
  Eigen::MatrixXd y;        // p x (steps + 1)
  Eigen::MatrixXd y_noisy;
  Eigen::VectorXd cost;     // running int x^T (Q + K^T R K) x
};

/// Slowest closed-loop time constant 1 / |max Re eig(A + B K)|.
double TimeConstant(const Eigen::MatrixXd& A_cl);

/// Fixed-step RK4 on (x, xhat, cost). Rejects dt above 0.1 / max |Re eig|
/// of the plant and observer dynamics; throws on non-finite states.
SimTrace Simulate(const LinearSystem& sys, const Eigen::MatrixXd& K,
                  const Eigen::MatrixXd& L, const Eigen::MatrixXd& Q,
                  const Eigen::MatrixXd& R, const NoiseModel& noise,
                  const SimOptions& options = {});

/// Mean of ||e(t)|| over grid points with t >= from_fraction * T.
double TimeAveragedError(const SimTrace& trace, double from_fraction = 0.5);

/// CSV with header t,x1..xn,xhat1..xhatn,e1..en,cost and %.12g floats.
void WriteTraceCsv(std::ostream& os, const SimTrace& trace);

}  // namespace covertlqr
