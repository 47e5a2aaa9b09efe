#include "covertlqr/adversary_sim.h"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>

#include "covertlqr/error.h"
#include "covertlqr/linalg.h"

namespace covertlqr {

NoiseModel DefaultNoise(int num_outputs, std::optional<std::uint64_t> seed) {
  NoiseModel m;
  for (int k = 1; k <= m.num_sinusoids; ++k) m.angular_frequencies.push_back(k / 5.0);
  m.phases = Eigen::MatrixXd::Zero(num_outputs, m.num_sinusoids);
  if (seed) {
    m.seed = seed;
    std::mt19937_64 rng(*seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (int i = 0; i < num_outputs; ++i) {
      for (int k = 0; k < m.num_sinusoids; ++k) m.phases(i, k) = phase(rng);
    }
  }
  return m;
}

NoiseModel ZeroNoise(int num_outputs) {
  NoiseModel m = DefaultNoise(num_outputs);
  m.magnitude = 0.0;
  return m;
}

Eigen::VectorXd SensingNoise(const NoiseModel& model, double t) {
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(model.phases.rows());
  if (model.magnitude == 0.0) return eta;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    for (int k = 0; k < model.num_sinusoids; ++k) {
      eta(i) += model.magnitude *
                std::sin(model.angular_frequencies[k] * t + model.phases(i, k));
    }
  }
  return eta;
}

ObserverGain BuildAdversaryObserver(const LinearSystem& sys, const Eigen::MatrixXd& K,
                                    std::span<const std::complex<double>> poles,
                                    std::mt19937_64& rng) {
  ObserverGain g;
  g.L = PlaceObserverGain(sys.ClosedLoop(K), sys.C, poles, rng);
  g.norm = SpectralNorm(g.L);
  g.large = g.norm > 1e6;
  return g;
}

double TimeConstant(const Eigen::MatrixXd& A_cl) {
  const HurwitzTest h = IsHurwitz(A_cl);
  if (!h.hurwitz) throw SolverError("unstable gain");
  return 1.0 / std::abs(h.spectrum.max_real_part);
}

SimTrace Simulate(const LinearSystem& sys, const Eigen::MatrixXd& K,
                  const Eigen::MatrixXd& L, const Eigen::MatrixXd& Q,
                  const Eigen::MatrixXd& R, const NoiseModel& noise,
                  const SimOptions& options) {
  const int n = sys.num_states();
  const int p = sys.num_outputs();
  const Eigen::MatrixXd F = sys.ClosedLoop(K);
  const double tau = TimeConstant(F);
  const Eigen::MatrixXd F_obs = F - L * sys.C;
  const double fastest = std::max(std::abs(ComputeSpectrum(F).min_real_part),
                                  std::abs(ComputeSpectrum(F_obs).min_real_part));

  const double dt = options.dt > 0.0 ? options.dt : 1e-3 * tau;
  const double horizon = options.horizon > 0.0 ? options.horizon : 20.0 * tau;
  if (dt > 0.1 / fastest) {
    throw ConfigError("step size dt=" + std::to_string(dt) + " exceeds 0.1/" +
                      std::to_string(fastest));
  }
  if (noise.phases.rows() != p) throw ConfigError("noise model has wrong channel count");
  const Eigen::VectorXd x0 = options.x0.size() ? options.x0 : Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd xhat0 =
      options.xhat0.size() ? options.xhat0 : Eigen::VectorXd::Zero(n);
  if (x0.size() != n || xhat0.size() != n) throw ConfigError("initial state has wrong size");

  const auto steps = static_cast<Eigen::Index>(std::llround(horizon / dt));
  const Eigen::MatrixXd W_cost = Symmetrize(Q + K.transpose() * R * K);

  // Augmented state s = [x; xhat; cost].
  auto rhs = [&](double t, const Eigen::VectorXd& s) {
    Eigen::VectorXd ds(2 * n + 1);
    const auto x = s.head(n);
    const auto xh = s.segment(n, n);
    ds.head(n) = F * x;
    ds.segment(n, n) = F * xh + L * (sys.C * x + SensingNoise(noise, t) - sys.C * xh);
    ds(2 * n) = x.dot(W_cost * x);
    return ds;
  };

  SimTrace tr;
  tr.t.resize(steps + 1);
  tr.x.resize(n, steps + 1);
  tr.xhat.resize(n, steps + 1);
  tr.cost.resize(steps + 1);
  Eigen::VectorXd s(2 * n + 1);
  s << x0, xhat0, 0.0;
  for (Eigen::Index k = 0; k <= steps; ++k) {
    const double t = k * dt;
    tr.t(k) = t;
    tr.x.col(k) = s.head(n);
    tr.xhat.col(k) = s.segment(n, n);
    tr.cost(k) = s(2 * n);
    if (!s.allFinite()) {
      throw SolverError("simulation produced non-finite state at t=" + std::to_string(t));
    }
    if (k == steps) break;
    const Eigen::VectorXd k1 = rhs(t, s);
    const Eigen::VectorXd k2 = rhs(t + 0.5 * dt, s + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = rhs(t + 0.5 * dt, s + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = rhs(t + dt, s + dt * k3);
    s += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  tr.e = tr.x - tr.xhat;
  tr.y = sys.C * tr.x;
  tr.y_noisy = tr.y;
  for (Eigen::Index k = 0; k <= steps; ++k) tr.y_noisy.col(k) += SensingNoise(noise, tr.t(k));
  return tr;
}

double TimeAveragedError(const SimTrace& trace, double from_fraction) {
  const double t0 = from_fraction * trace.t(trace.t.size() - 1);
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index k = 0; k < trace.t.size(); ++k) {
    if (trace.t(k) < t0) continue;
    sum += trace.e.col(k).norm();
    ++count;
  }
  return count ? sum / count : 0.0;
}

void WriteTraceCsv(std::ostream& os, const SimTrace& trace) {
  const auto n = trace.x.rows();
  os << 't';
  for (const char* prefix : {"x", "xhat", "e"}) {
    for (Eigen::Index i = 1; i <= n; ++i) os << ',' << prefix << i;
  }
  os << ",cost\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    os << buf;
  };
  for (Eigen::Index k = 0; k < trace.t.size(); ++k) {
    put(trace.t(k));
    for (const Eigen::MatrixXd* M : {&trace.x, &trace.xhat, &trace.e}) {
      for (Eigen::Index i = 0; i < n; ++i) {
        os << ',';
        put((*M)(i, k));
      }
    }
    os << ',';
    put(trace.cost(k));
    os << '\n';
  }
}

}  // namespace covertlqr
