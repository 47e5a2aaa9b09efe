#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covertlqr/gramian_metrics.h"
#include "covertlqr/system_model.h"

namespace covertlqr::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInfeasible = 2,
  kExitConfig = 3,
  kExitSolver = 4,
};

struct SimConfig {
  std::vector<std::complex<double>> poles;  // empty: -1, -2, ..., -n
  double noise_magnitude = 0.01;
  bool random_phases = false;
  Eigen::VectorXd x0;     // empty: simulator default
  Eigen::VectorXd xhat0;  // empty: simulator default
  double horizon = 0.0;   // <= 0: simulator default
  double dt = 0.0;
  std::uint64_t seed = 0;
};

struct RunConfig {
  LinearSystem sys;
  DesignWeights weights;
  std::string metric = "trace_inv";
  int max_iters = 200;
  std::vector<double> lambdas;
  SimConfig sim;
};

/// Strict parse: unknown keys, wrong types and inconsistent dimensions throw
/// a configuration error naming the field. The result is validated.
RunConfig ParseConfig(const std::string& json_text);
RunConfig LoadConfig(const std::filesystem::path& path);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path, const std::string& contents);

/// Gain stored under "K" in a design.json file.
Eigen::MatrixXd ReadDesignGain(const std::filesystem::path& path);

/// One Gramian table line: label, tr(W), tr(W^{-1}) or "unbounded", then the
/// eigenvalues in descending order.
std::string FormatReportRow(const std::string& label, const GramianReport& report);

/// Entry point behind the covertlqr binary; returns the process exit code.
int Run(int argc, const char* const* argv);

}  // namespace covertlqr::cli
