#include "covertlqr/cli.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "covertlqr/adversary_sim.h"
#include "covertlqr/design_trace.h"
#include "covertlqr/design_traceinv.h"
#include "covertlqr/error.h"
#include "covertlqr/linalg.h"
#include "covertlqr/tradeoff_bounds.h"

namespace covertlqr::cli {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---- config parsing ----

void CheckKeys(const json& obj, const std::string& where,
               std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) throw ConfigError(where + "." + item.key() + ": unknown key");
  }
}

const json& Require(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) throw ConfigError(where + "." + key + ": missing");
  return obj.at(key);
}

double Number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field + ": expected a number");
  return v.get<double>();
}

Eigen::MatrixXd Matrix(const json& v, const std::string& field) {
  if (v.is_number()) return Eigen::MatrixXd::Constant(1, 1, v.get<double>());
  if (!v.is_array()) throw ConfigError(field + ": expected a nested array");
  const auto rows = static_cast<Eigen::Index>(v.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  if (!v[0].is_array()) throw ConfigError(field + ": expected a nested array");
  const auto cols = static_cast<Eigen::Index>(v[0].size());
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(field + ": row " + std::to_string(i) + " has length " +
                        std::to_string(row.is_array() ? row.size() : 0) + ", expected " +
                        std::to_string(cols));
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      M(i, j) = Number(row[static_cast<std::size_t>(j)],
                       field + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
    }
  }
  return M;
}

Eigen::VectorXd Vector(const json& v, const std::string& field) {
  if (!v.is_array()) throw ConfigError(field + ": expected an array");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = Number(v[i], field + "[" + std::to_string(i) + "]");
  }
  return out;
}

std::complex<double> Pole(const json& v, const std::string& field) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2) {
    return {Number(v[0], field + "[0]"), Number(v[1], field + "[1]")};
  }
  throw ConfigError(field + ": expected a number or a [re, im] pair");
}

json MatrixJson(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// ---- shared pieces of the commands ----

struct Options {
  fs::path config;
  std::string metric;
  int jobs = 1;
  fs::path out = ".";
  std::optional<std::uint64_t> seed;
  fs::path design;
  fs::path dump_sdp;
};

std::shared_ptr<spdlog::logger> Logger() {
  auto log = spdlog::get("covertlqr");
  if (!log) log = spdlog::stderr_color_mt("covertlqr");
  const char* env = std::getenv("COVERTLQR_LOG");
  const std::string level = env ? env : "info";
  if (level == "error") {
    log->set_level(spdlog::level::err);
  } else if (level == "debug") {
    log->set_level(spdlog::level::debug);
  } else {
    log->set_level(spdlog::level::info);
  }
  return log;
}

std::vector<double> Grid(const RunConfig& cfg) {
  if (cfg.lambdas.empty()) throw ConfigError("sweep.lambdas: missing or empty");
  return cfg.lambdas;
}

DesignWeights WithLambda(const DesignWeights& w, double lambda) {
  DesignWeights out = w;
  out.lambda = lambda;
  return out;
}

struct DesignOutcome {
  ControllerDesign design;
  int iterations = 0;
  bool converged = true;
  std::optional<double> J2_reported;
  std::vector<CcpHistoryRow> history;
};

DesignOutcome RunDesigner(const RunConfig& cfg, const DesignWeights& w,
                          const std::string& metric) {
  DesignOutcome out;
  if (metric == "trace") {
    const Problem1Result r = SolveProblem1(cfg.sys, w);
    out.design = r.design;
    out.iterations = r.solver_iterations;
    return out;
  }
  const CcpResult r = CcpRun(cfg.sys, w, cfg.max_iters);
  if (!r.failure.empty()) throw SolverError("convex-concave loop aborted: " + r.failure);
  if (r.design.performance_slack < -1e-6) {
    throw SolverError("audit failure: certified budget exceeded by " +
                      Fmt(-r.design.performance_slack));
  }
  out.design = r.design;
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.J2_reported = r.J2_reported;
  out.history = r.history;
  return out;
}

std::string MetricOf(const Options& o, const RunConfig& cfg) {
  const std::string m = o.metric.empty() ? cfg.metric : o.metric;
  if (m != "trace" && m != "trace_inv") throw ConfigError("metric: expected trace or trace_inv");
  return m;
}

void PrintMatrix(std::ostream& os, const std::string& name, const Eigen::MatrixXd& M) {
  os << name << " =\n";
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    os << "  ";
    for (Eigen::Index j = 0; j < M.cols(); ++j) os << (j ? "  " : "") << Fmt(M(i, j));
    os << '\n';
  }
}

// ---- commands ----

int CmdDesign(const Options& o) {
  auto log = Logger();
  const RunConfig cfg = LoadConfig(o.config);
  const std::string metric = MetricOf(o, cfg);
  log->info("design: metric={} lambda={}", metric, cfg.weights.lambda);
  if (!o.dump_sdp.empty()) {
    // Problem 1 model, or the first convex-concave subproblem.
    const CareSolution care = SolveCare(cfg.sys.A, cfg.sys.B, cfg.weights.Q, cfg.weights.R);
    const int n = cfg.sys.num_states();
    const sdp::Model model =
        metric == "trace"
            ? BuildProblem1Sdp(cfg.sys, cfg.weights, care.P)
            : BuildCcpSubproblem(CcpInitialize(cfg.sys, cfg.weights), cfg.sys, cfg.weights, care.P,
                                 PsdSqrt(cfg.sys.C.transpose() * cfg.sys.C +
                                         cfg.weights.epsilon * Eigen::MatrixXd::Identity(n, n)));
    std::ostringstream dump;
    model.Dump(dump);
    WriteFileAtomic(o.dump_sdp, dump.str());
  }
  const DesignOutcome r = RunDesigner(cfg, cfg.weights, metric);
  const ControllerDesign& d = r.design;
  if (!r.converged) log->warn("iteration cap reached without convergence");

  json j;
  j["metric"] = metric;
  j["lambda"] = cfg.weights.lambda;
  j["epsilon"] = cfg.weights.epsilon;
  j["K"] = MatrixJson(d.K);
  j["A_cl"] = MatrixJson(cfg.sys.ClosedLoop(d.K));
  j["J_s"] = d.J_s;
  j["J_o1"] = d.J_o1;
  if (d.J_o2) {
    j["J_o2"] = *d.J_o2;
  } else {
    j["J_o2"] = "unbounded";
  }
  if (r.J2_reported) j["J2_reported"] = *r.J2_reported;
  j["performance_slack"] = d.performance_slack;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["audit"] = {{"hurwitz", true}, {"budget_ok", d.performance_slack >= -1e-6}};
  fs::create_directories(o.out);
  WriteFileAtomic(o.out / "design.json", j.dump(2) + "\n");

  if (!r.history.empty()) {
    std::ostringstream csv;
    csv << "iteration,objective,trace_difference,budget_slack,solver_iterations,inexact\n";
    for (const auto& h : r.history) {
      csv << h.iteration << ',' << Fmt(h.objective) << ',' << Fmt(h.trace_difference) << ','
          << Fmt(h.budget_slack) << ',' << h.solver_iterations << ',' << (h.inexact ? 1 : 0)
          << '\n';
    }
    WriteFileAtomic(o.out / "ccp_history.csv", csv.str());
  }

  std::cout << "metric " << metric << "  lambda " << Fmt(cfg.weights.lambda) << '\n';
  PrintMatrix(std::cout, "K", d.K);
  PrintMatrix(std::cout, "A+BK", cfg.sys.ClosedLoop(d.K));
  std::cout << "J_s   " << Fmt(d.J_s) << '\n'
            << "J_o1  " << Fmt(d.J_o1) << '\n'
            << "J_o2  " << (d.J_o2 ? Fmt(*d.J_o2) : std::string("unbounded")) << '\n'
            << "slack " << Fmt(d.performance_slack) << '\n'
            << "iters " << r.iterations << (r.converged ? "" : " (cap)") << '\n';
  return kExitOk;
}

std::string CsvSafe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

int CmdSweep(const Options& o) {
  auto log = Logger();
  const RunConfig cfg = LoadConfig(o.config);
  const std::vector<double> grid = Grid(cfg);
  const TradeoffAnalyzer analyzer(cfg.sys, WithLambda(cfg.weights, 0.0));

  struct Row {
    std::string line;
    bool ok = false;
  };
  std::vector<Row> rows(grid.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      const double lambda = grid[i];
      std::string status = "ok";
      std::string J1 = "nan", J2 = "nan";
      bool any = false;
      try {
        const DesignOutcome r1 = RunDesigner(cfg, WithLambda(cfg.weights, lambda), "trace");
        J1 = Fmt(r1.design.J_o1);
        any = true;
      } catch (const std::exception& e) {
        status = "trace:" + CsvSafe(e.what());
      }
      try {
        const DesignOutcome r2 = RunDesigner(cfg, WithLambda(cfg.weights, lambda), "trace_inv");
        J2 = r2.design.J_o2 ? Fmt(*r2.design.J_o2) : "unbounded";
        any = true;
        if (!r2.converged) status = status == "ok" ? "ccp_cap" : status + ";ccp_cap";
      } catch (const std::exception& e) {
        status = (status == "ok" ? "" : status + ";") + "trace_inv:" + CsvSafe(e.what());
      }
      const TradeoffReport b = analyzer.Evaluate(lambda);
      std::ostringstream line;
      line << Fmt(lambda) << ',' << J1 << ',' << J2 << ',' << Fmt(b.f_lambda) << ','
           << Fmt(b.j1_lower) << ',' << Fmt(b.j2_lower_local) << ','
           << (b.j2_local_valid ? 1 : 0) << ',' << Fmt(b.j2_lower_global) << ',' << status;
      rows[i] = {line.str(), any};
      std::lock_guard<std::mutex> lock(log_mutex);
      log->info("sweep lambda={} status={}", lambda, status);
    }
  };
  const int jobs = std::max(1, std::min<int>(o.jobs, static_cast<int>(grid.size())));
  std::vector<std::thread> threads;
  for (int t = 1; t < jobs; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  std::ostringstream csv;
  csv << "lambda,J1,J2,f_lambda,j1_lb,j2_lb_local,j2_lb_local_valid,j2_lb_global,status\n";
  bool any_ok = false;
  for (const Row& r : rows) {
    csv << r.line << '\n';
    any_ok = any_ok || r.ok;
  }
  fs::create_directories(o.out);
  WriteFileAtomic(o.out / "sweep.csv", csv.str());
  std::cout << csv.str();
  return any_ok ? kExitOk : kExitSolver;
}

int CmdBounds(const Options& o) {
  const RunConfig cfg = LoadConfig(o.config);
  const std::vector<double> grid = Grid(cfg);
  const TradeoffAnalyzer analyzer(cfg.sys, WithLambda(cfg.weights, 0.0));
  std::ostringstream csv;
  csv << "lambda,f_lambda,j1_lb,j2_lb_local,j2_lb_local_valid,"
         "j2_lb_local_trace_weighted,j2_lb_global,j2_lb_best\n";
  for (const TradeoffReport& r : analyzer.Sweep(grid)) {
    csv << Fmt(r.lambda) << ',' << Fmt(r.f_lambda) << ',' << Fmt(r.j1_lower) << ','
        << Fmt(r.j2_lower_local) << ',' << (r.j2_local_valid ? 1 : 0) << ','
        << Fmt(r.j2_lower_local_trace_weighted) << ',' << Fmt(r.j2_lower_global) << ','
        << Fmt(r.j2_lower_best) << '\n';
  }
  fs::create_directories(o.out);
  WriteFileAtomic(o.out / "bounds.csv", csv.str());
  std::cout << "J1(0) " << Fmt(analyzer.J1_at_zero()) << "  J2(0) "
            << Fmt(analyzer.J2_at_zero()) << '\n'
            << csv.str();
  return kExitOk;
}

fs::path DesignPath(const Options& o) {
  const fs::path p = o.design.empty() ? o.out / "design.json" : o.design;
  if (!fs::exists(p)) throw ConfigError("design file not found: " + p.string());
  return p;
}

int CmdSimulate(const Options& o) {
  auto log = Logger();
  const RunConfig cfg = LoadConfig(o.config);
  const Eigen::MatrixXd K_design = ReadDesignGain(DesignPath(o));
  const int n = cfg.sys.num_states();
  if (K_design.rows() != cfg.sys.num_inputs() || K_design.cols() != n) {
    throw ConfigError("design K has wrong shape for this system");
  }
  const CareSolution care = SolveCare(cfg.sys.A, cfg.sys.B, cfg.weights.Q, cfg.weights.R);

  std::vector<std::complex<double>> poles = cfg.sim.poles;
  if (poles.empty()) {
    for (int i = 1; i <= n; ++i) poles.emplace_back(-static_cast<double>(i), 0.0);
  }
  const std::uint64_t seed = o.seed.value_or(cfg.sim.seed);
  NoiseModel noise = cfg.sim.random_phases ? DefaultNoise(cfg.sys.num_outputs(), seed)
                                           : DefaultNoise(cfg.sys.num_outputs());
  noise.magnitude = cfg.sim.noise_magnitude;

  struct Case {
    std::string label;
    Eigen::MatrixXd K;
    Eigen::MatrixXd L;
  };
  std::vector<Case> cases{{"nominal", care.K, {}}, {"design", K_design, {}}};
  double tau = 0.0, fastest = 0.0;
  for (Case& c : cases) {
    std::mt19937_64 rng(seed);
    ObserverGain g;
    try {
      g = BuildAdversaryObserver(cfg.sys, c.K, poles, rng);
    } catch (const Error& e) {
      throw SolverError("observer placement (" + c.label + "): " + e.what());
    }
    if (g.large) log->warn("{} observer gain norm {} exceeds 1e6", c.label, g.norm);
    c.L = g.L;
    const Eigen::MatrixXd F = cfg.sys.ClosedLoop(c.K);
    tau = std::max(tau, TimeConstant(F));
    fastest = std::max({fastest, std::abs(ComputeSpectrum(F).min_real_part),
                        std::abs(ComputeSpectrum(F - c.L * cfg.sys.C).min_real_part)});
  }
  // Both runs share one grid so their averages are comparable.
  SimOptions so;
  so.x0 = cfg.sim.x0;
  so.xhat0 = cfg.sim.xhat0;
  so.horizon = cfg.sim.horizon > 0.0 ? cfg.sim.horizon : 20.0 * tau;
  so.dt = cfg.sim.dt > 0.0 ? cfg.sim.dt : std::min(1e-3 * tau, 0.05 / fastest);

  fs::create_directories(o.out);
  for (const Case& c : cases) {
    const SimTrace tr = Simulate(cfg.sys, c.K, c.L, cfg.weights.Q, cfg.weights.R, noise, so);
    std::ostringstream csv;
    WriteTraceCsv(csv, tr);
    WriteFileAtomic(o.out / ("sim_" + c.label + ".csv"), csv.str());
    std::cout << c.label << "  mean |e| over [T/2, T] " << Fmt(TimeAveragedError(tr))
              << "  cost(T) " << Fmt(tr.cost(tr.cost.size() - 1)) << "  |L| "
              << Fmt(SpectralNorm(c.L)) << '\n';
  }
  return kExitOk;
}

int CmdReport(const Options& o) {
  const RunConfig cfg = LoadConfig(o.config);
  const CareSolution care = SolveCare(cfg.sys.A, cfg.sys.B, cfg.weights.Q, cfg.weights.R);
  std::vector<std::pair<std::string, Eigen::MatrixXd>> gains{{"nominal", care.K}};
  if (!o.design.empty()) gains.emplace_back("design", ReadDesignGain(DesignPath(o)));

  std::ostringstream csv;
  csv << "gain,trace_W,trace_W_inv";
  for (int i = 1; i <= cfg.sys.num_states(); ++i) csv << ",eig" << i;
  csv << '\n';
  std::cout << "gain      tr(W)          tr(W^-1)       eigenvalues (descending)\n";
  for (const auto& [label, K] : gains) {
    if (K.rows() != cfg.sys.num_inputs() || K.cols() != cfg.sys.num_states()) {
      throw ConfigError("design K has wrong shape for this system");
    }
    const GramianReport rep = EigenReport(ObservabilityGramian(cfg.sys, K, 0.0));
    std::cout << FormatReportRow(label, rep) << '\n';
    csv << label << ',' << Fmt(rep.trace_W) << ','
        << (rep.trace_W_inv ? Fmt(*rep.trace_W_inv) : std::string("unbounded"));
    for (Eigen::Index i = 0; i < rep.eigenvalues.size(); ++i) csv << ',' << Fmt(rep.eigenvalues(i));
    csv << '\n';
  }
  fs::create_directories(o.out);
  WriteFileAtomic(o.out / "report.csv", csv.str());
  return kExitOk;
}

}  // namespace

RunConfig ParseConfig(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  CheckKeys(root, "config", {"system", "weights", "design", "sweep", "sim"});
  RunConfig cfg;

  const json& sys = Require(root, "config", "system");
  CheckKeys(sys, "system", {"A", "B", "C", "dims"});
  cfg.sys.A = Matrix(Require(sys, "system", "A"), "system.A");
  cfg.sys.B = Matrix(Require(sys, "system", "B"), "system.B");
  cfg.sys.C = Matrix(Require(sys, "system", "C"), "system.C");
  if (sys.contains("dims")) {
    const json& d = sys.at("dims");
    CheckKeys(d, "system.dims", {"n", "m", "p"});
    auto expect = [&](const char* key, Eigen::Index actual, const char* field) {
      if (!d.contains(key)) return;
      const double v = Number(d.at(key), std::string("system.dims.") + key);
      if (v != static_cast<double>(actual)) {
        throw ConfigError(std::string(field) + ": dimension " + std::to_string(actual) +
                          " does not match dims." + key + "=" + Fmt(v));
      }
    };
    expect("n", cfg.sys.A.rows(), "system.A");
    expect("m", cfg.sys.B.cols(), "system.B");
    expect("p", cfg.sys.C.rows(), "system.C");
  }
  CheckDimensions(cfg.sys);

  const json& w = Require(root, "config", "weights");
  CheckKeys(w, "weights", {"Q", "R", "V", "lambda", "epsilon", "delta"});
  cfg.weights.Q = Matrix(Require(w, "weights", "Q"), "weights.Q");
  cfg.weights.R = Matrix(Require(w, "weights", "R"), "weights.R");
  cfg.weights.V = Matrix(Require(w, "weights", "V"), "weights.V");
  if (w.contains("lambda")) cfg.weights.lambda = Number(w.at("lambda"), "weights.lambda");
  if (w.contains("epsilon")) cfg.weights.epsilon = Number(w.at("epsilon"), "weights.epsilon");
  if (w.contains("delta")) cfg.weights.delta = Number(w.at("delta"), "weights.delta");

  if (root.contains("design")) {
    const json& d = root.at("design");
    CheckKeys(d, "design", {"metric", "max_iters"});
    if (d.contains("metric")) {
      if (!d.at("metric").is_string()) throw ConfigError("design.metric: expected a string");
      cfg.metric = d.at("metric").get<std::string>();
      if (cfg.metric != "trace" && cfg.metric != "trace_inv") {
        throw ConfigError("design.metric: expected trace or trace_inv");
      }
    }
    if (d.contains("max_iters")) {
      const double v = Number(d.at("max_iters"), "design.max_iters");
      if (v < 1 || v != std::floor(v)) throw ConfigError("design.max_iters: expected a positive integer");
      cfg.max_iters = static_cast<int>(v);
    }
  }
  if (root.contains("sweep")) {
    const json& s = root.at("sweep");
    CheckKeys(s, "sweep", {"lambdas"});
    const Eigen::VectorXd g = Vector(Require(s, "sweep", "lambdas"), "sweep.lambdas");
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (!(g(i) >= 0.0)) throw ConfigError("sweep.lambdas: lambda negative");
      cfg.lambdas.push_back(g(i));
    }
  }
  if (root.contains("sim")) {
    const json& s = root.at("sim");
    CheckKeys(s, "sim", {"poles", "noise", "x0", "xhat0", "horizon", "dt", "seed"});
    if (s.contains("poles")) {
      const json& p = s.at("poles");
      if (!p.is_array()) throw ConfigError("sim.poles: expected an array");
      for (std::size_t i = 0; i < p.size(); ++i) {
        cfg.sim.poles.push_back(Pole(p[i], "sim.poles[" + std::to_string(i) + "]"));
      }
      if (static_cast<int>(cfg.sim.poles.size()) != cfg.sys.num_states()) {
        throw ConfigError("sim.poles: expected " + std::to_string(cfg.sys.num_states()) + " poles");
      }
    }
    if (s.contains("noise")) {
      const json& nz = s.at("noise");
      CheckKeys(nz, "sim.noise", {"magnitude", "random_phases"});
      if (nz.contains("magnitude")) {
        cfg.sim.noise_magnitude = Number(nz.at("magnitude"), "sim.noise.magnitude");
      }
      if (nz.contains("random_phases")) {
        if (!nz.at("random_phases").is_boolean()) {
          throw ConfigError("sim.noise.random_phases: expected a boolean");
        }
        cfg.sim.random_phases = nz.at("random_phases").get<bool>();
      }
    }
    const auto n = cfg.sys.A.rows();
    if (s.contains("x0")) {
      cfg.sim.x0 = Vector(s.at("x0"), "sim.x0");
      if (cfg.sim.x0.size() != n) throw ConfigError("sim.x0: expected length " + std::to_string(n));
    }
    if (s.contains("xhat0")) {
      cfg.sim.xhat0 = Vector(s.at("xhat0"), "sim.xhat0");
      if (cfg.sim.xhat0.size() != n) throw ConfigError("sim.xhat0: expected length " + std::to_string(n));
    }
    if (s.contains("horizon")) cfg.sim.horizon = Number(s.at("horizon"), "sim.horizon");
    if (s.contains("dt")) cfg.sim.dt = Number(s.at("dt"), "sim.dt");
    if (s.contains("seed")) {
      const json& v = s.at("seed");
      if (!v.is_number_unsigned()) throw ConfigError("sim.seed: expected a nonnegative integer");
      cfg.sim.seed = v.get<std::uint64_t>();
    }
  }
  ValidateOrThrow(cfg.sys, cfg.weights);
  return cfg;
}

RunConfig LoadConfig(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str());
}

void WriteFileAtomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw ConfigError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

Eigen::MatrixXd ReadDesignGain(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("design file not found: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("design file is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object() || !j.contains("K")) throw ConfigError("design file: missing K");
  return Matrix(j.at("K"), "design.K");
}

std::string FormatReportRow(const std::string& label, const GramianReport& report) {
  char buf[64];
  std::string row = label;
  row.resize(std::max<std::size_t>(row.size(), 8), ' ');
  std::snprintf(buf, sizeof(buf), "  %-13.6g", report.trace_W);
  row += buf;
  if (report.trace_W_inv) {
    std::snprintf(buf, sizeof(buf), "  %-13.6g", *report.trace_W_inv);
  } else {
    std::snprintf(buf, sizeof(buf), "  %-13s", "unbounded");
  }
  row += buf;
  for (Eigen::Index i = 0; i < report.eigenvalues.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "  %.6g", report.eigenvalues(i));
    row += buf;
  }
  return row;
}

int Run(int argc, const char* const* argv) {
  CLI::App app{"Controller synthesis against adversarial observability"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON run configuration")->required();
    sub->add_option("--metric", o.metric, "trace or trace_inv")
        ->check(CLI::IsMember({"trace", "trace_inv"}));
    sub->add_option("--jobs", o.jobs, "concurrent sweep rows")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", seed, "seed for observer placement and noise phases");
    sub->add_option("--design", o.design, "design.json to read the gain from");
  };
  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const Options&);
  };
  const Command commands[] = {
      {"design", "run a designer and write design.json", CmdDesign},
      {"sweep", "run both designers and the bounds over the lambda grid", CmdSweep},
      {"bounds", "evaluate the trade-off lower bounds over the lambda grid", CmdBounds},
      {"simulate", "simulate the adversary observer for nominal and designed gains", CmdSimulate},
      {"report", "print Gramian trace and eigenvalue rows", CmdReport},
  };
  std::vector<CLI::App*> subs;
  for (const Command& c : commands) {
    subs.push_back(app.add_subcommand(c.name, c.help));
    add_common(subs.back());
  }
  subs[0]->add_option("--dump-sdp", o.dump_sdp, "write the SDP model in SDPDUMP v1 text form");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  for (CLI::App* sub : subs) {
    if (sub->count("--seed")) o.seed = seed;
  }

  auto log = Logger();
  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) return commands[i].fn(o);
    }
  } catch (const Error& e) {
    log->error("{}", e.what());
    switch (e.kind()) {
      case ErrorKind::kConfig: return kExitConfig;
      case ErrorKind::kInfeasible: return kExitInfeasible;
      case ErrorKind::kSolver: return kExitSolver;
    }
  } catch (const fs::filesystem_error& e) {
    log->error("{}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kExitSolver;
  }
  return kExitConfig;
}

}  // namespace covertlqr::cli
