#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pinnode/collocation.hpp"
#include "pinnode/errors.hpp"
#include "pinnode/hutchinson.hpp"
#include "pinnode/metrics.hpp"
#include "pinnode/network.hpp"
#include "pinnode/ode_system.hpp"
#include "pinnode/reference.hpp"
#include "pinnode/train.hpp"

namespace pinnode {

// How the heat system's stiffness enters the loss: scale the initial
// condition up by |A| (default) or scale the residual term down by 1/|A|.
enum class HeatScaling { Ic, Residual };

struct SweepSpec {
  OdeKind benchmark = OdeKind::Shm;
  std::vector<long> complexities;  // shm: horizon multiplier m in T = m*pi; heat: grid size N
  std::vector<int> depths = {2, 4, 8};
  std::vector<int> widths = {64, 128};
  std::vector<double> lrs = {1e-3, 1e-4};
  std::vector<Arch> archs = {Arch::Mlp, Arch::ResNet};
  std::vector<Formulation> formulations = {Formulation::Uniform, Formulation::Adaptive};
  std::vector<std::uint64_t> seeds = {0};
  long iterations = 10241;
  int collocation_override = 0;  // 0 = benchmark default
  Reduction residual_reduction = Reduction::Mean;
  HeatScaling heat_scaling = HeatScaling::Ic;
  double rtol = 1e-8;
  double atol = 1e-10;
  int probes = 64;
};

inline std::vector<long> default_complexities(OdeKind k) {
  if (k == OdeKind::Shm) return {1, 2, 4, 8, 16, 32};
  return {4, 8, 16, 32, 64, 128, 256, 512};
}

// One cell of the grid.
struct RunConfig {
  OdeKind benchmark = OdeKind::Shm;
  long complexity = 1;
  int depth = 2;
  int width = 64;
  double lr = 1e-3;
  Arch arch = Arch::Mlp;
  Formulation formulation = Formulation::Uniform;
  std::uint64_t seed = 0;
  long iterations = 10241;
  int collocation_override = 0;
  Reduction residual_reduction = Reduction::Mean;
  HeatScaling heat_scaling = HeatScaling::Ic;
  double rtol = 1e-8;
  double atol = 1e-10;
  int probes = 64;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string config_id(const RunConfig& rc) {
  char lr[24];
  std::snprintf(lr, sizeof(lr), "%g", rc.lr);
  std::string id = benchmark_name(rc.benchmark);
  id += "-c" + std::to_string(rc.complexity);
  id += "-d" + std::to_string(rc.depth);
  id += "-w" + std::to_string(rc.width);
  id += "-lr";
  id += lr;
  id += "-";
  id += arch_name(rc.arch);
  id += "-";
  id += formulation_name(rc.formulation);
  id += "-s" + std::to_string(rc.seed);
  return id;
}

inline int default_collocation(const RunConfig& rc) {
  return rc.benchmark == OdeKind::Shm ? static_cast<int>(256 * rc.complexity) : 1024;
}

inline TrainingConfig make_training_config(const RunConfig& rc) {
  TrainingConfig cfg;
  if (rc.benchmark == OdeKind::Shm) {
    cfg.system = make_shm(1.0, static_cast<double>(rc.complexity) * std::numbers::pi);
  } else {
    cfg.system = make_heat(static_cast<int>(rc.complexity), 0.1);
    if (rc.heat_scaling == HeatScaling::Residual) {
      cfg.residual_scale = 1.0 / cfg.system.ic_weight;
      cfg.system.ic_weight = 1.0;
    }
  }
  cfg.network.depth = rc.depth;
  cfg.network.width = rc.width;
  cfg.network.arch = rc.arch;
  cfg.network.output_dim = cfg.system.dim;
  cfg.formulation = rc.formulation;
  cfg.learning_rate = rc.lr;
  cfg.iterations = rc.iterations;
  cfg.collocation_count = rc.collocation_override > 0 ? rc.collocation_override
                                                      : default_collocation(rc);
  cfg.seed = rc.seed;
  cfg.residual_reduction = rc.residual_reduction;
  return cfg;
}

// Grid expansion in a fixed canonical order: complexity, depth, width,
// lr (descending), arch (mlp first), formulation (uniform first), seed.
inline std::vector<RunConfig> expand_runs(const SweepSpec& spec) {
  SweepSpec s = spec;
  if (s.complexities.empty()) s.complexities = default_complexities(s.benchmark);
  std::sort(s.complexities.begin(), s.complexities.end());
  std::sort(s.depths.begin(), s.depths.end());
  std::sort(s.widths.begin(), s.widths.end());
  std::sort(s.lrs.begin(), s.lrs.end(), std::greater<>());
  std::sort(s.archs.begin(), s.archs.end());
  std::sort(s.formulations.begin(), s.formulations.end());
  std::sort(s.seeds.begin(), s.seeds.end());

  std::vector<RunConfig> runs;
  for (long c : s.complexities)
    for (int d : s.depths)
      for (int w : s.widths)
        for (double lr : s.lrs)
          for (Arch a : s.archs)
            for (Formulation f : s.formulations)
              for (std::uint64_t seed : s.seeds) {
                RunConfig rc;
                rc.benchmark = s.benchmark;
                rc.complexity = c;
                rc.depth = d;
                rc.width = w;
                rc.lr = lr;
                rc.arch = a;
                rc.formulation = f;
                rc.seed = seed;
                rc.iterations = s.iterations;
                rc.collocation_override = s.collocation_override;
                rc.residual_reduction = s.residual_reduction;
                rc.heat_scaling = s.heat_scaling;
                rc.rtol = s.rtol;
                rc.atol = s.atol;
                rc.probes = s.probes;
                runs.push_back(rc);
              }
  return runs;
}

// Network prediction at many points, row-major [point][state].
inline std::vector<double> predict(const NetworkConfig& cfg, const ParamVector& params,
                                   std::span<const double> ts) {
  BatchWorkspace<double> ws;
  ws.resize(cfg);
  const int n = cfg.output_dim;
  std::vector<double> out(ts.size() * static_cast<std::size_t>(n));
  for (std::size_t base = 0; base < ts.size(); base += kLanes) {
    const int active = static_cast<int>(std::min<std::size_t>(kLanes, ts.size() - base));
    for (int q = 0; q < kLanes; ++q)
      ws.ts[q] = ts[base + static_cast<std::size_t>(q < active ? q : active - 1)];
    extended_forward_batch<double>(cfg, params.data, ws);
    for (int q = 0; q < active; ++q)
      for (int i = 0; i < n; ++i)
        out[(base + q) * static_cast<std::size_t>(n) + i] =
            ws.u[static_cast<std::size_t>(i) * kLanes + q];
  }
  return out;
}

// Reference solution at the held-out points.  The oscillator uses its closed
// form; heat uses RK45 below N = 128 and the spectral solution from there up.
inline Trajectory reference_solution(const RunConfig& rc, std::span<const double> points) {
  const TrainingConfig cfg = make_training_config(rc);
  Trajectory traj;
  traj.dim = cfg.system.dim;
  traj.rtol = rc.rtol;
  traj.atol = rc.atol;
  if (rc.benchmark == OdeKind::Shm) {
    for (double t : points) {
      const auto u = shm_closed_form(1.0, t);
      traj.times.push_back(t);
      traj.states.insert(traj.states.end(), u.begin(), u.end());
    }
    return traj;
  }
  if (rc.complexity >= 128) {
    HeatParams hp{static_cast<int>(rc.complexity), cfg.system.horizon};
    for (double t : points) {
      const auto u = heat_spectral_solution(hp, t);
      traj.times.push_back(t);
      traj.states.insert(traj.states.end(), u.begin(), u.end());
    }
    return traj;
  }
  return rk45_integrate(cfg.system, points, rc.rtol, rc.atol);
}

struct ResultRow {
  RunConfig config;
  std::string id;
  long iterations_run = 0;
  bool diverged = false;
  long diverged_at = -1;
  double rel_error_eval = 0.0;
  double rel_error_ic = 0.0;
  double residual_loss = 0.0;
  double ic_loss = 0.0;
  double residual_trace = 0.0;
  double residual_trace_stderr = 0.0;
  double ic_trace = 0.0;
  double ic_trace_stderr = 0.0;
  double wall_seconds = 0.0;
};

// Trains one grid cell and assembles its result row.  A precomputed reference
// trajectory at the held-out points may be shared across rows; diverged runs
// keep their last finite parameters for the error metrics but skip the trace
// diagnostics.
inline ResultRow run_single(const RunConfig& rc, const Trajectory* reference = nullptr,
                            TrainReport* report_out = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  ResultRow row;
  row.config = rc;
  row.id = config_id(rc);

  const TrainingConfig cfg = make_training_config(rc);
  const TrainReport rep = train(cfg);
  if (report_out) *report_out = rep;
  row.iterations_run = rep.iterations_run;
  row.diverged = rep.diverged;
  row.diverged_at = rep.diverged_at;
  row.residual_loss = rep.final_loss.residual;
  row.ic_loss = rep.final_loss.ic;

  const CollocationSet col = make_collocation(cfg.system.horizon, cfg.collocation_count);
  Trajectory local;
  if (!reference) {
    local = reference_solution(rc, col.eval_points);
    reference = &local;
  }
  const std::vector<double> hat = predict(cfg.network, rep.params, col.eval_points);
  row.rel_error_eval = rel_error(reference->states, hat);
  const std::vector<double> hat0 = forward(cfg.network, rep.params, 0.0);
  row.rel_error_ic = rel_error_ic(cfg.system.u0, hat0);

  if (!rep.diverged) {
    const NormalizedTraces traces = normalized_laplacians(cfg, rep.params, rc.probes, rc.seed);
    row.residual_trace = traces.residual.mean;
    row.residual_trace_stderr = traces.residual.std_error;
    row.ic_trace = traces.ic.mean;
    row.ic_trace_stderr = traces.ic.std_error;
  } else {
    const double bad = std::nan("");
    row.residual_trace = bad;
    row.residual_trace_stderr = bad;
    row.ic_trace = bad;
    row.ic_trace_stderr = bad;
  }
  row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

inline const char* kResultHeader =
    "config_id,benchmark,complexity,depth,width,lr,arch,formulation,seed,iterations,"
    "collocation_points,iterations_run,diverged,diverged_at,rel_error_eval,rel_error_ic,"
    "residual_loss,ic_loss,residual_trace,residual_trace_stderr,ic_trace,ic_trace_stderr";

inline std::string result_row_csv(const ResultRow& r) {
  const TrainingConfig cfg = make_training_config(r.config);
  std::string line = r.id;
  line += ",";
  line += benchmark_name(r.config.benchmark);
  line += "," + std::to_string(r.config.complexity);
  line += "," + std::to_string(r.config.depth);
  line += "," + std::to_string(r.config.width);
  line += "," + format_double(r.config.lr);
  line += ",";
  line += arch_name(r.config.arch);
  line += ",";
  line += formulation_name(r.config.formulation);
  line += "," + std::to_string(r.config.seed);
  line += "," + std::to_string(r.config.iterations);
  line += "," + std::to_string(cfg.collocation_count);
  line += "," + std::to_string(r.iterations_run);
  line += "," + std::string(r.diverged ? "1" : "0");
  line += "," + std::to_string(r.diverged_at);
  line += "," + format_double(r.rel_error_eval);
  line += "," + format_double(r.rel_error_ic);
  line += "," + format_double(r.residual_loss);
  line += "," + format_double(r.ic_loss);
  line += "," + format_double(r.residual_trace);
  line += "," + format_double(r.residual_trace_stderr);
  line += "," + format_double(r.ic_trace);
  line += "," + format_double(r.ic_trace_stderr);
  return line;
}

// Runs the whole grid on a small worker pool.  Row order and content are
// independent of the worker count: the grid order is fixed up front, every
// run is seeded explicitly, and each row is written from its slot.
inline std::vector<ResultRow> run_sweep(const SweepSpec& spec, int workers,
                                        const std::string& out_path = "",
                                        bool progress = false) {
  if (workers < 1) throw parameter_error("sweep: workers must be >= 1");
  const std::vector<RunConfig> runs = expand_runs(spec);

  // shared reference trajectories, one per complexity level
  std::map<long, Trajectory> refs;
  for (const auto& rc : runs) {
    if (refs.count(rc.complexity)) continue;
    const TrainingConfig cfg = make_training_config(rc);
    const CollocationSet col = make_collocation(cfg.system.horizon, cfg.collocation_count);
    refs.emplace(rc.complexity, reference_solution(rc, col.eval_points));
  }

  std::vector<ResultRow> rows(runs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex io_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= runs.size()) return;
      rows[i] = run_single(runs[i], &refs.at(runs[i].complexity));
      const std::size_t n = done.fetch_add(1) + 1;
      if (progress) {
        std::lock_guard<std::mutex> lock(io_mutex);
        std::fprintf(stderr, "[%zu/%zu] %s rel_error=%.3g%s\n", n, runs.size(),
                     rows[i].id.c_str(), rows[i].rel_error_eval,
                     rows[i].diverged ? " (diverged)" : "");
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n_workers =
      std::min(static_cast<std::size_t>(workers), std::max<std::size_t>(runs.size(), 1));
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  if (!out_path.empty()) {
    std::ofstream os(out_path);
    if (!os) throw parse_error("cannot open '" + out_path + "' for writing");
    os << kResultHeader << "\n";
    for (const auto& r : rows) os << result_row_csv(r) << "\n";
    std::ofstream ts(out_path + ".timing.csv");
    if (!ts) throw parse_error("cannot open '" + out_path + ".timing.csv' for writing");
    ts << "config_id,wall_seconds\n";
    for (const auto& r : rows) ts << r.id << "," << format_double(r.wall_seconds) << "\n";
  }
  return rows;
}

}  // namespace pinnode
