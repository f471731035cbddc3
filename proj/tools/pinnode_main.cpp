#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pinnode/checkpoint.hpp"
#include "pinnode/config.hpp"
#include "pinnode/sweep.hpp"

namespace {

using nlohmann::json;
using namespace pinnode;

std::string out_dir() {
  const char* env = std::getenv("PINNODE_OUT_DIR");
  std::string dir = env && *env ? env : ".";
  std::filesystem::create_directories(dir);
  return dir;
}

json run_config_json(const RunConfig& rc) {
  const TrainingConfig cfg = make_training_config(rc);
  return {{"benchmark", benchmark_name(rc.benchmark)},
          {"complexity", rc.complexity},
          {"depth", rc.depth},
          {"width", rc.width},
          {"lr", rc.lr},
          {"arch", arch_name(rc.arch)},
          {"formulation", formulation_name(rc.formulation)},
          {"seed", rc.seed},
          {"iterations", rc.iterations},
          {"collocation", cfg.collocation_count},
          {"residual_reduction", rc.residual_reduction == Reduction::Mean ? "mean" : "sum"},
          {"heat_scaling", rc.heat_scaling == HeatScaling::Ic ? "ic" : "residual"},
          {"horizon", cfg.system.horizon},
          {"dim", cfg.system.dim},
          {"rtol", rc.rtol},
          {"atol", rc.atol},
          {"probes", rc.probes}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig rc;
  const std::string bench = j.at("benchmark").get<std::string>();
  if (bench == "shm")
    rc.benchmark = OdeKind::Shm;
  else if (bench == "heat")
    rc.benchmark = OdeKind::Heat;
  else
    throw config_error("unknown benchmark '" + bench + "' in metadata");
  rc.complexity = j.at("complexity").get<long>();
  rc.depth = j.at("depth").get<int>();
  rc.width = j.at("width").get<int>();
  rc.lr = j.at("lr").get<double>();
  rc.arch = parse_arch(j.at("arch").get<std::string>());
  rc.formulation = parse_formulation(j.at("formulation").get<std::string>());
  rc.seed = j.at("seed").get<std::uint64_t>();
  rc.iterations = j.at("iterations").get<long>();
  rc.collocation_override = j.at("collocation").get<int>();
  rc.residual_reduction =
      j.at("residual_reduction").get<std::string>() == "sum" ? Reduction::Sum : Reduction::Mean;
  rc.heat_scaling =
      j.at("heat_scaling").get<std::string>() == "residual" ? HeatScaling::Residual
                                                            : HeatScaling::Ic;
  if (j.contains("rtol")) rc.rtol = j.at("rtol").get<double>();
  if (j.contains("atol")) rc.atol = j.at("atol").get<double>();
  if (j.contains("probes")) rc.probes = j.at("probes").get<int>();
  return rc;
}

int cmd_sweep(const std::string& config_path, int workers, std::string out_path) {
  const SweepSpec spec = parse_config_file(config_path);
  if (out_path.empty()) out_path = out_dir() + "/sweep.csv";
  const auto rows = run_sweep(spec, workers, out_path, true);
  long diverged = 0;
  for (const auto& r : rows) diverged += r.diverged ? 1 : 0;
  std::cout << "wrote " << rows.size() << " rows to " << out_path << " (" << diverged
            << " diverged)\n";
  return 0;
}

int cmd_train(const RunConfig& rc, std::string out_path, const std::string& ckpt_path) {
  TrainReport rep;
  const ResultRow row = run_single(rc, nullptr, &rep);

  json report;
  report["config"] = run_config_json(rc);
  report["iterations_run"] = row.iterations_run;
  report["diverged"] = row.diverged;
  report["diverged_at"] = row.diverged_at;
  report["final_loss"] = {{"residual", rep.final_loss.residual},
                          {"ic", rep.final_loss.ic},
                          {"total", rep.final_loss.total}};
  report["metrics"] = {{"rel_error_eval", row.rel_error_eval},
                       {"rel_error_ic", row.rel_error_ic}};
  if (!row.diverged) {
    report["traces"] = {{"residual", {{"mean", row.residual_trace},
                                      {"std_error", row.residual_trace_stderr},
                                      {"n_probes", rc.probes}}},
                        {"ic", {{"mean", row.ic_trace},
                                {"std_error", row.ic_trace_stderr},
                                {"n_probes", rc.probes}}}};
  }
  json curve = json::array();
  for (const auto& pt : rep.curve) {
    json p = {{"step", pt.step}, {"residual", pt.residual}, {"ic", pt.ic}, {"total", pt.total}};
    if (rc.formulation == Formulation::Adaptive) {
      p["lambda_min"] = pt.lambda_min;
      p["lambda_mean"] = pt.lambda_mean;
      p["lambda_max"] = pt.lambda_max;
    }
    curve.push_back(p);
  }
  report["curve"] = curve;
  report["wall_seconds"] = row.wall_seconds;

  if (out_path.empty()) out_path = out_dir() + "/train-" + row.id + ".json";
  std::ofstream os(out_path);
  if (!os) throw parse_error("cannot open '" + out_path + "' for writing");
  os << report.dump(2) << "\n";

  if (!ckpt_path.empty()) save_checkpoint(ckpt_path, rep.params, run_config_json(rc));

  std::cout << row.id << ": rel_error_eval=" << format_double(row.rel_error_eval)
            << " rel_error_ic=" << format_double(row.rel_error_ic)
            << (row.diverged ? " DIVERGED" : "") << "\nreport: " << out_path << "\n";
  if (!ckpt_path.empty()) std::cout << "checkpoint: " << ckpt_path << "\n";
  return 0;
}

int cmd_reference(const RunConfig& rc, const std::string& solver, int points,
                  std::string out_path) {
  const TrainingConfig cfg = make_training_config(rc);
  const int count = points > 0 ? points : cfg.collocation_count;
  const CollocationSet col = make_collocation(cfg.system.horizon, count);
  std::vector<double> ts;
  ts.push_back(0.0);
  ts.insert(ts.end(), col.eval_points.begin(), col.eval_points.end());
  ts.insert(ts.end(), col.train_points.begin(), col.train_points.end());
  std::sort(ts.begin(), ts.end());

  Trajectory traj;
  if (solver == "rk45" || (solver == "auto" && rc.benchmark == OdeKind::Heat &&
                           rc.complexity < 128)) {
    traj = rk45_integrate(cfg.system, ts, rc.rtol, rc.atol);
  } else if (rc.benchmark == OdeKind::Shm) {
    traj.dim = 2;
    for (double t : ts) {
      const auto u = shm_closed_form(1.0, t);
      traj.times.push_back(t);
      traj.states.insert(traj.states.end(), u.begin(), u.end());
    }
  } else {
    HeatParams hp{static_cast<int>(rc.complexity), cfg.system.horizon};
    traj.dim = cfg.system.dim;
    for (double t : ts) {
      const auto u = heat_spectral_solution(hp, t);
      traj.times.push_back(t);
      traj.states.insert(traj.states.end(), u.begin(), u.end());
    }
  }

  if (out_path.empty())
    out_path = out_dir() + "/reference-" + benchmark_name(rc.benchmark) + "-c" +
               std::to_string(rc.complexity) + ".csv";
  write_trajectory_csv(traj, out_path);
  std::cout << "wrote " << traj.times.size() << " samples to " << out_path << "\n";
  return 0;
}

int cmd_trace(const std::string& ckpt_path, int probes, long seed_arg) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  RunConfig rc = run_config_from_json(ckpt.metadata);
  if (probes > 0) rc.probes = probes;
  const std::uint64_t seed = seed_arg >= 0 ? static_cast<std::uint64_t>(seed_arg) : rc.seed;
  const TrainingConfig cfg = make_training_config(rc);
  if (param_count(cfg.network) != ckpt.params.size())
    throw config_error("checkpoint parameter count does not match its metadata");
  const NormalizedTraces tr = normalized_laplacians(cfg, ckpt.params, rc.probes, seed);
  std::cout << "component,trace,std_error,n_probes\n";
  std::cout << "residual," << format_double(tr.residual.mean) << ","
            << format_double(tr.residual.std_error) << "," << tr.residual.n_probes << "\n";
  std::cout << "ic," << format_double(tr.ic.mean) << "," << format_double(tr.ic.std_error) << ","
            << tr.ic.n_probes << "\n";
  return 0;
}

int cmd_summarize(const std::string& in_path, const std::string& out_path) {
  const auto rows = summarize_file(in_path);
  if (out_path.empty()) {
    write_summary(rows, std::cout);
  } else {
    std::ofstream os(out_path);
    if (!os) throw parse_error("cannot open '" + out_path + "' for writing");
    write_summary(rows, os);
    std::cout << "wrote " << rows.size() << " groups to " << out_path << "\n";
  }
  return 0;
}

void add_run_options(CLI::App* app, RunConfig& rc, std::string& benchmark, bool require_model) {
  app->add_option("--benchmark", benchmark, "Benchmark: shm or heat")->required();
  app->add_option("--complexity", rc.complexity,
                  "shm: horizon multiplier m (T = m*pi); heat: grid size N")
      ->required();
  if (require_model) {
    app->add_option("--depth", rc.depth, "Hidden layers: 2, 4 or 8");
    app->add_option("--width", rc.width, "Hidden width: 64 or 128");
    app->add_option("--lr", rc.lr, "Learning rate: 1e-3 or 1e-4");
    app->add_option("--arch", [&rc](const std::vector<std::string>& v) {
      rc.arch = parse_arch(v.at(0));
      return true;
    }, "Architecture: mlp or resnet");
    app->add_option("--formulation", [&rc](const std::vector<std::string>& v) {
      rc.formulation = parse_formulation(v.at(0));
      return true;
    }, "Loss formulation: uniform or adaptive");
    app->add_option("--iterations", rc.iterations, "Adam iterations");
    app->add_option("--seed", rc.seed, "Initialization seed");
    app->add_option("--collocation", rc.collocation_override,
                    "Collocation point count (0 = benchmark default)");
    app->add_option("--residual-reduction", [&rc](const std::vector<std::string>& v) {
      if (v.at(0) == "mean") rc.residual_reduction = Reduction::Mean;
      else if (v.at(0) == "sum") rc.residual_reduction = Reduction::Sum;
      else throw CLI::ValidationError("--residual-reduction", "expected mean or sum");
      return true;
    }, "Residual reduction: mean or sum");
    app->add_option("--heat-scaling", [&rc](const std::vector<std::string>& v) {
      if (v.at(0) == "ic") rc.heat_scaling = HeatScaling::Ic;
      else if (v.at(0) == "residual") rc.heat_scaling = HeatScaling::Residual;
      else throw CLI::ValidationError("--heat-scaling", "expected ic or residual");
      return true;
    }, "Stiffness scaling: ic or residual");
    app->add_option("--probes", rc.probes, "Hutchinson probe count");
  }
  app->add_option("--rtol", rc.rtol, "Reference solver relative tolerance");
  app->add_option("--atol", rc.atol, "Reference solver absolute tolerance");
}

void finish_run_config(RunConfig& rc, const std::string& benchmark) {
  if (benchmark == "shm")
    rc.benchmark = OdeKind::Shm;
  else if (benchmark == "heat")
    rc.benchmark = OdeKind::Heat;
  else
    throw config_error("unknown benchmark '" + benchmark + "' (expected shm or heat)");
  if (rc.benchmark == OdeKind::Shm && rc.complexity < 1)
    throw parameter_error("shm: complexity (horizon multiplier) must be >= 1");
  if (rc.benchmark == OdeKind::Heat && rc.complexity < 3)
    throw parameter_error("heat: complexity (grid size) must be >= 3");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collocation training, reference solvers and curvature "
               "diagnostics for linear ODE benchmarks"};
  app.require_subcommand(1);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a hyperparameter grid from a config file");
  std::string sweep_config, sweep_out;
  int sweep_workers = 1;
  sweep_cmd->add_option("--config", sweep_config, "Sweep config file")->required();
  sweep_cmd->add_option("--workers", sweep_workers, "Worker thread count");
  sweep_cmd->add_option("--out", sweep_out, "Output CSV path");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train one model and write a JSON report");
  RunConfig train_rc;
  std::string train_bench, train_out, train_ckpt;
  add_run_options(train_cmd, train_rc, train_bench, true);
  train_cmd->add_option("--out", train_out, "Report JSON path");
  train_cmd->add_option("--checkpoint", train_ckpt, "Also save final parameters here");

  // reference
  auto* ref_cmd = app.add_subcommand("reference", "Write a reference trajectory CSV");
  RunConfig ref_rc;
  std::string ref_bench, ref_solver = "auto", ref_out;
  int ref_points = 0;
  add_run_options(ref_cmd, ref_rc, ref_bench, false);
  ref_cmd->add_option("--solver", ref_solver, "Solver: auto, rk45, closed or spectral");
  ref_cmd->add_option("--points", ref_points, "Collocation count defining the sample times");
  ref_cmd->add_option("--out", ref_out, "Output CSV path");

  // trace
  auto* trace_cmd = app.add_subcommand("trace", "Hessian-trace diagnostics for a checkpoint");
  std::string trace_ckpt;
  int trace_probes = 0;
  long trace_seed = -1;
  trace_cmd->add_option("--checkpoint", trace_ckpt, "Checkpoint file")->required();
  trace_cmd->add_option("--probes", trace_probes, "Probe count (default: from metadata)");
  trace_cmd->add_option("--seed", trace_seed, "Probe seed (default: from metadata)");

  // summarize
  auto* sum_cmd = app.add_subcommand("summarize", "Aggregate a sweep CSV");
  std::string sum_in, sum_out;
  sum_cmd->add_option("--in", sum_in, "Sweep CSV")->required();
  sum_cmd->add_option("--out", sum_out, "Output CSV (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_config, sweep_workers, sweep_out);
    if (train_cmd->parsed()) {
      finish_run_config(train_rc, train_bench);
      return cmd_train(train_rc, train_out, train_ckpt);
    }
    if (ref_cmd->parsed()) {
      finish_run_config(ref_rc, ref_bench);
      return cmd_reference(ref_rc, ref_solver, ref_points, ref_out);
    }
    if (trace_cmd->parsed()) return cmd_trace(trace_ckpt, trace_probes, trace_seed);
    if (sum_cmd->parsed()) return cmd_summarize(sum_in, sum_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
