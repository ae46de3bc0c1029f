// acela_sim: generate workloads, evaluate predictors through the maintenance
// scheduler, sweep quantiles and replay the three-job example.

#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "acela/error.hpp"
#include "acela/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> n_jobs, n_servers, n_days, n_cycles;
  std::optional<double> noise_sigma, beta, tau, unit_budget, slo;
  std::optional<std::size_t> unit_size;
  std::optional<std::string> dataset, methods, quantiles, downtime_mode;
  bool oracle = false;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

acela::ExperimentConfig resolve(const Overrides& o) {
  using namespace acela;
  ExperimentConfig cfg = o.config_path ? load_config(*o.config_path) : ExperimentConfig{};
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.out_dir = *o.out;
  if (o.n_jobs) cfg.workload.n_jobs = *o.n_jobs;
  if (o.n_servers) cfg.workload.n_servers = *o.n_servers;
  if (o.n_days) cfg.workload.n_days = *o.n_days;
  if (o.noise_sigma) cfg.workload.noise_sigma = *o.noise_sigma;
  if (o.n_cycles) cfg.n_cycles = *o.n_cycles;
  if (o.beta) cfg.beta = *o.beta;
  if (o.tau) cfg.tau = *o.tau;
  if (o.unit_budget) cfg.unit_budget = *o.unit_budget;
  if (o.unit_size) cfg.unit_size = *o.unit_size;
  if (o.slo) cfg.slo.min_validation_opr = *o.slo;
  if (o.dataset) cfg.dataset_path = *o.dataset;
  if (o.methods) {
    cfg.methods.clear();
    for (const auto& m : split_list(*o.methods)) cfg.methods.push_back(parse_method(m));
  }
  if (o.quantiles) {
    cfg.grid.quantiles.clear();
    for (const auto& q : split_list(*o.quantiles)) cfg.grid.quantiles.push_back(std::stod(q));
  }
  if (o.downtime_mode) {
    if (*o.downtime_mode == "in_flight")
      cfg.downtime_mode = DowntimeMode::InFlightOnly;
    else if (*o.downtime_mode == "in_flight_plus_pending")
      cfg.downtime_mode = DowntimeMode::InFlightPlusPending;
    else
      throw Error(ErrorKind::InvalidConfig, fmt::format("unknown downtime mode '{}'", *o.downtime_mode));
  }
  if (o.oracle) cfg.oracle_predictions = true;
  return cfg;
}

int exit_code_for(acela::ErrorKind kind) {
  switch (kind) {
    case acela::ErrorKind::InvalidConfig:
    case acela::ErrorKind::InvalidSpec:
    case acela::ErrorKind::Io:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

int cmd_generate(const acela::ExperimentConfig& cfg) {
  cfg.workload.validate();
  const auto res = acela::run_generate(cfg);
  fmt::print("{:<8} {:>6} {:>7} {:>10} {:>10} {:>10} {:>8} {:>8}\n", "firmware", "jobs", "share", "median_s",
             "p99_s", "max_s", "med/p99", "max_norm");
  for (const auto& s : res.stats)
    fmt::print("{:<8} {:>6} {:>7.3f} {:>10.1f} {:>10.1f} {:>10.1f} {:>8.3f} {:>8.3f}\n", acela::to_string(s.firmware),
               s.count, static_cast<double>(s.count) / static_cast<double>(res.dataset.size()), s.median, s.p99,
               s.max, s.median_tail_ratio, s.max_norm);
  fmt::print("wrote {}\n", (cfg.out_dir / "dataset.csv").string());
  return 0;
}

int cmd_evaluate(const acela::ExperimentConfig& cfg) {
  const auto res = acela::run_evaluate(cfg);
  fmt::print("train {} / validation {} / test {} jobs; tau {:.0f}s, T {:.0f}s, beta {}\n", res.split.train.size(),
             res.split.validation.size(), res.split.test.size(), res.unit_config.tau, res.unit_config.unit_budget,
             res.unit_config.beta);
  for (const auto& run : res.runs) {
    if (!run.predictors) continue;
    for (const auto& w : run.predictors->warnings()) fmt::print(stderr, "warning: {}: {}\n", run.tag, w);
  }
  fmt::print("{}", acela::to_markdown(res.comparison));
  fmt::print("wrote {}\n", (cfg.out_dir / "metrics.csv").string());
  return 0;
}

int cmd_sweep(const acela::ExperimentConfig& cfg) {
  const auto rows = acela::run_sweep(cfg);
  fmt::print("{:<8} {:>8} {:>9} {:>7} {:>6}\n", "firmware", "quantile", "MAPE(%)", "OPR", "n");
  for (const auto& r : rows)
    fmt::print("{:<8} {:>8.2f} {:>9.2f} {:>7.3f} {:>6}\n", acela::to_string(r.firmware), r.quantile, r.mape, r.opr,
               r.n_eval);
  fmt::print("wrote {}\n", (cfg.out_dir / "sweep.csv").string());
  return 0;
}

int cmd_replay_table1() {
  const auto rows = acela::replay_table1();
  fmt::print("{}", acela::format_table1(rows));
  const bool ok = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass(); });
  fmt::print("{}\n", ok ? "replay-table1: PASS" : "replay-table1: FAIL");
  return ok ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantile-regression duration prediction for maintenance job scheduling"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--config", o.config_path, "JSON experiment config");
  app.add_option("--seed", o.seed, "Seed for workload generation and splitting");
  app.add_option("--out", o.out, "Output directory");

  auto add_workload = [&](CLI::App* sub) {
    sub->add_option("--n-jobs", o.n_jobs, "Number of jobs to generate");
    sub->add_option("--n-servers", o.n_servers, "Number of servers");
    sub->add_option("--n-days", o.n_days, "Days covered by the workload");
    sub->add_option("--noise-sigma", o.noise_sigma, "Override the per-firmware noise sigma (0 = noise-free)");
  };
  auto add_experiment = [&](CLI::App* sub) {
    add_workload(sub);
    sub->add_option("--dataset", o.dataset, "Dataset CSV instead of a generated workload");
    sub->add_option("--methods", o.methods, "Comma-separated subset of ACELA,GBT_MSE,LR");
    sub->add_option("--quantiles", o.quantiles, "Comma-separated quantile grid");
    sub->add_option("--slo", o.slo, "Minimum validation overprediction rate");
    sub->add_option("--n-cycles", o.n_cycles, "Maintenance cycles to simulate");
    sub->add_option("--beta", o.beta, "Max fraction of a unit's servers under maintenance");
    sub->add_option("--tau", o.tau, "Per-server time budget (s)");
    sub->add_option("--unit-budget", o.unit_budget, "Per-unit time budget T (s)");
    sub->add_option("--unit-size", o.unit_size, "Servers per maintenance unit");
    sub->add_option("--downtime-mode", o.downtime_mode, "in_flight | in_flight_plus_pending");
  };

  auto* gen = app.add_subcommand("generate", "Generate a synthetic workload and its characterization");
  add_workload(gen);
  auto* eval = app.add_subcommand("evaluate", "Train methods, simulate the scheduler and report metrics");
  add_experiment(eval);
  eval->add_flag("--oracle-predictions", o.oracle, "Add a row scheduled with the true durations");
  auto* sweep = app.add_subcommand("sweep", "Per-firmware MAPE/OPR over the quantile grid");
  add_experiment(sweep);
  auto* table1 = app.add_subcommand("replay-table1", "Replay the three-job under/overprediction example");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (table1->parsed()) return cmd_replay_table1();
    const auto cfg = resolve(o);
    if (gen->parsed()) return cmd_generate(cfg);
    if (eval->parsed()) return cmd_evaluate(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg);
  } catch (const acela::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
