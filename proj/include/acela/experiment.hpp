#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "acela/metrics.hpp"
#include "acela/predictor.hpp"
#include "acela/workload.hpp"

namespace acela {

struct ExperimentConfig {
  WorkloadSpec workload;
  std::optional<std::filesystem::path> dataset_path;  // replaces the generated workload

  // Unit scheduling; tau and T default to default_unit_config() on the training history.
  double beta = 0.2;
  std::optional<double> tau;
  std::optional<double> unit_budget;
  std::size_t unit_size = 20;
  DowntimeMode downtime_mode = DowntimeMode::InFlightPlusPending;

  std::vector<Method> methods = {Method::ACELA, Method::GBT_MSE, Method::LR};
  QuantileGrid grid;
  Slo slo;
  std::vector<Hyperparams> hp_grid = default_hyperparam_grid();
  /// Hyperparameters used by the quantile sweep.
  Hyperparams sweep_hyperparams;
  int n_cycles = 1;
  double test_window_days = 7.0;
  double validation_fraction = 0.1;
  bool oracle_predictions = false;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";

  /// Throws Error(InvalidConfig).
  void validate() const;
};

/// Reads a JSON config document; absent keys keep their defaults.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_json(const std::string& text);

struct GenerateResult {
  Dataset dataset;
  std::vector<FirmwareStats> stats;
};

/// Writes dataset.csv, characterization.csv and cdf.csv into out_dir.
GenerateResult run_generate(const ExperimentConfig& cfg, bool write_outputs = true);

struct MethodRun {
  std::string tag;
  std::optional<PredictorSet> predictors;  // empty for the oracle row
  std::vector<double> test_predictions;
  CampaignOutcome campaign;
  MetricsReport report;
};

struct EvaluateResult {
  DatasetSplit split;
  UnitConfig unit_config;
  std::vector<MethodRun> runs;
  ComparisonReport comparison;
};

/// split -> train per method -> predict -> simulate_cycles -> metrics. Writes
/// metrics.csv, comparison.md and traces/<METHOD>.jsonl into out_dir.
EvaluateResult run_evaluate(const ExperimentConfig& cfg, bool write_outputs = true);

struct SweepRow {
  FirmwareType firmware = FirmwareType::CPLD;
  double quantile = 0.0;
  double mape = 0.0;
  double opr = 0.0;
  std::size_t n_eval = 0;
};

/// Fits a pinball model per (firmware, grid quantile) and scores it on the test
/// window. Writes sweep.csv into out_dir.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, bool write_outputs = true);
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

struct Table1Row {
  std::string label;
  std::vector<double> predictions;
  std::size_t scheduled = 0;
  std::size_t completed = 0;
  bool offline = false;
  double downtime = 0.0;
  std::size_t expected_scheduled = 0;
  std::size_t expected_completed = 0;
  bool expected_offline = false;
  double expected_downtime = 0.0;

  bool pass() const;
};

/// Three jobs with true durations 10/20/21 s on one server, tau = T = 50 s,
/// scheduled under groundtruth, underpredicted and overpredicted durations.
std::vector<Table1Row> replay_table1();
std::string format_table1(const std::vector<Table1Row>& rows);

/// Data used by evaluate and sweep: the CSV at dataset_path, else a generated workload.
Dataset load_or_generate(const ExperimentConfig& cfg);

}  // namespace acela
