#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "acela/domain.hpp"
#include "acela/features.hpp"
#include "acela/gbt.hpp"

namespace acela {

enum class Method { ACELA, GBT_MSE, LR };

std::string_view to_string(Method m);
/// Throws Error(InvalidConfig) for an unknown tag.
Method parse_method(std::string_view tag);

struct Slo {
  double min_validation_opr = 0.95;
};

struct QuantileGrid {
  std::vector<double> quantiles = {0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95, 0.99};

  /// Throws Error(InvalidConfig) unless strictly increasing and inside (0,1).
  void validate() const;
};

/// learning_rate {0.05, 0.1} x num_rounds {100, 300} x max_depth {4, 6}, min_samples_leaf 20.
std::vector<Hyperparams> default_hyperparam_grid();

/// Validation outcome of one candidate quantile.
struct QuantileTrial {
  double quantile = 0.0;
  double opr = 0.0;
  double mape = 0.0;
};

/// Index of the trial to keep: lowest MAPE among trials meeting the SLO (ties to
/// the lower quantile); with no feasible trial, highest OPR (ties to the higher
/// quantile).
std::size_t choose_quantile(const std::vector<QuantileTrial>& trials, const Slo& slo);

struct TuneResult {
  double quantile = 0.0;
  BoostedModel model;
  std::vector<QuantileTrial> trace;
};

/// Grid search over quantiles for one firmware. Models see only that firmware's rows.
TuneResult tune_quantile(const Dataset& train, const Dataset& validation, FirmwareType firmware,
                         const QuantileGrid& grid, const Slo& slo, const Hyperparams& hp,
                         const FeatureSchema& schema);

using DurationModel = std::variant<BoostedModel, LinearModel>;

struct FirmwareEntry {
  DurationModel model;
  std::optional<double> quantile;  // ACELA only
  Hyperparams hyperparams;
  double validation_opr = 0.0;
  double validation_mape = 0.0;
  std::vector<QuantileTrial> trace;  // ACELA tuning trace for the chosen hyperparameters
};

struct TrainingOptions {
  QuantileGrid grid;
  Slo slo;
  std::vector<Hyperparams> hp_grid = default_hyperparam_grid();
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
};

/// One trained model per firmware type, all sharing one feature schema.
/// Immutable; retrain() produces a fresh set.
class PredictorSet {
 public:
  Method method() const { return method_; }
  double trained_through() const { return trained_through_; }
  const FeatureSchema& schema() const { return *schema_; }
  const std::map<FirmwareType, FirmwareEntry>& entries() const { return entries_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  /// Training + validation rows the set was built from.
  const Dataset& history() const { return *history_; }
  const TrainingOptions& options() const { return options_; }

  bool has(FirmwareType fw) const { return entries_.count(fw) != 0; }
  /// Throws Error(MissingFirmwareData) naming the firmware.
  const FirmwareEntry& entry(FirmwareType fw) const;

  /// Prediction for one encoded row, floored at 0.
  double predict_row(FirmwareType fw, std::span<const double> x) const;

  /// Hash over every per-firmware model document; equal sets give equal values.
  std::uint64_t model_fingerprint(FirmwareType fw) const;

  friend PredictorSet train_predictor_set(const DatasetSplit&, Method, const TrainingOptions&);
  friend PredictorSet assemble_predictor_set(Method, std::map<FirmwareType, FirmwareEntry>,
                                             std::shared_ptr<const FeatureSchema>,
                                             std::shared_ptr<const Dataset>, TrainingOptions);

 private:
  Method method_ = Method::ACELA;
  double trained_through_ = 0.0;
  std::shared_ptr<const FeatureSchema> schema_;
  std::shared_ptr<const Dataset> history_;
  std::map<FirmwareType, FirmwareEntry> entries_;
  std::vector<std::string> warnings_;
  TrainingOptions options_;
};

/// Trains one model per firmware present in split.train. The test part of the
/// split is ignored. Tuning work runs in parallel (ACELA_SIM_THREADS workers).
/// A firmware with fewer rows than min_samples_leaf trains with smaller leaves.
PredictorSet train_predictor_set(const DatasetSplit& split, Method method, const TrainingOptions& options);

PredictorSet assemble_predictor_set(Method method, std::map<FirmwareType, FirmwareEntry> entries,
                                    std::shared_ptr<const FeatureSchema> schema,
                                    std::shared_ptr<const Dataset> history, TrainingOptions options);

/// job_id -> predicted seconds. `schema` must be the set's own schema.
std::unordered_map<std::string, double> predict_durations(const PredictorSet& set,
                                                          std::span<const JobRecord> jobs,
                                                          const FeatureSchema& schema);
std::vector<double> predict_vector(const PredictorSet& set, std::span<const JobRecord> jobs);

/// Retrains on history + new_data once new_data reaches `period_days` past
/// trained_through; otherwise returns a copy of `set`. Throws Error(StaleData)
/// if any new record is not newer than trained_through.
PredictorSet retrain(const PredictorSet& set, const Dataset& new_data, double period_days);

/// Directory layout: manifest.json plus one <FIRMWARE>.json per model.
void save_predictor_set(const PredictorSet& set, const std::filesystem::path& dir);

struct PredictorManifest {
  Method method = Method::ACELA;
  double trained_through = 0.0;
  std::uint64_t schema_fingerprint = 0;
  std::map<FirmwareType, std::optional<double>> quantiles;
};

PredictorManifest load_manifest(const std::filesystem::path& dir);
DurationModel load_firmware_model(const std::filesystem::path& dir, FirmwareType fw);

}  // namespace acela
