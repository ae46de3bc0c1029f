#include "acela/predictor.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "acela/csv.hpp"
#include "acela/error.hpp"
#include "acela/metrics.hpp"
#include "acela/parallel.hpp"

namespace acela {
namespace {

using json = nlohmann::ordered_json;

struct Encoded {
  FeatureMatrix x;
  std::vector<double> y;
};

Encoded encode_dataset(const Dataset& data, const FeatureSchema& schema) {
  Encoded e{encode_all(data.records(), schema), {}};
  e.y.reserve(data.size());
  for (const auto& r : data.records()) e.y.push_back(r.true_duration);
  return e;
}

template <typename Model>
std::vector<double> predict_rows(const Model& model, const FeatureMatrix& x) {
  std::vector<double> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict(model, x.row(i));
  return out;
}

// Per-firmware train/validation rows; validation falls back to the training
// rows when the firmware has no validation records.
struct FirmwareData {
  FirmwareType firmware;
  Encoded train;
  Encoded validation;
};

FirmwareData firmware_data(const Dataset& train, const Dataset& validation, FirmwareType fw,
                           const FeatureSchema& schema) {
  const Dataset tr = train.filter(fw);
  if (tr.empty())
    throw Error(ErrorKind::MissingFirmwareData, fmt::format("missing firmware data: {}", to_string(fw)));
  Dataset va = validation.filter(fw);
  if (va.empty()) va = tr;
  return {fw, encode_dataset(tr, schema), encode_dataset(va, schema)};
}

TuneResult tune_encoded(const FirmwareData& data, const QuantileGrid& grid, const Slo& slo, const Hyperparams& hp) {
  grid.validate();
  std::vector<QuantileTrial> trials;
  std::vector<BoostedModel> models;
  for (double q : grid.quantiles) {
    auto model = fit(data.train.x, data.train.y, Loss::pinball(q), hp);
    const auto preds = predict_rows(model, data.validation.x);
    trials.push_back({q, opr(data.validation.y, preds), mape(data.validation.y, preds)});
    models.push_back(std::move(model));
  }
  const auto pick = choose_quantile(trials, slo);
  return {trials[pick].quantile, std::move(models[pick]), std::move(trials)};
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string model_json(const DurationModel& model) {
  return std::visit([](const auto& m) { return to_json(m); }, model);
}

// Hyperparameter candidates ordered so that earlier entries win MAPE ties:
// fewer rounds, then shallower trees, then the grid's own order.
std::vector<Hyperparams> tie_ordered(std::vector<Hyperparams> grid) {
  std::stable_sort(grid.begin(), grid.end(), [](const Hyperparams& a, const Hyperparams& b) {
    if (a.num_rounds != b.num_rounds) return a.num_rounds < b.num_rounds;
    return a.max_depth < b.max_depth;
  });
  return grid;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::ACELA: return "ACELA";
    case Method::GBT_MSE: return "GBT_MSE";
    case Method::LR: return "LR";
  }
  return "?";
}

Method parse_method(std::string_view tag) {
  for (auto m : {Method::ACELA, Method::GBT_MSE, Method::LR})
    if (to_string(m) == tag) return m;
  throw Error(ErrorKind::InvalidConfig, fmt::format("unknown method '{}'", tag));
}

void QuantileGrid::validate() const {
  if (quantiles.empty()) throw Error(ErrorKind::InvalidConfig, "quantile grid is empty");
  for (std::size_t i = 0; i < quantiles.size(); ++i) {
    if (!(quantiles[i] > 0.0 && quantiles[i] < 1.0))
      throw Error(ErrorKind::InvalidQuantile, fmt::format("invalid quantile: {}", quantiles[i]));
    if (i > 0 && !(quantiles[i] > quantiles[i - 1]))
      throw Error(ErrorKind::InvalidConfig, "quantile grid must be strictly increasing");
  }
}

std::vector<Hyperparams> default_hyperparam_grid() {
  std::vector<Hyperparams> grid;
  for (double lr : {0.05, 0.1})
    for (int rounds : {100, 300})
      for (int depth : {4, 6}) grid.push_back({rounds, lr, depth, 20, 0});
  return grid;
}

std::size_t choose_quantile(const std::vector<QuantileTrial>& trials, const Slo& slo) {
  if (trials.empty()) throw Error(ErrorKind::EmptyInput, "empty input: no quantile trials");
  std::optional<std::size_t> feasible;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].opr < slo.min_validation_opr) continue;
    if (!feasible || trials[i].mape < trials[*feasible].mape) feasible = i;
  }
  if (feasible) return *feasible;

  std::size_t best = 0;
  for (std::size_t i = 1; i < trials.size(); ++i) {
    const auto& t = trials[i];
    const auto& b = trials[best];
    if (t.opr > b.opr || (t.opr == b.opr && t.quantile > b.quantile)) best = i;
  }
  return best;
}

TuneResult tune_quantile(const Dataset& train, const Dataset& validation, FirmwareType firmware,
                         const QuantileGrid& grid, const Slo& slo, const Hyperparams& hp,
                         const FeatureSchema& schema) {
  return tune_encoded(firmware_data(train, validation, firmware, schema), grid, slo, hp);
}

const FirmwareEntry& PredictorSet::entry(FirmwareType fw) const {
  auto it = entries_.find(fw);
  if (it == entries_.end())
    throw Error(ErrorKind::MissingFirmwareData, fmt::format("missing firmware data: {}", to_string(fw)));
  return it->second;
}

double PredictorSet::predict_row(FirmwareType fw, std::span<const double> x) const {
  return std::visit([&](const auto& m) { return predict(m, x); }, entry(fw).model);
}

std::uint64_t PredictorSet::model_fingerprint(FirmwareType fw) const {
  const auto& e = entry(fw);
  return fnv1a(model_json(e.model) + (e.quantile ? fmt::format("|q={}", *e.quantile) : std::string()));
}

PredictorSet assemble_predictor_set(Method method, std::map<FirmwareType, FirmwareEntry> entries,
                                    std::shared_ptr<const FeatureSchema> schema,
                                    std::shared_ptr<const Dataset> history, TrainingOptions options) {
  PredictorSet set;
  set.method_ = method;
  set.entries_ = std::move(entries);
  set.schema_ = std::move(schema);
  set.history_ = std::move(history);
  set.trained_through_ = set.history_->empty() ? 0.0 : set.history_->max_visit_time();
  set.options_ = std::move(options);
  return set;
}

PredictorSet train_predictor_set(const DatasetSplit& split, Method method, const TrainingOptions& options) {
  if (split.train.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  options.grid.validate();
  if (options.hp_grid.empty()) throw Error(ErrorKind::InvalidConfig, "hyperparameter grid is empty");
  for (const auto& hp : options.hp_grid) hp.validate();

  auto schema = std::make_shared<const FeatureSchema>(build_schema(split.train));
  auto history = std::make_shared<const Dataset>(Dataset::concat(split.train, split.validation));

  std::vector<std::string> warnings;
  std::vector<FirmwareData> data;
  for (auto fw : kAllFirmware) {
    if (split.train.filter(fw).empty()) {
      warnings.push_back(fmt::format("no training records for {}; firmware skipped", to_string(fw)));
      continue;
    }
    data.push_back(firmware_data(split.train, split.validation, fw, *schema));
    const auto n = data.back().train.y.size();
    for (const auto& hp : options.hp_grid)
      if (method != Method::LR && n < static_cast<std::size_t>(hp.min_samples_leaf)) {
        warnings.push_back(fmt::format("{} has {} training rows; min_samples_leaf reduced to fit", to_string(fw), n));
        break;
      }
  }

  const auto hps = tie_ordered(options.hp_grid);
  const std::size_t n_hp = method == Method::LR ? 1 : hps.size();

  // One task per (firmware, hyperparameter setting).
  std::vector<FirmwareEntry> results(data.size() * n_hp);
  parallel_for(results.size(), [&](std::size_t task) {
    const auto& fd = data[task / n_hp];
    auto hp = hps[task % n_hp];
    // Rare firmware still gets a model: leaves shrink to the available rows.
    hp.min_samples_leaf = std::min<int>(hp.min_samples_leaf, static_cast<int>(fd.train.y.size()));
    FirmwareEntry e;
    e.hyperparams = hp;
    switch (method) {
      case Method::ACELA: {
        auto tuned = tune_encoded(fd, options.grid, options.slo, hp);
        const auto it = std::find_if(tuned.trace.begin(), tuned.trace.end(),
                                     [&](const QuantileTrial& t) { return t.quantile == tuned.quantile; });
        e.validation_opr = it->opr;
        e.validation_mape = it->mape;
        e.quantile = tuned.quantile;
        e.trace = std::move(tuned.trace);
        e.model = std::move(tuned.model);
        break;
      }
      case Method::GBT_MSE: {
        auto model = fit(fd.train.x, fd.train.y, Loss::squared_error(), hp);
        const auto preds = predict_rows(model, fd.validation.x);
        e.validation_opr = opr(fd.validation.y, preds);
        e.validation_mape = mape(fd.validation.y, preds);
        e.model = std::move(model);
        break;
      }
      case Method::LR: {
        auto model = fit_linear(fd.train.x, fd.train.y);
        const auto preds = predict_rows(model, fd.validation.x);
        e.validation_opr = opr(fd.validation.y, preds);
        e.validation_mape = mape(fd.validation.y, preds);
        e.model = std::move(model);
        break;
      }
    }
    results[task] = std::move(e);
  });

  std::map<FirmwareType, FirmwareEntry> entries;
  for (std::size_t f = 0; f < data.size(); ++f) {
    // ACELA applies the SLO rule across hyperparameter settings as well;
    // baselines keep the lowest validation MAPE.
    std::vector<QuantileTrial> candidates;
    for (std::size_t h = 0; h < n_hp; ++h) {
      const auto& e = results[f * n_hp + h];
      candidates.push_back({e.quantile.value_or(0.0), e.validation_opr, e.validation_mape});
    }
    std::size_t pick = 0;
    if (method == Method::ACELA) {
      const Slo& slo = options.slo;
      const bool any_feasible = std::any_of(candidates.begin(), candidates.end(), [&](const QuantileTrial& t) {
        return t.opr >= slo.min_validation_opr;
      });
      for (std::size_t h = 1; h < n_hp; ++h) {
        const auto& c = candidates[h];
        const auto& b = candidates[pick];
        if (any_feasible) {
          const bool c_ok = c.opr >= slo.min_validation_opr;
          const bool b_ok = b.opr >= slo.min_validation_opr;
          if (c_ok && (!b_ok || c.mape < b.mape)) pick = h;
        } else if (c.opr > b.opr) {
          pick = h;
        }
      }
    } else {
      for (std::size_t h = 1; h < n_hp; ++h)
        if (candidates[h].mape < candidates[pick].mape) pick = h;
    }
    entries.emplace(data[f].firmware, std::move(results[f * n_hp + pick]));
  }

  auto set = assemble_predictor_set(method, std::move(entries), std::move(schema), std::move(history), options);
  set.warnings_ = std::move(warnings);
  return set;
}

std::vector<double> predict_vector(const PredictorSet& set, std::span<const JobRecord> jobs) {
  std::vector<double> out;
  out.reserve(jobs.size());
  std::vector<double> row;
  for (const auto& job : jobs) {
    row.clear();
    set.schema().encode_into(job, row);
    out.push_back(set.predict_row(job.firmware, row));
  }
  return out;
}

std::unordered_map<std::string, double> predict_durations(const PredictorSet& set,
                                                          std::span<const JobRecord> jobs,
                                                          const FeatureSchema& schema) {
  if (schema.fingerprint() != set.schema().fingerprint())
    throw Error(ErrorKind::ShapeError, "shape error: feature schema does not match the predictor set");
  const auto preds = predict_vector(set, jobs);
  std::unordered_map<std::string, double> out;
  for (std::size_t i = 0; i < jobs.size(); ++i) out[jobs[i].job_id] = preds[i];
  return out;
}

PredictorSet retrain(const PredictorSet& set, const Dataset& new_data, double period_days) {
  if (!(period_days > 0.0)) throw Error(ErrorKind::InvalidConfig, "period_days must be positive");
  for (const auto& r : new_data.records())
    if (!(r.visit_time > set.trained_through()))
      throw Error(ErrorKind::StaleData,
                  fmt::format("stale data: job '{}' at day {} is not after {}", r.job_id, r.visit_time,
                              set.trained_through()));
  if (new_data.empty() || new_data.max_visit_time() - set.trained_through() < period_days) return set;

  const Dataset all = Dataset::concat(set.history(), new_data);
  auto [train, validation] = split_train_validation(all, set.options().validation_fraction, set.options().seed);
  return train_predictor_set({std::move(train), std::move(validation), Dataset{}}, set.method(), set.options());
}

void save_predictor_set(const PredictorSet& set, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, fmt::format("cannot create '{}': {}", dir.string(), ec.message()));

  json manifest;
  manifest["method"] = to_string(set.method());
  manifest["trained_through"] = set.trained_through();
  manifest["schema_fingerprint"] = fmt::format("{:016x}", set.schema().fingerprint());
  json models = json::array();
  for (const auto& [fw, e] : set.entries()) {
    const std::string file = fmt::format("{}.json", to_string(fw));
    models.push_back({{"firmware", to_string(fw)},
                      {"file", file},
                      {"quantile", e.quantile ? json(*e.quantile) : json(nullptr)},
                      {"validation_opr", e.validation_opr},
                      {"validation_mape", e.validation_mape}});
    write_file_atomic(dir / file, model_json(e.model));
  }
  manifest["models"] = std::move(models);
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

PredictorManifest load_manifest(const std::filesystem::path& dir) {
  try {
    auto doc = json::parse(slurp(dir / "manifest.json"));
    PredictorManifest m;
    m.method = parse_method(doc.at("method").get<std::string>());
    m.trained_through = doc.at("trained_through").get<double>();
    m.schema_fingerprint = std::stoull(doc.at("schema_fingerprint").get<std::string>(), nullptr, 16);
    for (const auto& jm : doc.at("models")) {
      auto fw = parse_firmware(jm.at("firmware").get<std::string>());
      const auto& q = jm.at("quantile");
      m.quantiles[fw] = q.is_null() ? std::nullopt : std::optional<double>(q.get<double>());
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, fmt::format("malformed manifest: {}", e.what()));
  }
}

DurationModel load_firmware_model(const std::filesystem::path& dir, FirmwareType fw) {
  const auto text = slurp(dir / fmt::format("{}.json", to_string(fw)));
  if (text.find("\"type\":\"linear\"") != std::string::npos) return linear_model_from_json(text);
  return boosted_model_from_json(text);
}

}  // namespace acela
