#include "acela/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "acela/csv.hpp"
#include "acela/error.hpp"
#include "acela/parallel.hpp"

namespace acela {
namespace {

using json = nlohmann::json;

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw Error(ErrorKind::Io, fmt::format("cannot create output directory '{}'", dir.string()));
}

DowntimeMode parse_downtime_mode(const std::string& s) {
  if (s == "in_flight") return DowntimeMode::InFlightOnly;
  if (s == "in_flight_plus_pending") return DowntimeMode::InFlightPlusPending;
  throw Error(ErrorKind::InvalidConfig, fmt::format("unknown downtime mode '{}'", s));
}

UnitConfig resolve_unit_config(const ExperimentConfig& cfg, const Dataset& history) {
  UnitConfig uc = default_unit_config(history, 1.57, cfg.beta, cfg.unit_size);
  if (cfg.tau) {
    uc.tau = *cfg.tau;
    const auto cap = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(cfg.beta * cfg.unit_size + 1e-9)));
    uc.unit_budget = uc.tau * static_cast<double>((cfg.unit_size + cap - 1) / cap);
  }
  if (cfg.unit_budget) uc.unit_budget = *cfg.unit_budget;
  uc.downtime_mode = cfg.downtime_mode;
  uc.validate();
  return uc;
}

TrainingOptions training_options(const ExperimentConfig& cfg) {
  TrainingOptions opt;
  opt.grid = cfg.grid;
  opt.slo = cfg.slo;
  opt.hp_grid = cfg.hp_grid;
  opt.validation_fraction = cfg.validation_fraction;
  opt.seed = cfg.seed;
  return opt;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto bad = [](std::string_view why) { throw Error(ErrorKind::InvalidConfig, fmt::format("invalid config: {}", why)); };
  if (methods.empty()) bad("no methods selected");
  if (!(beta > 0.0 && beta < 1.0)) bad("beta must be in (0,1)");
  if (unit_size == 0) bad("unit_size must be positive");
  if (n_cycles < 1) bad("n_cycles must be >= 1");
  if (!(test_window_days > 0.0)) bad("test_window_days must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) bad("validation_fraction must be in (0,1)");
  if (!(slo.min_validation_opr > 0.0 && slo.min_validation_opr <= 1.0)) bad("slo must be in (0,1]");
  if (hp_grid.empty()) bad("hyperparameter grid is empty");
  for (const auto& hp : hp_grid) hp.validate();
  sweep_hyperparams.validate();
  grid.validate();
  if (dataset_path && !std::filesystem::exists(*dataset_path))
    bad(fmt::format("dataset '{}' does not exist", dataset_path->string()));
}

ExperimentConfig config_from_json(const std::string& text) {
  ExperimentConfig cfg;
  try {
    const auto doc = json::parse(text);
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("out")) cfg.out_dir = doc["out"].get<std::string>();
    if (doc.contains("workload")) {
      const auto& w = doc["workload"];
      if (w.contains("n_jobs")) cfg.workload.n_jobs = w["n_jobs"].get<int>();
      if (w.contains("n_servers")) cfg.workload.n_servers = w["n_servers"].get<int>();
      if (w.contains("n_days")) cfg.workload.n_days = w["n_days"].get<int>();
      if (w.contains("noise_sigma") && !w["noise_sigma"].is_null()) cfg.workload.noise_sigma = w["noise_sigma"].get<double>();
      if (w.contains("dataset_path")) cfg.dataset_path = w["dataset_path"].get<std::string>();
    }
    if (doc.contains("unit")) {
      const auto& u = doc["unit"];
      if (u.contains("beta")) cfg.beta = u["beta"].get<double>();
      if (u.contains("tau")) cfg.tau = u["tau"].get<double>();
      if (u.contains("T")) cfg.unit_budget = u["T"].get<double>();
      if (u.contains("unit_size")) cfg.unit_size = u["unit_size"].get<std::size_t>();
      if (u.contains("downtime_mode")) cfg.downtime_mode = parse_downtime_mode(u["downtime_mode"].get<std::string>());
    }
    if (doc.contains("methods")) {
      cfg.methods.clear();
      for (const auto& m : doc["methods"]) cfg.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (doc.contains("quantiles")) cfg.grid.quantiles = doc["quantiles"].get<std::vector<double>>();
    if (doc.contains("slo")) cfg.slo.min_validation_opr = doc["slo"].get<double>();
    auto read_hp = [](const json& j) {
      Hyperparams hp;
      if (j.contains("num_rounds")) hp.num_rounds = j["num_rounds"].get<int>();
      if (j.contains("learning_rate")) hp.learning_rate = j["learning_rate"].get<double>();
      if (j.contains("max_depth")) hp.max_depth = j["max_depth"].get<int>();
      if (j.contains("min_samples_leaf")) hp.min_samples_leaf = j["min_samples_leaf"].get<int>();
      return hp;
    };
    if (doc.contains("hyperparams")) {
      cfg.hp_grid.clear();
      for (const auto& j : doc["hyperparams"]) cfg.hp_grid.push_back(read_hp(j));
    }
    if (doc.contains("sweep_hyperparams")) cfg.sweep_hyperparams = read_hp(doc["sweep_hyperparams"]);
    if (doc.contains("n_cycles")) cfg.n_cycles = doc["n_cycles"].get<int>();
    if (doc.contains("test_window_days")) cfg.test_window_days = doc["test_window_days"].get<double>();
    if (doc.contains("validation_fraction")) cfg.validation_fraction = doc["validation_fraction"].get<double>();
    if (doc.contains("oracle_predictions")) cfg.oracle_predictions = doc["oracle_predictions"].get<bool>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, fmt::format("invalid config: {}", e.what()));
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidConfig, fmt::format("invalid config: cannot open '{}'", path.string()));
  std::ostringstream s;
  s << in.rdbuf();
  return config_from_json(s.str());
}

Dataset load_or_generate(const ExperimentConfig& cfg) {
  if (cfg.dataset_path) return load_dataset(*cfg.dataset_path);
  WorkloadSpec spec = cfg.workload;
  spec.seed = cfg.seed;
  return generate(spec);
}

GenerateResult run_generate(const ExperimentConfig& cfg, bool write_outputs) {
  WorkloadSpec spec = cfg.workload;
  spec.seed = cfg.seed;
  GenerateResult res{generate(spec), {}};
  res.stats = characterize(res.dataset);
  if (write_outputs) {
    ensure_dir(cfg.out_dir);
    write_file_atomic(cfg.out_dir / "dataset.csv", dataset_to_csv(res.dataset));
    write_file_atomic(cfg.out_dir / "characterization.csv", stats_to_csv(res.stats));
    write_file_atomic(cfg.out_dir / "cdf.csv", cdf_to_csv(res.stats));
  }
  return res;
}

EvaluateResult run_evaluate(const ExperimentConfig& cfg, bool write_outputs) {
  cfg.validate();
  if (write_outputs) ensure_dir(cfg.out_dir / "traces");

  EvaluateResult res;
  res.split = split_by_time(load_or_generate(cfg), cfg.test_window_days, cfg.validation_fraction, cfg.seed);
  res.unit_config = resolve_unit_config(cfg, Dataset::concat(res.split.train, res.split.validation));

  const auto test = res.split.test.records();
  const auto units = group_into_units(test, cfg.unit_size);
  std::vector<double> truths;
  for (const auto& r : test) truths.push_back(r.true_duration);

  const auto options = training_options(cfg);
  for (auto method : cfg.methods) {
    MethodRun run;
    run.tag = std::string(to_string(method));
    run.predictors = train_predictor_set(res.split, method, options);
    const PredictorSet& set = *run.predictors;
    run.test_predictions = predict_vector(set, test);
    run.campaign = simulate_cycles(
        units, res.unit_config, [&set](std::span<const JobRecord> jobs) { return predict_vector(set, jobs); },
        cfg.n_cycles);
    res.runs.push_back(std::move(run));
  }
  if (cfg.oracle_predictions) {
    MethodRun run;
    run.tag = "ORACLE";
    run.test_predictions = truths;
    run.campaign = simulate_cycles(
        units, res.unit_config,
        [](std::span<const JobRecord> jobs) {
          std::vector<double> d;
          for (const auto& j : jobs) d.push_back(j.true_duration);
          return d;
        },
        cfg.n_cycles);
    res.runs.push_back(std::move(run));
  }

  std::vector<MetricsReport> reports;
  for (auto& run : res.runs) {
    const auto outcomes = run.campaign.all_unit_outcomes();
    run.report = summarize(run.tag, truths, run.test_predictions, outcomes);
    reports.push_back(run.report);
  }
  const bool has_acela = std::find(cfg.methods.begin(), cfg.methods.end(), Method::ACELA) != cfg.methods.end();
  res.comparison = compare(reports, has_acela ? "ACELA" : res.runs.front().tag);

  if (write_outputs) {
    write_file_atomic(cfg.out_dir / "metrics.csv", to_csv(res.comparison));
    write_file_atomic(cfg.out_dir / "comparison.md", to_markdown(res.comparison));
    for (const auto& run : res.runs) {
      std::string lines;
      for (const auto& unit : run.campaign.all_unit_outcomes()) lines += trace_to_jsonl(unit.trace);
      write_file_atomic(cfg.out_dir / "traces" / (run.tag + ".jsonl"), lines);
    }
  }
  return res;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "firmware,quantile,mape,opr,n_eval\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{}\n", to_string(r.firmware), r.quantile, r.mape, r.opr, r.n_eval);
  return out;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, bool write_outputs) {
  cfg.validate();
  if (write_outputs) ensure_dir(cfg.out_dir);
  const auto split = split_by_time(load_or_generate(cfg), cfg.test_window_days, cfg.validation_fraction, cfg.seed);
  const auto schema = build_schema(split.train);

  struct Task {
    FirmwareType fw;
    double q;
  };
  std::vector<Task> tasks;
  std::map<FirmwareType, std::pair<FeatureMatrix, std::vector<double>>> train_rows, eval_rows;
  for (auto fw : kAllFirmware) {
    const auto tr = split.train.filter(fw);
    if (tr.empty()) continue;
    auto ev = split.test.filter(fw);
    if (ev.empty()) ev = split.validation.filter(fw);
    if (ev.empty()) continue;
    auto targets = [](const Dataset& d) {
      std::vector<double> y;
      for (const auto& r : d.records()) y.push_back(r.true_duration);
      return y;
    };
    train_rows[fw] = {encode_all(tr.records(), schema), targets(tr)};
    eval_rows[fw] = {encode_all(ev.records(), schema), targets(ev)};
    for (double q : cfg.grid.quantiles) tasks.push_back({fw, q});
  }

  std::vector<SweepRow> rows(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    const auto [fw, q] = tasks[i];
    const auto& [x, y] = train_rows.at(fw);
    const auto& [ex, ey] = eval_rows.at(fw);
    auto hp = cfg.sweep_hyperparams;
    hp.min_samples_leaf = std::min<int>(hp.min_samples_leaf, static_cast<int>(y.size()));
    const auto model = fit(x, y, Loss::pinball(q), hp);
    std::vector<double> preds(ex.rows);
    for (std::size_t r = 0; r < ex.rows; ++r) preds[r] = predict(model, ex.row(r));
    rows[i] = {fw, q, mape(ey, preds), opr(ey, preds), ey.size()};
  });
  if (write_outputs) write_file_atomic(cfg.out_dir / "sweep.csv", sweep_to_csv(rows));
  return rows;
}

bool Table1Row::pass() const {
  return scheduled == expected_scheduled && completed == expected_completed && offline == expected_offline &&
         downtime == expected_downtime;
}

std::vector<Table1Row> replay_table1() {
  const std::vector<std::string> ids = {"A", "B", "C"};
  const std::vector<double> truth = {10.0, 20.0, 21.0};
  UnitConfig cfg;
  cfg.beta = 0.5;
  cfg.tau = 50.0;
  cfg.unit_budget = 50.0;

  struct Case {
    std::string label;
    std::vector<double> predictions;
    std::size_t scheduled, completed;
    bool offline;
    double downtime;
  };
  const std::vector<Case> cases = {
      {"Groundtruth", truth, 2, 2, false, 0.0},
      {"Underprediction", {9.0, 19.0, 20.0}, 3, 2, true, 1.0},
      {"Overprediction", {11.0, 21.0, 22.0}, 2, 2, false, 0.0},
  };

  std::vector<Table1Row> rows;
  for (const auto& c : cases) {
    ServerPlan plan{"server", {}};
    for (std::size_t i = 0; i < ids.size(); ++i) plan.jobs.push_back({ids[i], c.predictions[i], 0, truth[i]});
    const auto out = simulate_unit(std::span<const ServerPlan>(&plan, 1), cfg);
    Table1Row row;
    row.label = c.label;
    row.predictions = c.predictions;
    row.scheduled = static_cast<std::size_t>(std::count_if(
        out.trace.begin(), out.trace.end(), [](const Event& e) { return e.kind == EventKind::JobStarted; }));
    row.completed = out.completed_jobs_total;
    row.offline = !out.offline_servers.empty();
    row.downtime = out.downtime_seconds;
    row.expected_scheduled = c.scheduled;
    row.expected_completed = c.completed;
    row.expected_offline = c.offline;
    row.expected_downtime = c.downtime;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_table1(const std::vector<Table1Row>& rows) {
  std::string out = fmt::format("{:<16} {:>5} {:>5} {:>5} {:>10} {:>10} {:>9} {:<15} {}\n", "", "A", "B", "C",
                                "#scheduled", "#completed", "downtime", "outcome", "check");
  out += fmt::format("{:<16} {:>5} {:>5} {:>5}\n", "Truth", "10s", "20s", "21s");
  for (const auto& r : rows)
    out += fmt::format("{:<16} {:>4}s {:>4}s {:>4}s {:>10} {:>10} {:>8}s {:<15} {}\n", r.label, r.predictions[0],
                       r.predictions[1], r.predictions[2], r.scheduled, r.completed, r.downtime,
                       r.offline ? "Server offline" : "Server online", r.pass() ? "PASS" : "FAIL");
  return out;
}

}  // namespace acela
