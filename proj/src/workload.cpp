#include "acela/workload.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "acela/error.hpp"
#include "acela/features.hpp"

namespace acela {
namespace {

constexpr double kZ99 = 2.3263478740408408;  // standard normal 0.99 quantile
constexpr std::uint64_t kReferenceSeed = 0x5eedf00dULL;
constexpr std::size_t kReferenceSamples = 20000;

// Per-firmware weights of the hardware score: log2 cores, log2 flash, server
// type effect, version gap.
constexpr std::array<std::array<double, 4>, 6> kWeights = {{
    {0.2, 0.0, 1.0, 0.4},  // CPLD
    {0.1, 1.0, 0.4, 0.5},  // FLASH
    {0.5, 0.0, 0.7, 0.4},  // BIC
    {0.6, 0.2, 0.5, 0.5},  // BIOS
    {0.4, 0.0, 0.8, 0.6},  // NIC
    {0.3, 0.1, 0.6, 0.5},  // OPENBMC
}};
constexpr std::array<double, 12> kTypeEffect = {-0.8, 0.3, 1.1, -0.2, 0.6, -1.0, 0.9, 0.0, -0.5, 0.4, 1.3, -0.6};
constexpr std::array<int, 6> kCores = {16, 32, 48, 64, 96, 128};
constexpr std::array<double, 6> kFlash = {0.0, 128.0, 256.0, 512.0, 1024.0, 2048.0};
constexpr std::array<double, 4> kDisk = {480.0, 960.0, 1920.0, 3840.0};

std::optional<int> server_type_index(const std::string& token) {
  if (token.size() < 2 || token[0] != 'T') return std::nullopt;
  int v = 0;
  auto [ptr, ec] = std::from_chars(token.data() + 1, token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size() || v < 0) return std::nullopt;
  return v;
}

double hardware_score(FirmwareType fw, const HardwareDescriptor& hw, double version_gap) {
  const auto f = static_cast<std::size_t>(fw);
  const auto& w = kWeights[f];
  double type_effect = 0.0;
  if (auto idx = server_type_index(hw.server_type))
    type_effect = kTypeEffect[(static_cast<std::size_t>(*idx) + 2 * f) % kTypeEffect.size()];
  return w[0] * std::log2(static_cast<double>(hw.num_cores) / 32.0) + w[1] * std::log2((hw.flash_gb + 64.0) / 320.0) +
         w[2] * type_effect + w[3] * (version_gap - 1.0);
}

HardwareDescriptor hardware_for_type(int type, std::mt19937_64& rng, int n_regions) {
  HardwareDescriptor hw;
  const auto t = static_cast<std::size_t>(type);
  hw.server_type = fmt::format("T{:02d}", type);
  hw.num_cores = kCores[t % kCores.size()];
  hw.ram_gb = hw.num_cores * (std::bernoulli_distribution(0.5)(rng) ? 4.0 : 8.0);
  hw.disk_gb = kDisk[t % kDisk.size()];
  hw.flash_gb = kFlash[(t * 5 + 1) % kFlash.size()];
  hw.region = fmt::format("R{}", std::uniform_int_distribution<int>(0, n_regions - 1)(rng));
  return hw;
}

int draw_gap(std::mt19937_64& rng) {
  static const std::array<double, 3> weights = {0.6, 0.3, 0.1};
  return 1 + std::discrete_distribution<int>(weights.begin(), weights.end())(rng);
}

double sample_ratio(const std::vector<double>& lf, const std::vector<double>& z, double sigma) {
  std::vector<double> v(lf.size());
  for (std::size_t i = 0; i < lf.size(); ++i) v[i] = lf[i] + sigma * z[i];
  return std::exp(lower_median(v) - nearest_rank(std::move(v), 0.99));
}

}  // namespace

std::vector<FirmwareProfile> default_profiles() {
  // The published job shares cover 99% of upgrades; they are rescaled to sum to one.
  constexpr double kCovered = 0.99;
  return {
      {FirmwareType::CPLD, 0.44 / kCovered, 0.95, 0.83, 0.6, 0.07},
      {FirmwareType::FLASH, 0.18 / kCovered, 0.21, 0.28, 0.6, 0.22},
      {FirmwareType::BIC, 0.14 / kCovered, 0.57, 0.72, 0.6, 0.14},
      {FirmwareType::BIOS, 0.12 / kCovered, 0.56, 0.78, 0.6, 0.16},
      {FirmwareType::NIC, 0.10 / kCovered, 1.00, 0.32, 0.6, 0.23},
      {FirmwareType::OPENBMC, 0.01 / kCovered, 0.41, 0.41, 0.6, 0.18},
  };
}

void WorkloadSpec::validate() const {
  auto bad = [](std::string_view why) { throw Error(ErrorKind::InvalidSpec, fmt::format("invalid spec: {}", why)); };
  if (profiles.size() != kAllFirmware.size()) bad("need exactly six firmware profiles");
  double total = 0.0;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto& p = profiles[i];
    if (p.firmware != kAllFirmware[i]) bad("profiles must follow firmware order");
    if (!(p.job_fraction >= 0.0)) bad("negative job fraction");
    if (!(p.median_tail_ratio > 0.0 && p.median_tail_ratio <= 1.0)) bad("median/tail ratio must be in (0,1]");
    if (!(p.max_norm_duration > 0.0)) bad("max normalised duration must be positive");
    if (!(p.hardware_sensitivity >= 0.0)) bad("hardware sensitivity must be non-negative");
    if (!(p.server_coverage > 0.0 && p.server_coverage <= 1.0)) bad("server coverage must be in (0,1]");
    total += p.job_fraction;
  }
  if (std::abs(total - 1.0) > 1e-9) bad("job fractions must sum to 1");
  if (n_servers <= 0) bad("n_servers must be positive");
  if (n_jobs <= 0) bad("n_jobs must be positive");
  if (n_jobs < n_servers) bad("n_jobs must be at least n_servers");
  if (n_days <= 0) bad("n_days must be positive");
  if (noise_sigma && !(*noise_sigma >= 0.0)) bad("noise sigma must be non-negative");
  if (n_server_types <= 0 || n_regions <= 0) bad("need at least one server type and region");
  if (!(cycle_days > 0.0) || !(reference_p99_seconds > 0.0)) bad("cycle length and scale must be positive");
  if (!(coverage_affinity >= 0.0 && coverage_affinity <= 1.0)) bad("coverage affinity must be in [0,1]");
}

double lognormal_sigma_for_ratio(double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw Error(ErrorKind::InvalidSpec, "invalid spec: ratio must be in (0,1]");
  return -std::log(ratio) / kZ99;
}

double GroundTruthModel::log_factor(FirmwareType fw, const HardwareDescriptor& hw, double version_gap) const {
  const auto& p = params_[index(fw)];
  return p.sensitivity * (hardware_score(fw, hw, version_gap) - p.score_mean) / p.score_sd;
}

double GroundTruthModel::duration(FirmwareType fw, const HardwareDescriptor& hw, double version_gap, double z) const {
  const auto& p = params_[index(fw)];
  return p.base_median * std::exp(log_factor(fw, hw, version_gap) + p.sigma * z);
}

double solve_noise_sigma(const std::vector<double>& log_factors, const std::vector<double>& normals, double ratio) {
  if (log_factors.size() != normals.size() || log_factors.empty())
    throw Error(ErrorKind::ShapeError, "shape error: log factors and normals differ in length");
  if (sample_ratio(log_factors, normals, 0.0) <= ratio) return 0.0;
  double lo = 0.0, hi = 5.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (sample_ratio(log_factors, normals, mid) > ratio ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Shared construction of the normalisation constants.
struct Generator {
  static GroundTruthModel base_model(const WorkloadSpec& spec) {
    spec.validate();
    GroundTruthModel m;
    m.n_server_types_ = spec.n_server_types;
    std::mt19937_64 rng(kReferenceSeed);
    for (std::size_t f = 0; f < kAllFirmware.size(); ++f) {
      const auto& prof = spec.profiles[f];
      std::vector<double> scores(kReferenceSamples);
      for (auto& s : scores) {
        const int type = std::uniform_int_distribution<int>(0, spec.n_server_types - 1)(rng);
        s = hardware_score(prof.firmware, hardware_for_type(type, rng, spec.n_regions), draw_gap(rng));
      }
      const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
      double var = 0.0;
      for (double s : scores) var += (s - mean) * (s - mean);
      const double sd = std::sqrt(var / static_cast<double>(scores.size()));

      auto& p = m.params_[f];
      p.base_median = prof.max_norm_duration * prof.median_tail_ratio * spec.reference_p99_seconds;
      p.sensitivity = prof.hardware_sensitivity * lognormal_sigma_for_ratio(prof.median_tail_ratio);
      p.score_mean = mean;
      p.score_sd = sd > 0.0 ? sd : 1.0;
    }
    return m;
  }
  static void set_sigma(GroundTruthModel& m, FirmwareType fw, double sigma) {
    m.params_[GroundTruthModel::index(fw)].sigma = sigma;
  }
};

GroundTruthModel make_ground_truth_model(const WorkloadSpec& spec) {
  GroundTruthModel m = Generator::base_model(spec);
  std::mt19937_64 rng(kReferenceSeed + 1);
  std::normal_distribution<double> normal;
  for (std::size_t f = 0; f < kAllFirmware.size(); ++f) {
    const auto fw = kAllFirmware[f];
    std::vector<double> lf(kReferenceSamples), z(kReferenceSamples);
    for (std::size_t i = 0; i < kReferenceSamples; ++i) {
      const int type = std::uniform_int_distribution<int>(0, spec.n_server_types - 1)(rng);
      const auto hw = hardware_for_type(type, rng, spec.n_regions);
      lf[i] = m.log_factor(fw, hw, draw_gap(rng));
      z[i] = normal(rng);
    }
    Generator::set_sigma(m, fw, spec.noise_sigma.value_or(solve_noise_sigma(lf, z, spec.profiles[f].median_tail_ratio)));
  }
  return m;
}

double ground_truth_duration(const GroundTruthModel& model, FirmwareType fw, const HardwareDescriptor& hw,
                             double version_gap, std::mt19937_64& rng) {
  return model.duration(fw, hw, version_gap, std::normal_distribution<double>()(rng));
}

GeneratedWorkload generate_workload(const WorkloadSpec& spec) {
  GroundTruthModel model = Generator::base_model(spec);
  std::mt19937_64 rng(spec.seed);

  struct Server {
    std::string id;
    int type = 0;
    HardwareDescriptor hw;
    double phase = 0.0;
    int visits = 1;
  };
  std::vector<Server> servers(static_cast<std::size_t>(spec.n_servers));
  std::vector<std::vector<std::size_t>> servers_of_type(static_cast<std::size_t>(spec.n_server_types));
  for (std::size_t s = 0; s < servers.size(); ++s) {
    auto& srv = servers[s];
    srv.id = fmt::format("s{:05d}", s);
    srv.type = std::uniform_int_distribution<int>(0, spec.n_server_types - 1)(rng);
    srv.hw = hardware_for_type(srv.type, rng, spec.n_regions);
    srv.phase = std::round(std::uniform_real_distribution<double>(0.0, spec.cycle_days)(rng) * 100.0) / 100.0;
    srv.visits = std::max(1, static_cast<int>(std::ceil((spec.n_days - srv.phase) / spec.cycle_days)));
    servers_of_type[static_cast<std::size_t>(srv.type)].push_back(s);
  }

  // Covered server types per firmware: a seeded prefix of a type permutation.
  std::vector<std::vector<std::size_t>> covered_servers(kAllFirmware.size());
  for (std::size_t f = 0; f < kAllFirmware.size(); ++f) {
    std::vector<int> types(static_cast<std::size_t>(spec.n_server_types));
    std::iota(types.begin(), types.end(), 0);
    std::shuffle(types.begin(), types.end(), rng);
    const auto n_cov = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(spec.profiles[f].server_coverage * spec.n_server_types - 1e-9)));
    for (std::size_t k = 0; k < n_cov; ++k) {
      const auto& members = servers_of_type[static_cast<std::size_t>(types[k])];
      covered_servers[f].insert(covered_servers[f].end(), members.begin(), members.end());
    }
    std::sort(covered_servers[f].begin(), covered_servers[f].end());
  }

  std::vector<double> fractions;
  for (const auto& p : spec.profiles) fractions.push_back(p.job_fraction);
  std::discrete_distribution<std::size_t> pick_firmware(fractions.begin(), fractions.end());
  std::uniform_int_distribution<std::size_t> any_server(0, servers.size() - 1);
  std::bernoulli_distribution on_covered(spec.coverage_affinity);
  std::normal_distribution<double> normal;

  const auto n = static_cast<std::size_t>(spec.n_jobs);
  std::vector<JobRecord> records(n);
  std::vector<double> lf(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t f = pick_firmware(rng);
    const auto& cov = covered_servers[f];
    std::size_t s = any_server(rng);
    if (on_covered(rng) && !cov.empty()) s = cov[std::uniform_int_distribution<std::size_t>(0, cov.size() - 1)(rng)];
    const auto& srv = servers[s];
    const int visit = std::uniform_int_distribution<int>(0, srv.visits - 1)(rng);
    const int gap = draw_gap(rng);

    auto& r = records[i];
    r.job_id = fmt::format("j{:06d}", i);
    r.firmware = kAllFirmware[f];
    r.server_id = srv.id;
    r.hardware = srv.hw;
    r.visit_time = srv.phase + spec.cycle_days * visit;
    r.hardware.days_since_last_maintenance =
        std::round(std::uniform_real_distribution<double>(0.0, 90.0)(rng) * 10.0) / 10.0;
    const int current = 1 + static_cast<int>(r.visit_time / 21.0) + std::uniform_int_distribution<int>(0, 1)(rng);
    r.current_version = fmt::format("v{}", current);
    r.target_version = fmt::format("v{}", current + gap);
    r.priority = std::uniform_int_distribution<int>(0, 2)(rng);
    lf[i] = model.log_factor(r.firmware, r.hardware, gap);
    z[i] = normal(rng);
  }

  for (std::size_t f = 0; f < kAllFirmware.size(); ++f) {
    std::vector<double> flf, fz;
    for (std::size_t i = 0; i < n; ++i) {
      if (records[i].firmware != kAllFirmware[f]) continue;
      flf.push_back(lf[i]);
      fz.push_back(z[i]);
    }
    double sigma = spec.noise_sigma.value_or(0.0);
    if (!spec.noise_sigma && !flf.empty()) sigma = solve_noise_sigma(flf, fz, spec.profiles[f].median_tail_ratio);
    Generator::set_sigma(model, kAllFirmware[f], sigma);
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = records[i];
    r.true_duration = model.base_median(r.firmware) * std::exp(lf[i] + model.sigma(r.firmware) * z[i]);
  }
  return {Dataset(std::move(records)), model};
}

Dataset generate(const WorkloadSpec& spec) { return generate_workload(spec).dataset; }

double lower_median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

double nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(values.size()) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, values.size());
  auto it = values.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(values.begin(), it, values.end());
  return *it;
}

std::vector<FirmwareStats> characterize(const Dataset& dataset) {
  if (dataset.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  double global_max = 0.0;
  for (const auto& r : dataset.records()) global_max = std::max(global_max, r.true_duration);

  std::vector<FirmwareStats> out;
  for (auto fw : kAllFirmware) {
    std::vector<double> d;
    for (const auto& r : dataset.records())
      if (r.firmware == fw) d.push_back(r.true_duration);
    if (d.empty()) continue;
    std::sort(d.begin(), d.end());
    FirmwareStats s;
    s.firmware = fw;
    s.count = d.size();
    s.median = lower_median(d);
    s.p99 = nearest_rank(d, 0.99);
    s.max = d.back();
    s.median_tail_ratio = s.median / s.p99;
    s.max_norm = s.max / global_max;
    s.low_confidence = d.size() < 2;
    for (int k = 1; k <= 100; ++k) {
      const double p = k / 100.0;
      s.cdf.emplace_back(p, nearest_rank(d, p) / global_max);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string stats_to_csv(const std::vector<FirmwareStats>& stats) {
  std::string out = "firmware,count,job_fraction,median,p99,max,median_tail_ratio,max_norm,low_confidence\n";
  std::size_t total = 0;
  for (const auto& s : stats) total += s.count;
  for (const auto& s : stats)
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", to_string(s.firmware), s.count,
                       static_cast<double>(s.count) / static_cast<double>(total), s.median, s.p99, s.max,
                       s.median_tail_ratio, s.max_norm, s.low_confidence ? 1 : 0);
  return out;
}

std::string cdf_to_csv(const std::vector<FirmwareStats>& stats) {
  std::string out = "firmware,probability,normalized_duration\n";
  for (const auto& s : stats)
    for (const auto& [p, v] : s.cdf) out += fmt::format("{},{},{}\n", to_string(s.firmware), p, v);
  return out;
}

double jobs_per_visit(const Dataset& data, double tau) {
  std::map<std::pair<std::string, double>, std::vector<JobCandidate>> visits;
  for (const auto& r : data.records())
    visits[{r.server_id, r.visit_time}].push_back({r.job_id, r.true_duration, 0});
  if (visits.empty()) return 0.0;

  std::size_t done = 0;
  for (auto& [key, jobs] : visits) {
    double used = 0.0;
    while (auto pick = select_next_job(jobs, tau - used)) {
      used += jobs[*pick].predicted;
      jobs.erase(jobs.begin() + static_cast<std::ptrdiff_t>(*pick));
      ++done;
    }
  }
  return static_cast<double>(done) / static_cast<double>(visits.size());
}

UnitConfig default_unit_config(const Dataset& data, double target_jobs_per_visit, double beta,
                               std::size_t unit_size) {
  if (data.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  if (unit_size == 0) throw Error(ErrorKind::InvalidConfig, "unit_size must be positive");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : data.records()) {
    lo = std::min(lo, r.true_duration);
    hi = std::max(hi, r.true_duration);
  }
  hi *= 4.0;

  constexpr int kSteps = 240;
  double best_tau = lo, best_err = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kSteps; ++k) {
    const double tau = lo * std::pow(hi / lo, static_cast<double>(k) / kSteps);
    const double err = std::abs(jobs_per_visit(data, tau) - target_jobs_per_visit);
    if (err < best_err) {
      best_err = err;
      best_tau = tau;
    }
  }
  best_tau = std::round(best_tau);

  UnitConfig cfg;
  cfg.beta = beta;
  cfg.tau = best_tau;
  const auto cap = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(beta * unit_size + 1e-9)));
  const auto waves = (unit_size + cap - 1) / cap;
  cfg.unit_budget = best_tau * static_cast<double>(waves);
  cfg.validate();
  return cfg;
}

}  // namespace acela
