#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "acela/domain.hpp"
#include "acela/scheduler.hpp"

namespace acela {

struct FirmwareProfile {
  FirmwareType firmware = FirmwareType::CPLD;
  double job_fraction = 0.0;
  double max_norm_duration = 1.0;  // fraction of the global maximum
  double median_tail_ratio = 1.0;  // median / p99
  /// Share of the firmware's log-duration spread driven by hardware and version
  /// gap; the lognormal noise supplies the rest.
  double hardware_sensitivity = 0.6;
  /// Fraction of server types the firmware normally runs on.
  double server_coverage = 1.0;
};

/// Job mix, max normalised duration, median/tail ratio and server coverage per firmware:
///   CPLD .44/.95/.83/.07  FLASH .18/.21/.28/.22  BIC .14/.57/.72/.14
///   BIOS .12/.56/.78/.16  NIC .10/1.0/.32/.23    OPENBMC .01/.41/.41/.18
std::vector<FirmwareProfile> default_profiles();

struct WorkloadSpec {
  std::vector<FirmwareProfile> profiles = default_profiles();
  int n_servers = 300;
  int n_jobs = 10000;
  int n_days = 84;
  std::uint64_t seed = 1;
  /// When set, replaces every solved noise sigma (0 gives noise-free durations).
  std::optional<double> noise_sigma;

  int n_server_types = 12;
  int n_regions = 4;
  double cycle_days = 7.0;
  double reference_p99_seconds = 3600.0;
  /// Probability that a job lands on one of its firmware's covered server types.
  double coverage_affinity = 0.8;

  /// Throws Error(InvalidSpec).
  void validate() const;
};

/// Sigma of a lognormal whose median/p99 ratio is r: -ln(r) / z_0.99.
double lognormal_sigma_for_ratio(double ratio);

/// Duration generator: base scale x hardware/version factor x lognormal noise.
class GroundTruthModel {
 public:
  double log_factor(FirmwareType fw, const HardwareDescriptor& hw, double version_gap) const;
  double sigma(FirmwareType fw) const { return params_[index(fw)].sigma; }
  double base_median(FirmwareType fw) const { return params_[index(fw)].base_median; }
  /// Duration for a given standard-normal draw.
  double duration(FirmwareType fw, const HardwareDescriptor& hw, double version_gap, double z) const;
  /// Noise-free component.
  double deterministic_duration(FirmwareType fw, const HardwareDescriptor& hw, double version_gap) const {
    return duration(fw, hw, version_gap, 0.0);
  }

  friend GroundTruthModel make_ground_truth_model(const WorkloadSpec& spec);
  friend struct Generator;

 private:
  struct Params {
    double base_median = 1.0;
    double sensitivity = 0.0;  // scale applied to the standardised hardware score
    double score_mean = 0.0;
    double score_sd = 1.0;
    double sigma = 0.0;
  };
  static std::size_t index(FirmwareType fw) { return static_cast<std::size_t>(fw); }
  std::array<Params, 6> params_{};
  int n_server_types_ = 12;
};

/// Model with sigma solved on a large reference sample of the workload's hardware mix.
GroundTruthModel make_ground_truth_model(const WorkloadSpec& spec);

double ground_truth_duration(const GroundTruthModel& model, FirmwareType fw, const HardwareDescriptor& hw,
                             double version_gap, std::mt19937_64& rng);

/// Noise sigma such that exp(log_factor + sigma*z) has the requested sample
/// median/p99 ratio (lower median, nearest-rank p99). 0 if the deterministic
/// part alone is already wider.
double solve_noise_sigma(const std::vector<double>& log_factors, const std::vector<double>& normals, double ratio);

struct GeneratedWorkload {
  Dataset dataset;
  GroundTruthModel model;  // sigma solved on the generated sample
};

/// Fully reproducible from spec.seed.
GeneratedWorkload generate_workload(const WorkloadSpec& spec);
Dataset generate(const WorkloadSpec& spec);

struct FirmwareStats {
  FirmwareType firmware = FirmwareType::CPLD;
  std::size_t count = 0;
  double median = 0.0;
  double p99 = 0.0;
  double max = 0.0;
  double median_tail_ratio = 0.0;
  double max_norm = 0.0;  // max / global max
  bool low_confidence = false;  // fewer than two records
  std::vector<std::pair<double, double>> cdf;  // (probability, normalised duration)
};

/// Lower median for even n; p99 by nearest rank.
double lower_median(std::vector<double> values);
double nearest_rank(std::vector<double> values, double p);

/// Per-firmware order statistics, normalised by the dataset's global max duration.
std::vector<FirmwareStats> characterize(const Dataset& dataset);
std::string stats_to_csv(const std::vector<FirmwareStats>& stats);
std::string cdf_to_csv(const std::vector<FirmwareStats>& stats);

/// Unit configuration whose tau lets a server complete `target_jobs_per_visit`
/// jobs per visit on average under perfect predictions; T covers every wave.
UnitConfig default_unit_config(const Dataset& data, double target_jobs_per_visit = 1.57, double beta = 0.2,
                               std::size_t unit_size = 20);

/// Average jobs a server visit completes within `tau` when predictions are exact.
double jobs_per_visit(const Dataset& data, double tau);

}  // namespace acela
