#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace acela {

enum class FirmwareType { CPLD, FLASH, BIC, BIOS, NIC, OPENBMC };

inline constexpr std::array<FirmwareType, 6> kAllFirmware = {
    FirmwareType::CPLD, FirmwareType::FLASH, FirmwareType::BIC,
    FirmwareType::BIOS, FirmwareType::NIC,   FirmwareType::OPENBMC};

std::string_view to_string(FirmwareType fw);
/// Throws Error(InvalidRecord) for an unknown label.
FirmwareType parse_firmware(std::string_view label);

struct HardwareDescriptor {
  std::string server_type;
  int num_cores = 1;
  double ram_gb = 1.0;
  double disk_gb = 1.0;
  double flash_gb = 0.0;
  std::string region;
  double days_since_last_maintenance = 0.0;
};

struct JobRecord {
  std::string job_id;
  FirmwareType firmware = FirmwareType::CPLD;
  std::string current_version;
  std::string target_version;
  HardwareDescriptor hardware;
  int priority = 0;            // higher = more urgent
  double true_duration = 1.0;  // seconds
  double visit_time = 0.0;     // days
  std::string server_id;
};

/// Throws Error(InvalidRecord) when a record violates its field constraints.
void validate(const JobRecord& record);

/// Immutable, visit_time-ordered collection of jobs with unique ids.
class Dataset {
 public:
  Dataset() = default;
  /// Validates every record, rejects duplicate job ids and stable-sorts by visit_time.
  explicit Dataset(std::vector<JobRecord> records);

  std::span<const JobRecord> records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const JobRecord& operator[](std::size_t i) const { return records_[i]; }

  double min_visit_time() const;
  double max_visit_time() const;

  /// Records of a single firmware type, order preserved.
  Dataset filter(FirmwareType fw) const;

  /// Union of two datasets; ids must stay unique.
  static Dataset concat(const Dataset& a, const Dataset& b);

 private:
  std::vector<JobRecord> records_;
};

struct DatasetSplit {
  Dataset train;
  Dataset validation;
  Dataset test;
};

/// Time-based split: the test set is every record within `test_window_days` of the
/// latest visit; the rest is shuffled (seeded) into train/validation.
DatasetSplit split_by_time(const Dataset& dataset, double test_window_days,
                           double validation_fraction, std::uint64_t seed);

/// Seeded 90/10-style partition without a test window.
std::pair<Dataset, Dataset> split_train_validation(const Dataset& dataset,
                                                   double validation_fraction,
                                                   std::uint64_t seed);

}  // namespace acela
