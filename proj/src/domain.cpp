#include "acela/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

#include <fmt/format.h>

#include "acela/error.hpp"

namespace acela {

std::string_view to_string(FirmwareType fw) {
  switch (fw) {
    case FirmwareType::CPLD: return "CPLD";
    case FirmwareType::FLASH: return "FLASH";
    case FirmwareType::BIC: return "BIC";
    case FirmwareType::BIOS: return "BIOS";
    case FirmwareType::NIC: return "NIC";
    case FirmwareType::OPENBMC: return "OPENBMC";
  }
  return "?";
}

FirmwareType parse_firmware(std::string_view label) {
  for (auto fw : kAllFirmware) {
    if (to_string(fw) == label) return fw;
  }
  throw Error(ErrorKind::InvalidRecord, fmt::format("invalid record: unknown firmware '{}'", label));
}

void validate(const JobRecord& r) {
  const auto& hw = r.hardware;
  auto bad = [&](std::string_view why) {
    throw Error(ErrorKind::InvalidRecord, fmt::format("invalid record: job '{}': {}", r.job_id, why));
  };
  if (r.job_id.empty()) bad("empty job_id");
  if (!std::isfinite(r.true_duration) || r.true_duration <= 0.0) bad("true_duration must be positive");
  if (!std::isfinite(r.visit_time) || r.visit_time < 0.0) bad("visit_time must be non-negative");
  if (r.priority < 0) bad("priority must be non-negative");
  if (hw.num_cores <= 0) bad("num_cores must be positive");
  if (!std::isfinite(hw.ram_gb) || hw.ram_gb <= 0.0) bad("ram_gb must be positive");
  if (!std::isfinite(hw.disk_gb) || hw.disk_gb <= 0.0) bad("disk_gb must be positive");
  if (!std::isfinite(hw.flash_gb) || hw.flash_gb < 0.0) bad("flash_gb must be non-negative");
  if (!std::isfinite(hw.days_since_last_maintenance) || hw.days_since_last_maintenance < 0.0)
    bad("days_since_last_maintenance must be non-negative");
}

Dataset::Dataset(std::vector<JobRecord> records) : records_(std::move(records)) {
  std::unordered_set<std::string> seen;
  seen.reserve(records_.size());
  for (const auto& r : records_) {
    validate(r);
    if (!seen.insert(r.job_id).second)
      throw Error(ErrorKind::InvalidRecord, fmt::format("invalid record: duplicate job_id '{}'", r.job_id));
  }
  std::stable_sort(records_.begin(), records_.end(),
                   [](const JobRecord& a, const JobRecord& b) { return a.visit_time < b.visit_time; });
}

double Dataset::min_visit_time() const {
  if (records_.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  return records_.front().visit_time;
}

double Dataset::max_visit_time() const {
  if (records_.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  return records_.back().visit_time;
}

Dataset Dataset::filter(FirmwareType fw) const {
  Dataset out;
  std::copy_if(records_.begin(), records_.end(), std::back_inserter(out.records_),
               [fw](const JobRecord& r) { return r.firmware == fw; });
  return out;
}

Dataset Dataset::concat(const Dataset& a, const Dataset& b) {
  std::vector<JobRecord> all(a.records_);
  all.insert(all.end(), b.records_.begin(), b.records_.end());
  return Dataset(std::move(all));
}

std::pair<Dataset, Dataset> split_train_validation(const Dataset& dataset,
                                                   double validation_fraction,
                                                   std::uint64_t seed) {
  if (dataset.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw Error(ErrorKind::InvalidConfig, "validation_fraction must be in (0,1)");

  const auto n = dataset.size();
  const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
  if (n_val >= n) throw Error(ErrorKind::DegenerateSplit, "degenerate split");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<char> is_val(n, 0);
  for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = 1;

  std::vector<JobRecord> train, val;
  train.reserve(n - n_val);
  val.reserve(n_val);
  for (std::size_t i = 0; i < n; ++i) (is_val[i] ? val : train).push_back(dataset[i]);
  return {Dataset(std::move(train)), Dataset(std::move(val))};
}

DatasetSplit split_by_time(const Dataset& dataset, double test_window_days,
                           double validation_fraction, std::uint64_t seed) {
  if (dataset.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  if (!(test_window_days > 0.0)) throw Error(ErrorKind::InvalidConfig, "test_window_days must be positive");

  const double cutoff = dataset.max_visit_time() - test_window_days;
  std::vector<JobRecord> rest, test;
  for (const auto& r : dataset.records()) (r.visit_time > cutoff ? test : rest).push_back(r);
  if (rest.empty() || test.empty()) throw Error(ErrorKind::DegenerateSplit, "degenerate split");

  auto [train, val] = split_train_validation(Dataset(std::move(rest)), validation_fraction, seed);
  if (train.empty()) throw Error(ErrorKind::DegenerateSplit, "degenerate split");
  return {std::move(train), std::move(val), Dataset(std::move(test))};
}

}  // namespace acela
