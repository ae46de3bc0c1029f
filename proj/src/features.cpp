#include "acela/features.hpp"

#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "acela/error.hpp"

namespace acela {
namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
}

const std::string& categorical_value(const JobRecord& r, std::size_t field) {
  static const std::string fw_names[] = {"CPLD", "FLASH", "BIC", "BIOS", "NIC", "OPENBMC"};
  switch (field) {
    case 0: return fw_names[static_cast<int>(r.firmware)];
    case 1: return r.current_version;
    case 2: return r.target_version;
    case 3: return r.hardware.server_type;
    default: return r.hardware.region;
  }
}

bool parse_version(const std::string& token, long& out) {
  if (token.size() < 2 || (token[0] != 'v' && token[0] != 'V')) return false;
  auto [ptr, ec] = std::from_chars(token.data() + 1, token.data() + token.size(), out);
  return ec == std::errc{} && ptr == token.data() + token.size();
}

}  // namespace

int Vocabulary::add(const std::string& token) {
  auto [it, inserted] = index_.try_emplace(token, static_cast<int>(tokens_.size()) + 1);
  if (inserted) tokens_.push_back(token);
  return it->second;
}

int Vocabulary::index_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? 0 : it->second;
}

const std::vector<std::string>& FeatureSchema::categorical_fields() {
  static const std::vector<std::string> fields = {"firmware", "current_version", "target_version",
                                                  "server_type", "region"};
  return fields;
}

const std::vector<std::string>& FeatureSchema::numeric_fields() {
  static const std::vector<std::string> fields = {"num_cores", "ram_gb",   "disk_gb",
                                                  "flash_gb",  "days_since_last_maintenance",
                                                  "version_gap"};
  return fields;
}

double version_gap(const std::string& current, const std::string& target) {
  long a = 0, b = 0;
  if (!parse_version(current, a) || !parse_version(target, b)) return 0.0;
  return static_cast<double>(b - a);
}

FeatureSchema build_schema(std::span<const JobRecord> train) {
  if (train.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  FeatureSchema schema;
  schema.vocab_.resize(FeatureSchema::kNumCategorical);
  for (const auto& r : train)
    for (std::size_t f = 0; f < FeatureSchema::kNumCategorical; ++f) schema.vocab_[f].add(categorical_value(r, f));

  std::uint64_t h = kFnvOffset;
  for (std::size_t f = 0; f < FeatureSchema::kNumCategorical; ++f) {
    fnv_mix(h, FeatureSchema::categorical_fields()[f]);
    fnv_mix(h, std::string_view("\x1f", 1));
    for (const auto& tok : schema.vocab_[f].tokens()) {
      fnv_mix(h, tok);
      fnv_mix(h, std::string_view("\x1e", 1));
    }
  }
  for (const auto& name : FeatureSchema::numeric_fields()) fnv_mix(h, name);
  schema.fingerprint_ = h;
  return schema;
}

FeatureSchema build_schema(const Dataset& train) { return build_schema(train.records()); }

void FeatureSchema::encode_into(const JobRecord& r, std::vector<double>& out) const {
  const auto& hw = r.hardware;
  const double numeric[] = {static_cast<double>(hw.num_cores), hw.ram_gb, hw.disk_gb, hw.flash_gb,
                            hw.days_since_last_maintenance, version_gap(r.current_version, r.target_version)};
  for (double v : numeric) {
    if (!std::isfinite(v))
      throw Error(ErrorKind::InvalidRecord, fmt::format("invalid record: job '{}' has a non-finite field", r.job_id));
  }
  for (std::size_t f = 0; f < kNumCategorical; ++f)
    out.push_back(static_cast<double>(vocab_[f].index_of(categorical_value(r, f))));
  out.insert(out.end(), std::begin(numeric), std::end(numeric));
}

FeatureVector encode(const JobRecord& record, const FeatureSchema& schema) {
  FeatureVector fv;
  fv.values.reserve(schema.width());
  schema.encode_into(record, fv.values);
  fv.schema_version = schema.fingerprint();
  return fv;
}

FeatureMatrix encode_all(std::span<const JobRecord> records, const FeatureSchema& schema) {
  FeatureMatrix m;
  m.rows = records.size();
  m.cols = schema.width();
  m.values.reserve(m.rows * m.cols);
  for (const auto& r : records) schema.encode_into(r, m.values);
  return m;
}

}  // namespace acela
