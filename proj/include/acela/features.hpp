#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "acela/domain.hpp"

namespace acela {

/// Token vocabulary of one categorical field. Index 0 is reserved for tokens
/// never seen while building the schema.
class Vocabulary {
 public:
  /// Returns the token's index, assigning the next one on first sight.
  int add(const std::string& token);
  /// 0 for unseen tokens.
  int index_of(const std::string& token) const;
  /// Tokens in index order; tokens()[i] has index i + 1.
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Row-major matrix of encoded features.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

struct FeatureVector {
  std::vector<double> values;
  std::uint64_t schema_version = 0;
};

/// Categorical vocabularies learned from training data plus the fixed numeric
/// columns. Immutable once built.
///
/// Column layout: [firmware, current_version, target_version, server_type, region,
///                 num_cores, ram_gb, disk_gb, flash_gb, days_since_last_maintenance,
///                 version_gap]
class FeatureSchema {
 public:
  static constexpr std::size_t kNumCategorical = 5;

  static const std::vector<std::string>& categorical_fields();
  static const std::vector<std::string>& numeric_fields();

  std::size_t width() const { return categorical_fields().size() + numeric_fields().size(); }
  std::uint64_t fingerprint() const { return fingerprint_; }
  const Vocabulary& vocabulary(std::size_t field) const { return vocab_.at(field); }

  /// Appends the encoded record to `out` (exactly width() values).
  void encode_into(const JobRecord& record, std::vector<double>& out) const;

  friend FeatureSchema build_schema(const Dataset& train);
  friend FeatureSchema build_schema(std::span<const JobRecord> train);

 private:
  std::vector<Vocabulary> vocab_;
  std::uint64_t fingerprint_ = 0;
};

/// Throws Error(EmptyInput) on an empty training set.
FeatureSchema build_schema(const Dataset& train);
FeatureSchema build_schema(std::span<const JobRecord> train);

/// Throws Error(InvalidRecord) if a numeric field is not finite.
FeatureVector encode(const JobRecord& record, const FeatureSchema& schema);
FeatureMatrix encode_all(std::span<const JobRecord> records, const FeatureSchema& schema);

/// Numeric difference between two "v<N>" version tokens; 0 when either is not of that form.
double version_gap(const std::string& current, const std::string& target);

}  // namespace acela
