#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acela/scheduler.hpp"

namespace acela {

/// Mean absolute percentage error, x100. Throws Error(DivisionByZeroTruth) on a zero truth.
double mape(std::span<const double> truths, std::span<const double> preds);

/// Fraction of predictions strictly above the truth.
double opr(std::span<const double> truths, std::span<const double> preds);

/// 100 * completions on returned servers / all completions. Throws Error(Undefined)
/// when nothing completed.
double jcr(std::span<const UnitOutcome> outcomes);

struct MetricsReport {
  std::string method_tag;
  double mape = 0.0;  // percent
  double opr = 0.0;   // fraction
  std::size_t offline_servers = 0;
  std::size_t servers_visited = 0;
  double downtime_seconds = 0.0;
  std::size_t jobs_completed_online = 0;
  std::size_t jobs_completed_total = 0;
  std::size_t unfinished_jobs = 0;
  std::optional<double> jcr;  // percent; empty when nothing completed

  /// Offline servers as a percentage of launched servers.
  double offline_percent() const;
};

MetricsReport summarize(std::string method_tag, std::span<const double> truths, std::span<const double> preds,
                        std::span<const UnitOutcome> outcomes);

/// other / reference. Empty value when the reference denominator is zero.
struct Ratio {
  std::optional<double> value;
  double numerator = 0.0;
  double denominator = 0.0;

  std::string str() const;
};

struct OsrDtr {
  Ratio osr;
  Ratio dtr;
};

OsrDtr osr_dtr(const MetricsReport& reference, const MetricsReport& other);

struct ComparisonRow {
  MetricsReport report;
  OsrDtr ratios;
};

struct ComparisonReport {
  std::string reference_method;
  std::vector<ComparisonRow> rows;
};

/// Throws Error(InvalidConfig) if `reference_method` is not among the reports.
ComparisonReport compare(const std::vector<MetricsReport>& reports, const std::string& reference_method);

std::string to_csv(const ComparisonReport& report);
/// Methods as columns, OSR / DTR / JCR (and the accuracy metrics) as rows.
std::string to_markdown(const ComparisonReport& report);

}  // namespace acela
