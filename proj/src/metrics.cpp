#include "acela/metrics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "acela/error.hpp"

namespace acela {
namespace {

void check_lengths(std::span<const double> truths, std::span<const double> preds) {
  if (truths.size() != preds.size())
    throw Error(ErrorKind::ShapeError,
                fmt::format("shape error: {} truths vs {} predictions", truths.size(), preds.size()));
  if (truths.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
}

std::string fmt_opt(const std::optional<double>& v, int digits) {
  return v ? fmt::format("{:.{}f}", *v, digits) : std::string("undefined");
}

}  // namespace

double mape(std::span<const double> truths, std::span<const double> preds) {
  check_lengths(truths, preds);
  double total = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] == 0.0) throw Error(ErrorKind::DivisionByZeroTruth, "division by zero truth");
    total += std::abs(truths[i] - preds[i]) / truths[i];
  }
  return total / static_cast<double>(truths.size()) * 100.0;
}

double opr(std::span<const double> truths, std::span<const double> preds) {
  check_lengths(truths, preds);
  std::size_t over = 0;
  for (std::size_t i = 0; i < truths.size(); ++i)
    if (preds[i] > truths[i]) ++over;
  return static_cast<double>(over) / static_cast<double>(truths.size());
}

double jcr(std::span<const UnitOutcome> outcomes) {
  std::size_t online = 0, total = 0;
  for (const auto& o : outcomes) {
    online += o.completed_jobs_online;
    total += o.completed_jobs_total;
  }
  if (total == 0) throw Error(ErrorKind::Undefined, "undefined: no completed jobs");
  return 100.0 * static_cast<double>(online) / static_cast<double>(total);
}

double MetricsReport::offline_percent() const {
  return servers_visited == 0 ? 0.0
                              : 100.0 * static_cast<double>(offline_servers) / static_cast<double>(servers_visited);
}

MetricsReport summarize(std::string method_tag, std::span<const double> truths, std::span<const double> preds,
                        std::span<const UnitOutcome> outcomes) {
  MetricsReport r;
  r.method_tag = std::move(method_tag);
  r.mape = mape(truths, preds);
  r.opr = opr(truths, preds);
  for (const auto& o : outcomes) {
    r.offline_servers += o.offline_servers.size();
    r.servers_visited += o.servers_launched;
    r.downtime_seconds += o.downtime_seconds;
    r.jobs_completed_online += o.completed_jobs_online;
    r.jobs_completed_total += o.completed_jobs_total;
    r.unfinished_jobs += o.unfinished_jobs;
  }
  if (r.jobs_completed_total > 0) r.jcr = jcr(outcomes);
  return r;
}

std::string Ratio::str() const {
  if (value) return fmt::format("{:.2f}", *value);
  return fmt::format("undefined (reference zero; {}/{})", numerator, denominator);
}

OsrDtr osr_dtr(const MetricsReport& reference, const MetricsReport& other) {
  auto ratio = [](double num, double den) {
    Ratio r{std::nullopt, num, den};
    if (den > 0.0) r.value = num / den;
    return r;
  };
  return {ratio(static_cast<double>(other.offline_servers), static_cast<double>(reference.offline_servers)),
          ratio(other.downtime_seconds, reference.downtime_seconds)};
}

ComparisonReport compare(const std::vector<MetricsReport>& reports, const std::string& reference_method) {
  const MetricsReport* ref = nullptr;
  for (const auto& r : reports)
    if (r.method_tag == reference_method) ref = &r;
  if (!ref) throw Error(ErrorKind::InvalidConfig, fmt::format("reference method '{}' not evaluated", reference_method));

  ComparisonReport out;
  out.reference_method = reference_method;
  for (const auto& r : reports) out.rows.push_back({r, osr_dtr(*ref, r)});
  return out;
}

std::string to_csv(const ComparisonReport& report) {
  std::string out =
      "method,mape,opr,offline_servers,offline_percent,servers_visited,downtime_seconds,jobs_completed_online,"
      "jobs_completed_total,unfinished_jobs,jcr,osr,dtr\n";
  auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string("undefined"); };
  for (const auto& row : report.rows) {
    const auto& r = row.report;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.method_tag, r.mape, r.opr, r.offline_servers,
                       r.offline_percent(), r.servers_visited, r.downtime_seconds, r.jobs_completed_online,
                       r.jobs_completed_total, r.unfinished_jobs, opt(r.jcr), opt(row.ratios.osr.value),
                       opt(row.ratios.dtr.value));
  }
  return out;
}

std::string to_markdown(const ComparisonReport& report) {
  std::string header = "| Metric |";
  std::string rule = "|---|";
  for (const auto& row : report.rows) {
    header += fmt::format(" {} |", row.report.method_tag);
    rule += "---|";
  }
  auto line = [&](std::string_view name, auto&& cell) {
    std::string s = fmt::format("| {} |", name);
    for (const auto& row : report.rows) s += fmt::format(" {} |", cell(row));
    return s + "\n";
  };
  std::string out = fmt::format("Reference method: {}\n\n", report.reference_method);
  out += header + "\n" + rule + "\n";
  out += line("OSR", [](const ComparisonRow& r) { return r.ratios.osr.str(); });
  out += line("DTR", [](const ComparisonRow& r) { return r.ratios.dtr.str(); });
  out += line("JCR (%)", [](const ComparisonRow& r) { return fmt_opt(r.report.jcr, 1); });
  out += line("MAPE (%)", [](const ComparisonRow& r) { return fmt::format("{:.2f}", r.report.mape); });
  out += line("OPR (%)", [](const ComparisonRow& r) { return fmt::format("{:.1f}", 100.0 * r.report.opr); });
  out += line("Offline servers", [](const ComparisonRow& r) { return fmt::format("{}", r.report.offline_servers); });
  out += line("Offline servers (%)",
              [](const ComparisonRow& r) { return fmt::format("{:.2f}", r.report.offline_percent()); });
  out += line("Downtime (s)", [](const ComparisonRow& r) { return fmt::format("{:.1f}", r.report.downtime_seconds); });
  return out;
}

}  // namespace acela
