#include <doctest.h>

#include <algorithm>
#include <random>

#include "acela/error.hpp"
#include "acela/metrics.hpp"

using namespace acela;

namespace {

double loop_mape(const std::vector<double>& t, const std::vector<double>& p) {
  double s = 0;
  for (std::size_t i = 0; i < t.size(); ++i) s += std::abs(p[i] - t[i]) / std::abs(t[i]);
  return 100.0 * s / static_cast<double>(t.size());
}

UnitOutcome outcome(std::size_t online, std::size_t total) {
  UnitOutcome u;
  u.completed_jobs_online = online;
  u.completed_jobs_total = total;
  return u;
}

MetricsReport report(std::string tag, std::size_t offline, double downtime) {
  MetricsReport r;
  r.method_tag = std::move(tag);
  r.offline_servers = offline;
  r.downtime_seconds = downtime;
  r.servers_visited = 100;
  return r;
}

}  // namespace

TEST_CASE("mape examples") {
  CHECK(mape(std::vector<double>{10, 20}, std::vector<double>{11, 21}) == doctest::Approx(7.5));
  CHECK(mape(std::vector<double>{10, 20}, std::vector<double>{10, 20}) == 0.0);
  CHECK_THROWS_WITH(mape(std::vector<double>{0, 20}, std::vector<double>{1, 20}), "division by zero truth");
  CHECK_THROWS_AS(mape(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
}

TEST_CASE("mape matches a naive loop") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.1, 1e4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> t(1 + rng() % 300), p(t.size());
    for (auto& v : t) v = u(rng);
    for (auto& v : p) v = u(rng);
    const double want = loop_mape(t, p);
    CHECK(std::abs(mape(t, p) - want) <= 1e-12 * std::abs(want));
  }
}

TEST_CASE("opr examples") {
  const std::vector<double> t = {10, 20, 21};
  CHECK(opr(t, std::vector<double>{11, 21, 22}) == 1.0);
  CHECK(opr(t, std::vector<double>{9, 19, 20}) == 0.0);
  CHECK(opr(t, t) == 0.0);
  CHECK(opr(t, std::vector<double>{11, 19, 21}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("osr/dtr") {
  const auto ref = report("ACELA", 4, 10.0);
  const auto other = report("GBT_MSE", 12, 25.0);
  const auto r = osr_dtr(ref, other);
  CHECK(r.osr.value == 3.0);
  CHECK(r.dtr.value == 2.5);

  const auto self = osr_dtr(ref, ref);
  CHECK(self.osr.value == 1.0);
  CHECK(self.dtr.value == 1.0);

  const auto zero = osr_dtr(report("ACELA", 0, 0.0), other);
  CHECK_FALSE(zero.osr.value.has_value());
  CHECK(zero.osr.numerator == 12);
  CHECK(zero.osr.denominator == 0);
  CHECK(zero.osr.str().find("undefined (reference zero") == 0);
  CHECK(zero.osr.str().find("12") != std::string::npos);
}

TEST_CASE("jcr examples") {
  const std::vector<UnitOutcome> clean = {outcome(5, 5), outcome(3, 3)};
  CHECK(jcr(clean) == 100.0);
  // 2 completed on a returned server, 2 on an offline one.
  const std::vector<UnitOutcome> half = {outcome(2, 4)};
  CHECK(jcr(half) == 50.0);
  const std::vector<UnitOutcome> none = {outcome(0, 0)};
  CHECK_THROWS_WITH(jcr(none), doctest::Contains("undefined"));
}

TEST_CASE("metrics are invariant to job order") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1, 100);
  std::vector<double> t(200), p(200);
  for (auto& v : t) v = u(rng);
  for (auto& v : p) v = u(rng);
  std::vector<std::size_t> idx(t.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<double> ts, ps;
  for (auto i : idx) {
    ts.push_back(t[i]);
    ps.push_back(p[i]);
  }
  CHECK(mape(ts, ps) == doctest::Approx(mape(t, p)).epsilon(1e-12));
  CHECK(opr(ts, ps) == opr(t, p));

  std::vector<UnitOutcome> units = {outcome(1, 3), outcome(4, 4), outcome(0, 2)};
  const double before = jcr(units);
  std::reverse(units.begin(), units.end());
  CHECK(jcr(units) == before);
}

TEST_CASE("compare and render") {
  const std::vector<MetricsReport> reports = {report("ACELA", 2, 10), report("GBT_MSE", 6, 40), report("LR", 0, 0)};
  const auto cmp = compare(reports, "ACELA");
  REQUIRE(cmp.rows.size() == 3);
  CHECK(cmp.rows[0].ratios.osr.value == 1.0);
  CHECK(cmp.rows[1].ratios.osr.value == 3.0);
  CHECK(cmp.rows[1].ratios.dtr.value == 4.0);
  CHECK(cmp.rows[2].ratios.osr.value == 0.0);
  CHECK_THROWS_AS(compare(reports, "NOPE"), Error);

  const auto md = to_markdown(cmp);
  for (const char* s : {"OSR", "DTR", "JCR", "ACELA", "GBT_MSE", "LR"}) CHECK(md.find(s) != std::string::npos);
  const auto csv = to_csv(cmp);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("summarize aggregates unit outcomes") {
  UnitOutcome a = outcome(3, 4);
  a.offline_servers = {"s1"};
  a.downtime_seconds = 12;
  a.servers_launched = 5;
  a.unfinished_jobs = 2;
  UnitOutcome b = outcome(2, 2);
  b.servers_launched = 5;
  const std::vector<UnitOutcome> units = {a, b};
  const auto r = summarize("X", std::vector<double>{10, 20}, std::vector<double>{11, 21}, units);
  CHECK(r.mape == doctest::Approx(7.5));
  CHECK(r.opr == 1.0);
  CHECK(r.offline_servers == 1);
  CHECK(r.servers_visited == 10);
  CHECK(r.downtime_seconds == 12);
  CHECK(r.jobs_completed_online == 5);
  CHECK(r.jobs_completed_total == 6);
  CHECK(r.unfinished_jobs == 2);
  CHECK(*r.jcr == doctest::Approx(500.0 / 6.0));
  CHECK(r.offline_percent() == doctest::Approx(10.0));
}
