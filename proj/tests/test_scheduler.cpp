#include <doctest.h>

#include <nlohmann/json.hpp>

#include "acela/error.hpp"
#include "acela/scheduler.hpp"
#include "scheduler_properties.hpp"
#include "test_util.hpp"

using namespace acela;
using acela::testing::make_record;

namespace {

std::vector<JobCandidate> candidates(std::initializer_list<JobCandidate> c) { return c; }

ServerPlan table1_plan(double da, double db, double dc) {
  return ServerPlan{"s0", {{"A", da, 0, 10}, {"B", db, 0, 20}, {"C", dc, 0, 21}}};
}

UnitConfig table1_config() { return UnitConfig{.beta = 0.5, .tau = 50, .unit_budget = 50}; }

}  // namespace

TEST_CASE("select_next_job examples") {
  const auto all_fit = candidates({{"A", 9, 1}, {"B", 19, 1}, {"C", 20, 1}});
  CHECK(select_next_job(all_fit, 50) == 2u);

  const auto prio = candidates({{"A", 40, 5}, {"B", 10, 1}});
  CHECK(select_next_job(prio, 30) == 1u);

  const auto none = candidates({{"A", 40, 5}, {"B", 31, 1}});
  CHECK_FALSE(select_next_job(none, 30).has_value());
  CHECK_FALSE(select_next_job({}, 30).has_value());
}

TEST_CASE("select_next_job breaks full ties by lowest id") {
  const auto tied = candidates({{"Z", 10, 2}, {"M", 10, 2}, {"Q", 10, 2}});
  CHECK(select_next_job(tied, 10) == 1u);
}

TEST_CASE("three-job example: underprediction takes the server offline") {
  const std::vector<ServerPlan> plans = {table1_plan(9, 19, 20)};
  const auto out = simulate_unit(plans, table1_config());
  REQUIRE(out.servers.size() == 1);
  CHECK(out.servers[0].status == ServerStatus::Offline);
  CHECK(out.completed_jobs_total == 2);
  CHECK(out.completed_jobs_online == 0);
  CHECK(out.offline_servers == std::vector<std::string>{"s0"});
  CHECK(out.downtime_seconds == doctest::Approx(1.0));
  CHECK(out.servers[0].in_flight == std::optional<std::string>("A"));
  CHECK(out.unfinished_jobs == 1);
}

TEST_CASE("three-job example: overprediction returns the server") {
  const std::vector<ServerPlan> plans = {table1_plan(11, 21, 22)};
  const auto out = simulate_unit(plans, table1_config());
  CHECK(out.servers[0].status == ServerStatus::Returned);
  CHECK(out.completed_jobs_online == 2);
  CHECK(out.offline_servers.empty());
  CHECK(out.downtime_seconds == 0.0);
  CHECK(out.servers[0].unscheduled == std::vector<std::string>{"A"});
}

TEST_CASE("three-job example: ground truth returns the server with two jobs") {
  const std::vector<ServerPlan> plans = {table1_plan(10, 20, 21)};
  const auto out = simulate_unit(plans, table1_config());
  CHECK(out.servers[0].status == ServerStatus::Returned);
  CHECK(out.completed_jobs_online == 2);
  CHECK(out.unscheduled_jobs == 1);
}

TEST_CASE("perfect predictions never take a server offline") {
  std::vector<ServerPlan> plans;
  for (int s = 0; s < 5; ++s)
    plans.push_back({"s" + std::to_string(s), {{"a" + std::to_string(s), 30, 0, 30}, {"b" + std::to_string(s), 20, 0, 20}}});
  const auto out = simulate_unit(plans, UnitConfig{.beta = 0.4, .tau = 50, .unit_budget = 500});
  CHECK(out.offline_servers.empty());
  CHECK(out.downtime_seconds == 0.0);
  CHECK(out.completed_jobs_total == 10);
  CHECK(out.concurrency_cap == 2);
}

TEST_CASE("concurrency cap is floored at one with an event") {
  const std::vector<ServerPlan> plans = {table1_plan(10, 20, 21), {"s1", {{"D", 5, 0, 5}}}};
  const auto out = simulate_unit(plans, UnitConfig{.beta = 0.1, .tau = 50, .unit_budget = 500});
  CHECK(out.concurrency_cap == 1);
  REQUIRE_FALSE(out.trace.empty());
  CHECK(out.trace.front().kind == EventKind::ConcurrencyCapFloored);
  // Serial launches: s1 starts when s0 returns at 41.
  CHECK(out.servers[1].launch_time == doctest::Approx(41.0));
}

TEST_CASE("servers not launched before T stay unscheduled") {
  std::vector<ServerPlan> plans;
  for (int s = 0; s < 4; ++s) plans.push_back({"s" + std::to_string(s), {{"j" + std::to_string(s), 40, 0, 40}}});
  const auto out = simulate_unit(plans, UnitConfig{.beta = 0.25, .tau = 50, .unit_budget = 50});
  CHECK(out.servers_launched == 2);  // t=0 and t=40
  CHECK(out.servers[2].status == ServerStatus::NotLaunched);
  CHECK(out.unscheduled_jobs == 2);
  bool expired = false;
  for (const auto& e : out.trace) expired |= e.kind == EventKind::UnitBudgetExpired;
  CHECK(expired);
}

TEST_CASE("downtime mode controls pending-job accounting") {
  const std::vector<ServerPlan> plans = {{"s0", {{"A", 10, 0, 45}, {"B", 10, 0, 7}}}};
  auto cfg = UnitConfig{.beta = 0.5, .tau = 40, .unit_budget = 40};
  // A (tie on predicted, lowest id) runs 45 s, overrunning by 5; B never starts.
  cfg.downtime_mode = DowntimeMode::InFlightOnly;
  CHECK(simulate_unit(plans, cfg).downtime_seconds == doctest::Approx(5.0));
  cfg.downtime_mode = DowntimeMode::InFlightPlusPending;
  CHECK(simulate_unit(plans, cfg).downtime_seconds == doctest::Approx(12.0));
}

TEST_CASE("simulate_unit error paths") {
  CHECK_THROWS_AS(simulate_unit({}, table1_config()), Error);
  const std::vector<ServerPlan> plans = {table1_plan(9, 19, 20)};
  CHECK_THROWS_AS(simulate_unit(plans, UnitConfig{.beta = 0.5, .tau = 60, .unit_budget = 50}), Error);
  CHECK_THROWS_AS(simulate_unit(plans, UnitConfig{.beta = 1.5, .tau = 50, .unit_budget = 50}), Error);
}

TEST_CASE("random units satisfy the scheduler invariants") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 200; ++i) {
    const auto u = acela::testing::random_unit(rng);
    const auto bad = acela::testing::check_unit_properties(u);
    INFO("instance " << i << ": " << (bad.empty() ? "" : bad.front()));
    CHECK(bad.empty());
  }
}

TEST_CASE("escalate_priorities") {
  const std::unordered_map<std::string, int> base = {{"a", 0}, {"b", 3}};
  CHECK(escalate_priorities({}, base) == base);
  const std::vector<std::string> once = {"a"};
  const auto twice = escalate_priorities(once, escalate_priorities(once, base));
  CHECK(twice.at("a") == 2);
  CHECK(twice.at("b") == 3);
  const std::vector<std::string> unknown = {"zz"};
  CHECK_THROWS_WITH(escalate_priorities(unknown, base), "unknown job 'zz'");
}

TEST_CASE("escalated job outranks a fresh job next cycle") {
  const std::vector<ServerPlan> cycle1 = {{"s0", {{"X", 30, 0, 30}, {"Y", 30, 0, 30}}}};
  const auto out = simulate_unit(cycle1, UnitConfig{.beta = 0.5, .tau = 50, .unit_budget = 50});
  REQUIRE(out.servers[0].unscheduled == std::vector<std::string>{"Y"});
  const auto prio = escalate_priorities(out.servers[0].unscheduled, {{"X", 0}, {"Y", 0}, {"Z", 0}});
  const auto next = candidates({{"Y", 30, prio.at("Y")}, {"Z", 40, prio.at("Z")}});
  CHECK(select_next_job(next, 50) == 0u);
}

namespace {

std::vector<MaintenanceUnit> table1_units() {
  return {MaintenanceUnit{ServerJobs{"s0", {make_record("A", 1, 10), make_record("B", 1, 20), make_record("C", 1, 21)}}}};
}

DurationFn shifted(double delta) {
  return [delta](std::span<const JobRecord> jobs) {
    std::vector<double> out;
    for (const auto& j : jobs) out.push_back(j.true_duration + delta);
    return out;
  };
}

}  // namespace

TEST_CASE("one cycle equals simulate_unit") {
  const auto campaign = simulate_cycles(table1_units(), table1_config(), shifted(-1), 1);
  REQUIRE(campaign.cycles.size() == 1);
  const auto direct = simulate_unit(std::vector<ServerPlan>{table1_plan(9, 19, 20)}, table1_config());
  const auto& u = campaign.cycles[0].units.at(0);
  CHECK(trace_to_jsonl(u.trace) == trace_to_jsonl(direct.trace));
  CHECK(u.downtime_seconds == direct.downtime_seconds);
  CHECK(campaign.jobs_total == 3);
  CHECK(campaign.jobs_remaining == 1);
}

TEST_CASE("overpredictor finishes every job by the second cycle") {
  const auto campaign = simulate_cycles(table1_units(), table1_config(), shifted(+1), 3);
  REQUIRE(campaign.cycles.size() == 3);
  CHECK(campaign.cycles[0].units[0].completed_jobs_online == 2);
  CHECK(campaign.cycles[0].jobs_remaining_after == 1);
  CHECK(campaign.cycles[1].units[0].completed_jobs_online == 1);
  CHECK(campaign.cycles[1].jobs_remaining_after == 0);
  CHECK(campaign.cycles[2].units[0].completed_jobs_total == 0);
  CHECK(campaign.jobs_remaining == 0);
  CHECK(campaign.all_unit_outcomes().size() == 3);
}

TEST_CASE("oracle predictions drain every job") {
  std::vector<JobRecord> recs;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(5, 45);
  for (int i = 0; i < 60; ++i)
    recs.push_back(make_record("j" + std::to_string(i), 1, d(rng), FirmwareType::BIOS, "s" + std::to_string(i % 12)));
  const auto units = group_into_units(recs, 4);
  CHECK(units.size() == 3);
  const auto campaign = simulate_cycles(units, UnitConfig{.beta = 0.5, .tau = 60, .unit_budget = 240}, shifted(0), 30);
  CHECK(campaign.jobs_remaining == 0);
  for (const auto& u : campaign.all_unit_outcomes()) CHECK(u.offline_servers.empty());
}

TEST_CASE("simulate_cycles rejects non-positive cycle counts") {
  CHECK_THROWS_AS(simulate_cycles(table1_units(), table1_config(), shifted(0), 0), Error);
}

TEST_CASE("trace JSONL has one object per event") {
  const auto out = simulate_unit(std::vector<ServerPlan>{table1_plan(9, 19, 20)}, table1_config());
  const auto text = trace_to_jsonl(out.trace);
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("time"));
    CHECK(j.contains("kind"));
    CHECK(j.contains("server_id"));
    CHECK(j.contains("job_id"));
    ++n;
  }
  CHECK(n == out.trace.size());
  // One server with beta 0.5 floors the cap, so that event comes first.
  CHECK(text.rfind(R"({"time":0.0,"kind":"ConcurrencyCapFloored","server_id":"","job_id":null})"
                   "\n"
                   R"({"time":0.0,"kind":"ServerLaunched","server_id":"s0","job_id":null})",
                   0) == 0);
}
