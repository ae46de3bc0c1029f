#pragma once

// Randomized unit instances and an independent checker for the scheduler
// invariants. Shared by the unit tests and the acceptance binary.

#include <fmt/format.h>

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "acela/scheduler.hpp"

namespace acela::testing {

struct UnitInstance {
  std::vector<ServerPlan> plans;
  UnitConfig config;
};

inline UnitInstance random_unit(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_servers(1, 30), n_jobs(0, 6), prio(0, 3);
  std::uniform_real_distribution<double> beta(0.01, 0.99), dur(1.0, 100.0), noise(0.5, 1.6);
  std::uniform_real_distribution<double> tau(20.0, 300.0), waves(1.0, 8.0);

  UnitInstance u;
  u.config.beta = beta(rng);
  u.config.tau = tau(rng);
  u.config.unit_budget = u.config.tau * waves(rng);
  u.config.downtime_mode = rng() % 2 ? DowntimeMode::InFlightPlusPending : DowntimeMode::InFlightOnly;
  const int m = n_servers(rng);
  int id = 0;
  for (int s = 0; s < m; ++s) {
    ServerPlan p;
    p.server_id = fmt::format("srv{:03}", s);
    const int k = n_jobs(rng);
    for (int j = 0; j < k; ++j) {
      PlannedJob job;
      job.job_id = fmt::format("job{:05}", id++);
      job.true_duration = dur(rng);
      job.predicted = job.true_duration * noise(rng);
      job.priority = prio(rng);
      p.jobs.push_back(job);
    }
    u.plans.push_back(std::move(p));
  }
  return u;
}

inline UnitInstance with_oracle_predictions(UnitInstance u) {
  for (auto& p : u.plans)
    for (auto& j : p.jobs) j.predicted = j.true_duration;
  return u;
}

/// Returns a description of every violated invariant; empty when all hold.
inline std::vector<std::string> check_unit_invariants(const UnitInstance& u, const UnitOutcome& out) {
  std::vector<std::string> bad;
  const double tau = u.config.tau;
  const double eps = 1e-9 * (1.0 + tau);
  const std::size_t m = u.plans.size();
  const auto floor_cap = static_cast<std::size_t>(u.config.beta * static_cast<double>(m) + 1e-9);
  const std::size_t cap = std::max<std::size_t>(1, floor_cap);

  if (out.concurrency_cap != cap) bad.push_back(fmt::format("cap {} != {}", out.concurrency_cap, cap));

  // Concurrency cap, replayed from the trace.
  std::set<std::string> under;
  std::map<std::string, double> predicted_started;
  std::map<std::string, double> predicted_of;
  for (const auto& p : u.plans)
    for (const auto& j : p.jobs) predicted_of[j.job_id] = j.predicted;
  double last_time = 0.0;
  for (const auto& e : out.trace) {
    if (e.time + 1e-12 < last_time) bad.push_back("trace time decreased");
    last_time = e.time;
    switch (e.kind) {
      case EventKind::ServerLaunched:
        if (e.time > u.config.unit_budget + eps) bad.push_back("launch after T");
        under.insert(e.server_id);
        break;
      case EventKind::ServerReturned:
      case EventKind::ServerOffline:
        under.erase(e.server_id);
        break;
      case EventKind::JobStarted:
        if (e.time > u.config.unit_budget + eps) bad.push_back("job started after T");
        predicted_started[e.server_id] += predicted_of.at(*e.job_id);
        break;
      default:
        break;
    }
    if (under.size() > cap) bad.push_back(fmt::format("{} servers under maintenance, cap {}", under.size(), cap));
  }

  std::size_t completed = 0, unfinished = 0, unscheduled = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& plan = u.plans[i];
    const auto& r = out.servers.at(i);
    // Predicted-fit soundness.
    if (predicted_started[plan.server_id] > tau + eps)
      bad.push_back(fmt::format("{} started {} predicted seconds > tau", plan.server_id, predicted_started[plan.server_id]));
    // Budget soundness and mutual exclusivity.
    switch (r.status) {
      case ServerStatus::Returned:
        if (r.busy_time > tau + eps) bad.push_back(plan.server_id + " returned after tau");
        if (!r.unfinished.empty() || r.in_flight) bad.push_back(plan.server_id + " returned with unfinished jobs");
        break;
      case ServerStatus::Offline:
        if (std::abs(r.busy_time - tau) > eps) bad.push_back(plan.server_id + " offline busy time != tau");
        if (!r.in_flight || !r.unscheduled.empty()) bad.push_back(plan.server_id + " offline bookkeeping");
        if (!(r.downtime > 0.0)) bad.push_back(plan.server_id + " offline without downtime");
        break;
      case ServerStatus::NotLaunched:
        if (!r.completed.empty() || !r.unfinished.empty()) bad.push_back(plan.server_id + " never launched but ran jobs");
        break;
    }
    // Conservation, per server: the three lists partition the plan.
    std::multiset<std::string> seen(r.completed.begin(), r.completed.end());
    seen.insert(r.unfinished.begin(), r.unfinished.end());
    seen.insert(r.unscheduled.begin(), r.unscheduled.end());
    std::multiset<std::string> expected;
    for (const auto& j : plan.jobs) expected.insert(j.job_id);
    if (seen != expected) bad.push_back(plan.server_id + " job lists do not partition the plan");
    completed += r.completed.size();
    unfinished += r.unfinished.size();
    unscheduled += r.unscheduled.size();
  }
  std::size_t total = 0;
  for (const auto& p : u.plans) total += p.jobs.size();
  if (out.completed_jobs_total + out.unfinished_jobs + out.unscheduled_jobs != total)
    bad.push_back("unit conservation");
  if (completed != out.completed_jobs_total || unfinished != out.unfinished_jobs || unscheduled != out.unscheduled_jobs)
    bad.push_back("unit totals disagree with per-server results");
  return bad;
}

/// Runs every property on one instance: invariants, determinism, oracle dominance.
inline std::vector<std::string> check_unit_properties(const UnitInstance& u) {
  const auto a = simulate_unit(u.plans, u.config);
  auto bad = check_unit_invariants(u, a);
  const auto b = simulate_unit(u.plans, u.config);
  if (trace_to_jsonl(a.trace) != trace_to_jsonl(b.trace)) bad.push_back("non-deterministic trace");

  const auto oracle = with_oracle_predictions(u);
  const auto o = simulate_unit(oracle.plans, oracle.config);
  for (auto& msg : check_unit_invariants(oracle, o)) bad.push_back("oracle: " + msg);
  if (!o.offline_servers.empty()) bad.push_back("oracle predictions left servers offline");
  return bad;
}

}  // namespace acela::testing
