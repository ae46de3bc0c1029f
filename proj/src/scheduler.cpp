#include "acela/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "acela/error.hpp"

namespace acela {
namespace {

bool ranks_before(const JobCandidate& a, const JobCandidate& b) {
  if (a.priority != b.priority) return a.priority > b.priority;
  if (a.predicted != b.predicted) return a.predicted > b.predicted;
  return a.job_id < b.job_id;
}

template <typename Fits>
std::optional<std::size_t> select_where(std::span<const JobCandidate> pending, Fits fits) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (!fits(pending[i].predicted)) continue;
    if (!best || ranks_before(pending[i], pending[*best])) best = i;
  }
  return best;
}

// A server currently under maintenance.
struct ActiveServer {
  std::size_t plan = 0;
  double launch_time = 0.0;
  double elapsed = 0.0;    // true running time of finished jobs
  double committed = 0.0;  // predicted durations of started jobs
  std::vector<JobCandidate> pending;
  std::vector<double> pending_true;
  std::string current_job;
  double current_true = 0.0;
};

}  // namespace

void UnitConfig::validate() const {
  if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorKind::InvalidConfig, "beta must be in (0,1)");
  if (!(tau > 0.0) || !(tau <= unit_budget) || !std::isfinite(unit_budget))
    throw Error(ErrorKind::InvalidConfig, "require 0 < tau <= T");
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::ServerLaunched: return "ServerLaunched";
    case EventKind::JobStarted: return "JobStarted";
    case EventKind::JobFinished: return "JobFinished";
    case EventKind::ServerReturned: return "ServerReturned";
    case EventKind::ServerOffline: return "ServerOffline";
    case EventKind::UnitBudgetExpired: return "UnitBudgetExpired";
    case EventKind::ConcurrencyCapFloored: return "ConcurrencyCapFloored";
  }
  return "?";
}

std::optional<std::size_t> select_next_job(std::span<const JobCandidate> pending, double remaining_budget) {
  if (!(remaining_budget >= 0.0)) return std::nullopt;
  return select_where(pending, [&](double predicted) { return predicted <= remaining_budget; });
}

UnitOutcome simulate_unit(std::span<const ServerPlan> plans, const UnitConfig& config) {
  config.validate();
  if (plans.empty()) throw Error(ErrorKind::EmptyInput, "empty input: unit has no servers");
  for (const auto& p : plans)
    for (const auto& j : p.jobs)
      if (!(j.true_duration > 0.0) || !(j.predicted >= 0.0) || !std::isfinite(j.true_duration) ||
          !std::isfinite(j.predicted))
        throw Error(ErrorKind::InvalidRecord,
                    fmt::format("invalid record: job '{}' needs positive true and non-negative predicted duration",
                                j.job_id));

  const double tau = config.tau;
  const double unit_budget = config.unit_budget;
  const std::size_t total = plans.size();
  const auto raw_cap = static_cast<std::size_t>(std::floor(config.beta * static_cast<double>(total) + 1e-9));

  UnitOutcome out;
  out.concurrency_cap = std::max<std::size_t>(1, raw_cap);
  out.servers.resize(total);
  for (std::size_t i = 0; i < total; ++i) out.servers[i].server_id = plans[i].server_id;
  if (raw_cap == 0) out.trace.push_back({0.0, EventKind::ConcurrencyCapFloored, "", std::nullopt});

  auto emit = [&](double t, EventKind kind, std::size_t plan, std::optional<std::string> job = std::nullopt) {
    out.trace.push_back({t, kind, plans[plan].server_id, std::move(job)});
  };

  std::vector<ActiveServer> active;
  std::size_t next_launch = 0;
  bool budget_expired = false;

  // Starts the best fitting job; false if nothing fits or the unit budget is spent.
  auto try_start = [&](ActiveServer& s, double t) {
    if (t > unit_budget) return false;
    const double used = std::max(s.elapsed, s.committed);
    auto pick = select_where(s.pending, [&](double predicted) { return used + predicted <= tau; });
    if (!pick) return false;
    s.committed += s.pending[*pick].predicted;
    s.current_job = s.pending[*pick].job_id;
    s.current_true = s.pending_true[*pick];
    s.pending.erase(s.pending.begin() + static_cast<std::ptrdiff_t>(*pick));
    s.pending_true.erase(s.pending_true.begin() + static_cast<std::ptrdiff_t>(*pick));
    emit(t, EventKind::JobStarted, s.plan, s.current_job);
    return true;
  };

  auto finish_returned = [&](const ActiveServer& s, double t) {
    emit(t, EventKind::ServerReturned, s.plan);
    auto& r = out.servers[s.plan];
    r.status = ServerStatus::Returned;
    r.busy_time = s.elapsed;
    r.predicted_committed = s.committed;
    for (const auto& p : s.pending) r.unscheduled.push_back(p.job_id);
  };

  auto launch = [&](double t) {
    while (active.size() < out.concurrency_cap && next_launch < total && t <= unit_budget) {
      ActiveServer s;
      s.plan = next_launch++;
      s.launch_time = t;
      for (const auto& j : plans[s.plan].jobs) {
        s.pending.push_back({j.job_id, j.predicted, j.priority});
        s.pending_true.push_back(j.true_duration);
      }
      out.servers[s.plan].launch_time = t;
      ++out.servers_launched;
      emit(t, EventKind::ServerLaunched, s.plan);
      if (try_start(s, t))
        active.push_back(std::move(s));
      else
        finish_returned(s, t);
    }
  };

  launch(0.0);
  while (!active.empty()) {
    std::size_t who = 0;
    double when = 0.0;
    bool finishes = false;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const auto& s = active[a];
      const double done = s.elapsed + s.current_true;
      const bool fits = done <= tau;
      const double t = s.launch_time + (fits ? done : tau);
      if (a == 0 || t < when) {
        who = a;
        when = t;
        finishes = fits;
      }
    }
    if (when > unit_budget && !budget_expired && next_launch < total) {
      out.trace.push_back({unit_budget, EventKind::UnitBudgetExpired, "", std::nullopt});
      budget_expired = true;
    }

    ActiveServer& s = active[who];
    auto& r = out.servers[s.plan];
    bool leaves = true;
    if (finishes) {
      s.elapsed += s.current_true;
      r.completed.push_back(s.current_job);
      emit(when, EventKind::JobFinished, s.plan, s.current_job);
      if (try_start(s, when))
        leaves = false;
      else
        finish_returned(s, when);
    } else {
      emit(when, EventKind::ServerOffline, s.plan);
      r.status = ServerStatus::Offline;
      r.busy_time = tau;
      r.predicted_committed = s.committed;
      r.in_flight = s.current_job;
      r.downtime = s.elapsed + s.current_true - tau;
      r.unfinished.push_back(s.current_job);
      for (std::size_t p = 0; p < s.pending.size(); ++p) {
        r.unfinished.push_back(s.pending[p].job_id);
        if (config.downtime_mode == DowntimeMode::InFlightPlusPending) r.downtime += s.pending_true[p];
      }
    }
    if (leaves) active.erase(active.begin() + static_cast<std::ptrdiff_t>(who));
    launch(when);
  }

  if (next_launch < total && !budget_expired)
    out.trace.push_back({unit_budget, EventKind::UnitBudgetExpired, "", std::nullopt});
  for (std::size_t i = next_launch; i < total; ++i)
    for (const auto& j : plans[i].jobs) out.servers[i].unscheduled.push_back(j.job_id);

  for (const auto& r : out.servers) {
    out.completed_jobs_total += r.completed.size();
    out.unfinished_jobs += r.unfinished.size();
    out.unscheduled_jobs += r.unscheduled.size();
    if (r.status == ServerStatus::Returned) out.completed_jobs_online += r.completed.size();
    if (r.status == ServerStatus::Offline) {
      out.offline_servers.push_back(r.server_id);
      out.downtime_seconds += r.downtime;
    }
  }
  return out;
}

std::unordered_map<std::string, int> escalate_priorities(std::span<const std::string> unscheduled,
                                                         std::unordered_map<std::string, int> priorities) {
  for (const auto& id : unscheduled)
    if (!priorities.count(id)) throw Error(ErrorKind::UnknownJob, fmt::format("unknown job '{}'", id));
  for (const auto& id : unscheduled) ++priorities[id];
  return priorities;
}

std::vector<UnitOutcome> CampaignOutcome::all_unit_outcomes() const {
  std::vector<UnitOutcome> all;
  for (const auto& c : cycles) all.insert(all.end(), c.units.begin(), c.units.end());
  return all;
}

CampaignOutcome simulate_cycles(const std::vector<MaintenanceUnit>& units, const UnitConfig& config,
                                const DurationFn& predict, int n_cycles) {
  if (n_cycles < 1) throw Error(ErrorKind::InvalidConfig, "n_cycles must be >= 1");
  config.validate();

  CampaignOutcome campaign;
  std::vector<MaintenanceUnit> remaining = units;
  std::unordered_map<std::string, int> priorities;
  for (const auto& unit : units)
    for (const auto& server : unit)
      for (const auto& job : server.jobs) {
        if (!priorities.emplace(job.job_id, job.priority).second)
          throw Error(ErrorKind::InvalidRecord, fmt::format("invalid record: duplicate job_id '{}'", job.job_id));
        ++campaign.jobs_total;
      }

  for (int cycle = 0; cycle < n_cycles; ++cycle) {
    CycleOutcome co;
    std::vector<std::string> carried;
    for (std::size_t u = 0; u < remaining.size(); ++u) {
      auto& unit = remaining[u];
      std::vector<JobRecord> records;
      std::vector<ServerPlan> plans;
      for (const auto& server : unit) {
        if (server.jobs.empty()) continue;
        plans.push_back({server.server_id, {}});
        for (const auto& job : server.jobs) {
          records.push_back(job);
          records.back().priority = priorities.at(job.job_id);
        }
      }
      if (plans.empty()) {
        co.units.push_back(UnitOutcome{});
        co.units.back().concurrency_cap = 0;
        continue;
      }

      try {
        const auto predicted = predict(records);
        if (predicted.size() != records.size())
          throw Error(ErrorKind::ShapeError, "shape error: predictor returned the wrong number of durations");
        std::size_t k = 0;
        for (auto& plan : plans) {
          const auto& server = *std::find_if(unit.begin(), unit.end(),
                                             [&](const ServerJobs& s) { return s.server_id == plan.server_id; });
          for (std::size_t j = 0; j < server.jobs.size(); ++j, ++k)
            plan.jobs.push_back({records[k].job_id, predicted[k], records[k].priority, records[k].true_duration});
        }
        co.units.push_back(simulate_unit(plans, config));
      } catch (const Error& e) {
        throw Error(e.kind(), fmt::format("unit {}: {}", u, e.what()));
      }

      std::unordered_set<std::string> done;
      for (const auto& r : co.units.back().servers) {
        done.insert(r.completed.begin(), r.completed.end());
        carried.insert(carried.end(), r.unfinished.begin(), r.unfinished.end());
        carried.insert(carried.end(), r.unscheduled.begin(), r.unscheduled.end());
      }
      for (auto& server : unit) {
        auto& jobs = server.jobs;
        jobs.erase(std::remove_if(jobs.begin(), jobs.end(), [&](const JobRecord& j) { return done.count(j.job_id); }),
                   jobs.end());
      }
    }
    priorities = escalate_priorities(carried, std::move(priorities));
    std::size_t left = 0;
    for (const auto& unit : remaining)
      for (const auto& server : unit) left += server.jobs.size();
    co.jobs_remaining_after = left;
    campaign.cycles.push_back(std::move(co));
  }

  campaign.jobs_remaining = campaign.cycles.back().jobs_remaining_after;
  for (const auto& unit : remaining)
    for (const auto& server : unit)
      for (const auto& job : server.jobs) campaign.final_priorities[job.job_id] = priorities.at(job.job_id);
  return campaign;
}

std::vector<MaintenanceUnit> group_into_units(std::span<const JobRecord> jobs, std::size_t unit_size) {
  if (unit_size == 0) throw Error(ErrorKind::InvalidConfig, "unit_size must be positive");
  std::map<std::string, std::vector<JobRecord>> by_server;
  for (const auto& j : jobs) by_server[j.server_id].push_back(j);

  std::vector<MaintenanceUnit> units;
  for (auto& [server_id, server_jobs] : by_server) {
    if (units.empty() || units.back().size() == unit_size) units.emplace_back();
    units.back().push_back({server_id, std::move(server_jobs)});
  }
  return units;
}

std::string trace_to_jsonl(std::span<const Event> trace) {
  std::string out;
  for (const auto& e : trace) {
    nlohmann::ordered_json line;
    line["time"] = e.time;
    line["kind"] = to_string(e.kind);
    line["server_id"] = e.server_id;
    line["job_id"] = e.job_id ? nlohmann::ordered_json(*e.job_id) : nlohmann::ordered_json(nullptr);
    out += line.dump();
    out += '\n';
  }
  return out;
}

}  // namespace acela
