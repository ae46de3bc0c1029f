#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "acela/domain.hpp"

namespace acela {

struct PlannedJob {
  std::string job_id;
  double predicted = 0.0;      // seconds
  int priority = 0;
  double true_duration = 0.0;  // seconds
};

/// Jobs fixed to one server for this cycle.
struct ServerPlan {
  std::string server_id;
  std::vector<PlannedJob> jobs;
};

/// What to count as downtime for a server taken offline.
enum class DowntimeMode {
  InFlightOnly,        // true finish of the running job minus tau
  InFlightPlusPending  // ... plus the true durations of its never-started jobs
};

struct UnitConfig {
  double beta = 0.2;   // max fraction of servers under maintenance
  double tau = 3600;   // per-server budget, seconds
  double unit_budget = 18000;  // T, seconds
  DowntimeMode downtime_mode = DowntimeMode::InFlightPlusPending;

  /// Throws Error(InvalidConfig) unless 0 < beta < 1 and 0 < tau <= T.
  void validate() const;
};

enum class EventKind {
  ServerLaunched,
  JobStarted,
  JobFinished,
  ServerReturned,
  ServerOffline,
  UnitBudgetExpired,
  ConcurrencyCapFloored,
};

std::string_view to_string(EventKind kind);

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::ServerLaunched;
  std::string server_id;
  std::optional<std::string> job_id;
};

enum class ServerStatus { Returned, Offline, NotLaunched };

struct ServerResult {
  std::string server_id;
  ServerStatus status = ServerStatus::NotLaunched;
  double launch_time = 0.0;
  double busy_time = 0.0;  // true running time until return / removal
  double predicted_committed = 0.0;  // sum of predicted durations of started jobs
  double downtime = 0.0;
  std::vector<std::string> completed;    // finished before tau
  std::vector<std::string> unfinished;   // offline servers: in-flight + never started
  std::vector<std::string> unscheduled;  // returned / never-launched servers: not started
  std::optional<std::string> in_flight;  // job running when taken offline
};

struct UnitOutcome {
  std::size_t concurrency_cap = 1;
  std::size_t completed_jobs_online = 0;  // on servers returned to production
  std::size_t completed_jobs_total = 0;   // k of the unit procedure
  std::vector<std::string> offline_servers;
  double downtime_seconds = 0.0;
  std::size_t unfinished_jobs = 0;
  std::size_t unscheduled_jobs = 0;
  std::size_t servers_launched = 0;
  std::vector<ServerResult> servers;  // plan order
  std::vector<Event> trace;
};

struct JobCandidate {
  std::string job_id;
  double predicted = 0.0;
  int priority = 0;
};

/// Highest priority among jobs whose prediction fits the remaining budget; ties
/// go to the longest prediction, then the lowest job id. Index into `pending`.
std::optional<std::size_t> select_next_job(std::span<const JobCandidate> pending, double remaining_budget);

/// Event-driven simulation of one maintenance unit under the beta/tau/T rules.
UnitOutcome simulate_unit(std::span<const ServerPlan> plans, const UnitConfig& config);

/// Adds 1 to the priority of every listed job. Throws Error(UnknownJob).
std::unordered_map<std::string, int> escalate_priorities(std::span<const std::string> unscheduled,
                                                         std::unordered_map<std::string, int> priorities);

/// Jobs of one server, as records so durations can be re-predicted every cycle.
struct ServerJobs {
  std::string server_id;
  std::vector<JobRecord> jobs;
};
using MaintenanceUnit = std::vector<ServerJobs>;

/// Batch duration predictor: one prediction per record, same order.
using DurationFn = std::function<std::vector<double>(std::span<const JobRecord>)>;

struct CycleOutcome {
  std::vector<UnitOutcome> units;  // units with no remaining jobs are skipped (empty outcome)
  std::size_t jobs_remaining_after = 0;
};

struct CampaignOutcome {
  std::vector<CycleOutcome> cycles;
  std::size_t jobs_total = 0;
  std::size_t jobs_remaining = 0;
  std::unordered_map<std::string, int> final_priorities;  // carried-over jobs

  std::vector<UnitOutcome> all_unit_outcomes() const;
};

/// Repeats maintenance cycles: predict, simulate every unit, drop completed
/// jobs, escalate the priority of everything carried over.
CampaignOutcome simulate_cycles(const std::vector<MaintenanceUnit>& units, const UnitConfig& config,
                                const DurationFn& predict, int n_cycles);

/// Groups records by server (sorted by server id) into units of `unit_size` servers.
std::vector<MaintenanceUnit> group_into_units(std::span<const JobRecord> jobs, std::size_t unit_size);

/// One JSON object per line: time, kind, server_id, job_id (null when absent).
std::string trace_to_jsonl(std::span<const Event> trace);

}  // namespace acela
