#pragma once

// Glue between configuration documents, the engine and reports: single
// runs with a filled-in report header, and scheduler x seed grids that may
// execute on several threads.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "mrsim/cluster.hpp"
#include "mrsim/engine.hpp"
#include "mrsim/events.hpp"
#include "mrsim/report.hpp"
#include "mrsim/workload.hpp"

namespace mrsim {

// 64-bit FNV-1a, hex encoded. Stable across platforms and runs.
inline std::string digest(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = hex[h & 0xf];
  return out;
}

inline std::string workload_digest(const std::vector<Job>& jobs) { return digest(trace_text(jobs)); }
inline std::string cluster_digest(const std::vector<NodeSpec>& nodes) {
  ClusterConfig c;
  c.nodes = nodes;
  auto j = to_json(c);
  return digest(j["nodes"].dump());
}

struct RunOutput {
  SimReport report;
  EventLog log;
  std::vector<Assignment> assignments;
};

inline RunConfig make_run_config(const ClusterConfig& cluster, SchedulerConfig scheduler,
                                 std::uint64_t seed, std::optional<SimTime> horizon = {}) {
  RunConfig cfg;
  cfg.nodes = cluster.nodes;
  if (scheduler.fair_pools.pools.empty()) scheduler.fair_pools = cluster.fair_pools;
  if (!scheduler.capacity_queues) scheduler.capacity_queues = cluster.capacity_queues;
  cfg.scheduler = std::move(scheduler);
  cfg.overload_rule = cluster.overload_rule;
  cfg.seed = seed;
  cfg.horizon = horizon;
  return cfg;
}

inline RunOutput simulate(const RunConfig& config, std::vector<Job> workload) {
  RunHeader h;
  h.scheduler = config.scheduler.name;
  h.seed = config.seed;
  h.alpha = config.scheduler.initial_classifier ? config.scheduler.initial_classifier->alpha()
                                                : config.scheduler.alpha;
  h.utility = to_string(config.scheduler.utility.kind);
  h.all_bad = to_string(config.scheduler.all_bad);
  h.overload_rule = config.overload_rule.to_string();
  h.workload_digest = workload_digest(workload);
  h.cluster_digest = cluster_digest(config.nodes);
  h.horizon = config.horizon;

  RunResult res = run_simulation(config, std::move(workload));
  RunOutput out;
  out.report = summarize(res.log);
  out.report.header = std::move(h);
  out.report.classifier = std::move(res.classifier);
  out.log = std::move(res.log);
  out.assignments = std::move(res.assignments);
  return out;
}

// Either one fixed workload or a generator spec reseeded per run.
using WorkloadSource = std::variant<std::vector<Job>, WorkloadSpec>;

struct ExperimentPlan {
  ClusterConfig cluster;
  SchedulerConfig scheduler;  // name is replaced per row
  std::vector<std::string> schedulers;
  std::vector<std::uint64_t> seeds;
  WorkloadSource workload;
  std::optional<SimTime> horizon;
  unsigned threads = 1;
  bool keep_logs = false;
};

struct ExperimentResult {
  Comparison comparison;
  std::vector<SchedulerRuns> runs;
  std::vector<std::vector<std::string>> logs;  // [scheduler][seed] when keep_logs
};

inline std::vector<Job> workload_for(const WorkloadSource& src, std::uint64_t seed) {
  if (const auto* fixed = std::get_if<std::vector<Job>>(&src)) return *fixed;
  WorkloadSpec spec = std::get<WorkloadSpec>(src);
  spec.seed = seed;
  return generate(spec);
}

// Runs every (scheduler, seed) pair. Runs share no mutable state, so the
// result does not depend on `threads`.
inline ExperimentResult run_experiment(const ExperimentPlan& plan) {
  if (plan.schedulers.empty()) throw ConfigError("experiment needs at least one scheduler");
  if (plan.seeds.empty()) throw ConfigError("experiment needs at least one seed");
  for (const auto& s : plan.schedulers)
    if (std::ranges::find(scheduler_names(), s) == scheduler_names().end()) {
      SchedulerConfig probe;
      probe.name = s;
      make_scheduler(probe, plan.cluster.nodes, {});  // throws listing valid names
    }

  const std::size_t n_sched = plan.schedulers.size();
  const std::size_t n_seed = plan.seeds.size();
  std::vector<std::optional<RunOutput>> outputs(n_sched * n_seed);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  const auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < outputs.size();) {
      try {
        const std::size_t si = k / n_seed, ki = k % n_seed;
        SchedulerConfig sc = plan.scheduler;
        sc.name = plan.schedulers[si];
        const auto cfg = make_run_config(plan.cluster, sc, plan.seeds[ki], plan.horizon);
        outputs[k] = simulate(cfg, workload_for(plan.workload, plan.seeds[ki]));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(plan.threads, outputs.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult res;
  for (std::size_t si = 0; si < n_sched; ++si) {
    SchedulerRuns sr;
    sr.scheduler = plan.schedulers[si];
    std::vector<std::string> logs;
    for (std::size_t ki = 0; ki < n_seed; ++ki) {
      auto& o = *outputs[si * n_seed + ki];
      if (plan.keep_logs) logs.push_back(event_log_text(o.log));
      sr.reports.push_back(std::move(o.report));
    }
    res.runs.push_back(std::move(sr));
    if (plan.keep_logs) res.logs.push_back(std::move(logs));
  }
  res.comparison = compare(res.runs);
  return res;
}

}  // namespace mrsim
