#pragma once

// Shared domain model: jobs, tasks, nodes and the 1..10 feature scale.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mrsim/error.hpp"

namespace mrsim {

using JobId = std::uint64_t;
using TaskId = std::uint64_t;
using NodeId = std::uint32_t;
using SimTime = double;

inline constexpr int kMinLevel = 1;
inline constexpr int kMaxLevel = 10;
inline constexpr int kLevels = kMaxLevel - kMinLevel + 1;

inline constexpr bool valid_level(int level) noexcept {
  return level >= kMinLevel && level <= kMaxLevel;
}

// Maps a fraction in [0,1] onto the 1..10 scale as max(1, ceil(10 f)).
// 1 is the minimal value of the underlying quantity, 10 the maximal one.
inline int discretize_fraction(double f) {
  if (!(f >= 0.0 && f <= 1.0)) {
    throw DomainError("discretize_fraction: fraction outside [0,1]: " +
                      std::to_string(f));
  }
  // f * 10 is rounded first so that e.g. 0.3 lands on 3, not 4.
  const double scaled = f * kMaxLevel;
  const double nearest = std::round(scaled);
  const double stepped =
      std::abs(scaled - nearest) < 1e-9 ? nearest : std::ceil(scaled);
  return std::max(kMinLevel, static_cast<int>(stepped));
}

struct JobFeatures {
  int cpu_avg = kMinLevel;
  int mem_avg = kMinLevel;
  int io_avg = kMinLevel;
  int net_avg = kMinLevel;

  std::array<int, 4> levels() const { return {cpu_avg, mem_avg, io_avg, net_avg}; }
  bool valid() const {
    return std::ranges::all_of(levels(), [](int l) { return valid_level(l); });
  }
  bool operator==(const JobFeatures&) const = default;
};

struct Task {
  TaskId task_id = 0;
  JobId job_id = 0;
  double work = 1.0;        // execution time at speed 1.0
  double cpu_demand = 0.0;  // fraction of a reference node's CPU
  double mem_demand = 0.0;  // fraction of a reference node's memory
  std::vector<NodeId> preferred_nodes;

  bool prefers(NodeId node) const {
    return std::ranges::find(preferred_nodes, node) != preferred_nodes.end();
  }
  bool operator==(const Task&) const = default;
};

struct Job {
  JobId job_id = 0;
  std::string user;
  std::string pool;  // fair-scheduler pool or capacity-scheduler queue
  int priority = 0;
  SimTime arrival_time = 0.0;
  JobFeatures features;
  std::vector<Task> tasks;

  bool operator==(const Job&) const = default;
};

struct NodeSpec {
  NodeId node_id = 0;
  double cpu_capacity = 1.0;
  double mem_capacity = 1.0;
  int slots = 1;
  SimTime heartbeat_interval = 1.0;
  SimTime heartbeat_phase = 0.0;

  bool operator==(const NodeSpec&) const = default;
};

struct RunningTask {
  JobId job_id = 0;
  TaskId task_id = 0;
  double remaining_work = 0.0;
  double cpu_demand = 0.0;
  double mem_demand = 0.0;
};

// A TaskTracker: static spec plus the tasks currently placed on it.
// The demand sums are caches of the sums over `running`.
struct NodeState {
  NodeSpec spec;
  std::vector<RunningTask> running;
  double cpu_demand_sum = 0.0;
  double mem_used = 0.0;

  int free_slots() const { return spec.slots - static_cast<int>(running.size()); }

  void recompute_sums() {
    cpu_demand_sum = 0.0;
    mem_used = 0.0;
    for (const auto& t : running) {
      cpu_demand_sum += t.cpu_demand;
      mem_used += t.mem_demand;
    }
  }

  bool sums_consistent(double tol = 1e-12) const {
    double cpu = 0.0, mem = 0.0;
    for (const auto& t : running) {
      cpu += t.cpu_demand;
      mem += t.mem_demand;
    }
    return std::abs(cpu - cpu_demand_sum) <= tol && std::abs(mem - mem_used) <= tol;
  }
};

// Largest capacities in the cluster; static node features are relative to these.
struct ClusterScale {
  double max_cpu_capacity = 1.0;
  double max_mem_capacity = 1.0;

  static ClusterScale of(const std::vector<NodeSpec>& nodes) {
    ClusterScale s{0.0, 0.0};
    for (const auto& n : nodes) {
      s.max_cpu_capacity = std::max(s.max_cpu_capacity, n.cpu_capacity);
      s.max_mem_capacity = std::max(s.max_mem_capacity, n.mem_capacity);
    }
    if (s.max_cpu_capacity <= 0.0) s.max_cpu_capacity = 1.0;
    if (s.max_mem_capacity <= 0.0) s.max_mem_capacity = 1.0;
    return s;
  }
};

inline double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

// [free_cpu, free_mem, cpu_capacity, mem_capacity] levels.
inline std::array<int, 4> node_features(const NodeState& state,
                                        const ClusterScale& scale) {
  const auto& s = state.spec;
  const double free_cpu = clamp_unit(1.0 - state.cpu_demand_sum / s.cpu_capacity);
  const double free_mem = clamp_unit(1.0 - state.mem_used / s.mem_capacity);
  return {discretize_fraction(free_cpu), discretize_fraction(free_mem),
          discretize_fraction(clamp_unit(s.cpu_capacity / scale.max_cpu_capacity)),
          discretize_fraction(clamp_unit(s.mem_capacity / scale.max_mem_capacity))};
}

// Classifier input: job levels followed by node levels.
struct FeatureVector {
  std::vector<int> levels;

  std::size_t size() const { return levels.size(); }
  bool operator==(const FeatureVector&) const = default;
};

inline constexpr std::size_t kJobFeatureCount = 4;
inline constexpr std::size_t kNodeFeatureCount = 4;
inline constexpr std::size_t kDefaultFeatureCount = kJobFeatureCount + kNodeFeatureCount;

inline FeatureVector make_features(const JobFeatures& job,
                                   const std::array<int, 4>& node) {
  FeatureVector fv;
  fv.levels.reserve(kDefaultFeatureCount);
  for (int l : job.levels()) fv.levels.push_back(l);
  for (int l : node) fv.levels.push_back(l);
  return fv;
}

struct Assignment {
  TaskId task_id = 0;
  JobId job_id = 0;
  NodeId node_id = 0;
  SimTime time = 0.0;
  FeatureVector features;  // snapshot taken when the decision was made
  bool local = false;
};

enum class Label { good, bad };

inline const char* to_string(Label l) { return l == Label::good ? "good" : "bad"; }

// Throws ConfigError naming the job when an invariant does not hold.
inline void validate_job(const Job& job) {
  const auto fail = [&](const std::string& why) {
    throw ConfigError("job " + std::to_string(job.job_id) + ": " + why);
  };
  if (job.tasks.empty()) fail("has no tasks");
  if (!(job.arrival_time >= 0.0) || !std::isfinite(job.arrival_time))
    fail("arrival_time must be >= 0");
  if (job.priority < 0) fail("priority must be >= 0");
  if (!job.features.valid()) fail("feature level outside 1..10");
  std::vector<TaskId> ids;
  for (const auto& t : job.tasks) {
    if (t.job_id != job.job_id) fail("task " + std::to_string(t.task_id) + " has foreign job_id");
    if (!(t.work > 0.0) || !std::isfinite(t.work))
      fail("task " + std::to_string(t.task_id) + " work must be > 0");
    if (!(t.cpu_demand >= 0.0 && t.cpu_demand <= 1.0) ||
        !(t.mem_demand >= 0.0 && t.mem_demand <= 1.0))
      fail("task " + std::to_string(t.task_id) + " demand outside [0,1]");
    ids.push_back(t.task_id);
  }
  std::ranges::sort(ids);
  if (std::ranges::adjacent_find(ids) != ids.end()) fail("duplicate task_id");
}

inline void validate_node(const NodeSpec& n) {
  const auto fail = [&](const std::string& why) {
    throw ConfigError("node " + std::to_string(n.node_id) + ": " + why);
  };
  if (!(n.cpu_capacity > 0.0)) fail("cpu_capacity must be > 0");
  if (!(n.mem_capacity > 0.0)) fail("mem_capacity must be > 0");
  if (n.slots < 1) fail("slots must be >= 1");
  if (!(n.heartbeat_interval > 0.0)) fail("heartbeat_interval must be > 0");
  if (!(n.heartbeat_phase >= 0.0 && n.heartbeat_phase < n.heartbeat_interval))
    fail("heartbeat_phase must lie in [0, heartbeat_interval)");
}

}  // namespace mrsim
