#pragma once

// Scheduling policies. Each select function is a pure decision over the
// queued jobs and the requesting node; the Scheduler classes adapt them to
// the engine's heartbeat contract.

#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mrsim/classifier.hpp"
#include "mrsim/core.hpp"
#include "mrsim/error.hpp"

namespace mrsim {

// An arrived, unfinished job as seen by a scheduler.
struct QueuedJob {
  const Job* job = nullptr;
  std::vector<std::size_t> pending;  // indices into job->tasks, ascending task_id
  int running = 0;

  bool has_pending() const { return !pending.empty(); }
};

struct Choice {
  std::size_t job_index = 0;   // position in the queued-job span
  std::size_t task_index = 0;  // position in job->tasks
  JobId job_id = 0;
  TaskId task_id = 0;
};

// Data-local pending task with the lowest id, else the lowest-id pending task.
inline std::optional<std::size_t> pick_task(const QueuedJob& q, NodeId node) {
  if (q.pending.empty()) return std::nullopt;
  for (std::size_t idx : q.pending)
    if (q.job->tasks[idx].prefers(node)) return idx;
  return q.pending.front();
}

inline std::optional<Choice> choose_from(std::span<const QueuedJob> jobs,
                                         std::size_t job_index, NodeId node) {
  const auto task = pick_task(jobs[job_index], node);
  if (!task) return std::nullopt;
  const Job& j = *jobs[job_index].job;
  return Choice{job_index, *task, j.job_id, j.tasks[*task].task_id};
}

// FIFO ordering: priority descending, arrival ascending, job_id ascending.
inline bool fifo_before(const Job& a, const Job& b) {
  if (a.priority != b.priority) return a.priority > b.priority;
  if (a.arrival_time != b.arrival_time) return a.arrival_time < b.arrival_time;
  return a.job_id < b.job_id;
}

// Arrival ascending, then job_id.
inline bool arrival_before(const Job& a, const Job& b) {
  if (a.arrival_time != b.arrival_time) return a.arrival_time < b.arrival_time;
  return a.job_id < b.job_id;
}

template <class Before, class Eligible>
std::optional<std::size_t> first_job(std::span<const QueuedJob> jobs, Before before,
                                     Eligible eligible) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!jobs[i].has_pending() || !eligible(jobs[i])) continue;
    if (!best || before(*jobs[i].job, *jobs[*best].job)) best = i;
  }
  return best;
}

inline std::optional<Choice> fifo_select(std::span<const QueuedJob> jobs,
                                         const NodeState& node) {
  if (node.free_slots() < 1) return std::nullopt;
  const auto best = first_job(jobs, fifo_before, [](const QueuedJob&) { return true; });
  if (!best) return std::nullopt;
  return choose_from(jobs, *best, node.spec.node_id);
}

// ---------------------------------------------------------------- fair

struct PoolParams {
  int min_share = 0;
  double weight = 1.0;
  bool operator==(const PoolParams&) const = default;
};

struct FairPoolConfig {
  std::map<std::string, PoolParams> pools;

  // Pools absent from the config share nothing and weigh 1.
  PoolParams params(const std::string& pool) const {
    const auto it = pools.find(pool);
    return it == pools.end() ? PoolParams{} : it->second;
  }

  void validate(int total_slots) const {
    long long sum = 0;
    for (const auto& [name, p] : pools) {
      if (p.min_share < 0) throw ConfigError("pool " + name + ": min_share must be >= 0");
      if (!(p.weight > 0.0)) throw ConfigError("pool " + name + ": weight must be > 0");
      sum += p.min_share;
    }
    if (sum > total_slots)
      throw ConfigError("sum of pool min shares (" + std::to_string(sum) +
                        ") exceeds cluster slots (" + std::to_string(total_slots) + ")");
  }
  bool operator==(const FairPoolConfig&) const = default;
};

template <class Key>
std::map<Key, int> running_by(std::span<const QueuedJob> jobs, Key (*key)(const Job&)) {
  std::map<Key, int> out;
  for (const auto& q : jobs) out[key(*q.job)] += q.running;
  return out;
}

inline std::string pool_of(const Job& j) { return j.pool; }
inline std::pair<std::string, std::string> queue_user_of(const Job& j) {
  return {j.pool, j.user};
}

inline std::map<std::string, int> running_per_pool(std::span<const QueuedJob> jobs) {
  return running_by<std::string>(jobs, &pool_of);
}

inline std::map<std::pair<std::string, std::string>, int> running_per_user(
    std::span<const QueuedJob> jobs) {
  return running_by<std::pair<std::string, std::string>>(jobs, &queue_user_of);
}

inline int lookup(const std::map<std::string, int>& m, const std::string& k) {
  const auto it = m.find(k);
  return it == m.end() ? 0 : it->second;
}

// Pool choice: the largest min-share deficit first; otherwise the smallest
// running/weight. Ties go to fewer running tasks, then pool name. Jobs
// inside the pool are served in arrival order.
inline std::optional<Choice> fair_select(std::span<const QueuedJob> jobs,
                                         const NodeState& node, const FairPoolConfig& pools,
                                         const std::map<std::string, int>& running) {
  if (node.free_slots() < 1) return std::nullopt;
  std::map<std::string, bool> with_pending;
  for (const auto& q : jobs)
    if (q.has_pending()) with_pending[q.job->pool] = true;
  if (with_pending.empty()) return std::nullopt;

  std::optional<std::string> chosen;
  int best_deficit = 0;
  double best_ratio = 0.0;
  int best_running = 0;
  bool best_under = false;
  for (const auto& [name, _] : with_pending) {  // name ascending
    const auto p = pools.params(name);
    const int r = lookup(running, name);
    const bool under = r < p.min_share;
    const int deficit = p.min_share - r;
    const double ratio = r / p.weight;
    bool better = false;
    if (!chosen) {
      better = true;
    } else if (under != best_under) {
      better = under;
    } else if (under) {
      better = deficit > best_deficit || (deficit == best_deficit && r < best_running);
    } else {
      better = ratio < best_ratio || (ratio == best_ratio && r < best_running);
    }
    if (better) {
      chosen = name;
      best_under = under;
      best_deficit = deficit;
      best_ratio = ratio;
      best_running = r;
    }
  }
  const auto best = first_job(jobs, arrival_before,
                              [&](const QueuedJob& q) { return q.job->pool == *chosen; });
  return choose_from(jobs, *best, node.spec.node_id);
}

// ------------------------------------------------------------ capacity

struct QueueParams {
  double capacity = 1.0;
  int user_task_limit = 1;
  bool operator==(const QueueParams&) const = default;
};

struct CapacityQueueConfig {
  std::map<std::string, QueueParams> queues;

  // Equal shares over `names`, each user limited to `user_limit` running tasks.
  static CapacityQueueConfig uniform(const std::vector<std::string>& names, int user_limit) {
    CapacityQueueConfig c;
    for (const auto& n : names)
      c.queues[n] = {1.0 / static_cast<double>(names.size()), user_limit};
    return c;
  }

  void validate() const {
    if (queues.empty()) throw ConfigError("capacity scheduler needs at least one queue");
    double sum = 0.0;
    for (const auto& [name, q] : queues) {
      if (!(q.capacity > 0.0 && q.capacity <= 1.0))
        throw ConfigError("queue " + name + ": capacity must lie in (0,1]");
      if (q.user_task_limit < 1)
        throw ConfigError("queue " + name + ": user_task_limit must be >= 1");
      sum += q.capacity;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ConfigError("queue capacities must sum to 1 (got " + std::to_string(sum) + ")");
  }
  bool operator==(const CapacityQueueConfig&) const = default;
};

inline double hungriness(int running, double capacity) { return running / capacity; }

// Queues ascending by running/capacity (ties by name); inside a queue jobs
// in priority FIFO order, skipping users at their running-task limit.
inline std::optional<Choice> capacity_select(
    std::span<const QueuedJob> jobs, const NodeState& node, const CapacityQueueConfig& queues,
    const std::map<std::string, int>& running_queue,
    const std::map<std::pair<std::string, std::string>, int>& running_user) {
  if (node.free_slots() < 1) return std::nullopt;
  std::vector<std::pair<double, std::string>> order;
  for (const auto& [name, q] : queues.queues)
    order.emplace_back(hungriness(lookup(running_queue, name), q.capacity), name);
  std::ranges::sort(order);
  for (const auto& [h, name] : order) {
    const int limit = queues.queues.at(name).user_task_limit;
    const auto best = first_job(jobs, fifo_before, [&](const QueuedJob& q) {
      if (q.job->pool != name) return false;
      const auto it = running_user.find({name, q.job->user});
      return it == running_user.end() || it->second < limit;
    });
    if (best) return choose_from(jobs, *best, node.spec.node_id);
  }
  return std::nullopt;
}

// --------------------------------------------------------------- bayes

enum class UtilityKind { constant, priority, age };
enum class AllBadPolicy { withhold, least_bad };

struct UtilityConfig {
  UtilityKind kind = UtilityKind::priority;
  double scale = 1.0;  // common positive multiplier

  // constant: 1; priority: priority + 1; age: 1 + waiting time in heartbeat intervals.
  double value(const Job& j, SimTime now, SimTime heartbeat_interval) const {
    switch (kind) {
      case UtilityKind::constant: return scale;
      case UtilityKind::priority: return scale * (j.priority + 1.0);
      case UtilityKind::age:
        return scale * (1.0 + std::max(0.0, now - j.arrival_time) / heartbeat_interval);
    }
    return scale;
  }
};

inline const char* to_string(UtilityKind k) {
  switch (k) {
    case UtilityKind::constant: return "constant";
    case UtilityKind::priority: return "priority";
    case UtilityKind::age: return "age";
  }
  return "?";
}

inline UtilityKind parse_utility(const std::string& s) {
  if (s == "constant") return UtilityKind::constant;
  if (s == "priority") return UtilityKind::priority;
  if (s == "age") return UtilityKind::age;
  throw ConfigError("unknown utility '" + s + "' (expected constant, priority, age)");
}

inline const char* to_string(AllBadPolicy p) {
  return p == AllBadPolicy::withhold ? "withhold" : "least-bad";
}

inline AllBadPolicy parse_all_bad(const std::string& s) {
  if (s == "withhold") return AllBadPolicy::withhold;
  if (s == "least-bad") return AllBadPolicy::least_bad;
  throw ConfigError("unknown all-bad policy '" + s + "' (expected withhold, least-bad)");
}

struct BayesChoice {
  Choice choice;
  FeatureVector features;
  double p_good = 0.5;
  double expected_utility = 0.0;
};

// Classifies every job with pending work against this node and picks the
// good job with the largest U(i) * P(good | features); ties go to the
// earlier arrival, then the smaller job_id.
inline std::optional<BayesChoice> bayes_select(std::span<const QueuedJob> jobs,
                                               const NodeState& node,
                                               const NaiveBayesClassifier& classifier,
                                               const ClusterScale& scale,
                                               const UtilityConfig& utility, SimTime now,
                                               AllBadPolicy all_bad = AllBadPolicy::withhold) {
  if (node.free_slots() < 1) return std::nullopt;
  const auto node_levels = node_features(node, scale);

  struct Scored {
    std::size_t index;
    FeatureVector features;
    double p;
    double eu;
  };
  std::vector<Scored> scored;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!jobs[i].has_pending()) continue;
    const Job& j = *jobs[i].job;
    auto f = make_features(j.features, node_levels);
    const double p = classifier.posterior(f).p_good;
    const double u = utility.value(j, now, node.spec.heartbeat_interval);
    scored.push_back({i, std::move(f), p, u * p});
  }
  const bool any_good = std::ranges::any_of(scored, [](const Scored& s) { return s.p >= 0.5; });
  if (!any_good && all_bad == AllBadPolicy::withhold) return std::nullopt;

  const Scored* best = nullptr;
  for (const auto& s : scored) {
    if (any_good && s.p < 0.5) continue;
    if (!best || s.eu > best->eu ||
        (s.eu == best->eu && arrival_before(*jobs[s.index].job, *jobs[best->index].job)))
      best = &s;
  }
  if (!best) return std::nullopt;
  auto choice = choose_from(jobs, best->index, node.spec.node_id);
  return BayesChoice{*choice, best->features, best->p, best->eu};
}

// ----------------------------------------------------------- contract

struct Decision {
  Choice choice;
  std::optional<FeatureVector> features;  // Bayes only; otherwise the engine snapshots
  std::optional<double> p_good;
};

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual std::string name() const = 0;
  virtual void on_job_submitted(const Job&) {}
  // One assignment per call; must not return a task for a full node.
  virtual std::optional<Decision> on_heartbeat(const NodeState& node,
                                               std::span<const QueuedJob> jobs,
                                               SimTime now) = 0;
  virtual void on_feedback(const Assignment&, Label) {}
  virtual const NaiveBayesClassifier* classifier() const { return nullptr; }
};

class FifoScheduler final : public Scheduler {
 public:
  std::string name() const override { return "fifo"; }
  std::optional<Decision> on_heartbeat(const NodeState& node, std::span<const QueuedJob> jobs,
                                       SimTime) override {
    if (auto c = fifo_select(jobs, node)) return Decision{*c, {}, {}};
    return std::nullopt;
  }
};

class FairScheduler final : public Scheduler {
 public:
  explicit FairScheduler(FairPoolConfig pools) : pools_(std::move(pools)) {}
  std::string name() const override { return "fair"; }
  std::optional<Decision> on_heartbeat(const NodeState& node, std::span<const QueuedJob> jobs,
                                       SimTime) override {
    if (auto c = fair_select(jobs, node, pools_, running_per_pool(jobs)))
      return Decision{*c, {}, {}};
    return std::nullopt;
  }

 private:
  FairPoolConfig pools_;
};

class CapacityScheduler final : public Scheduler {
 public:
  explicit CapacityScheduler(CapacityQueueConfig queues) : queues_(std::move(queues)) {
    queues_.validate();
  }
  std::string name() const override { return "capacity"; }
  void on_job_submitted(const Job& j) override {
    if (!queues_.queues.contains(j.pool))
      throw ConfigError("job " + std::to_string(j.job_id) + " names unknown queue '" +
                        j.pool + "'");
  }
  std::optional<Decision> on_heartbeat(const NodeState& node, std::span<const QueuedJob> jobs,
                                       SimTime) override {
    if (auto c = capacity_select(jobs, node, queues_, running_per_pool(jobs),
                                 running_per_user(jobs)))
      return Decision{*c, {}, {}};
    return std::nullopt;
  }

 private:
  CapacityQueueConfig queues_;
};

class BayesScheduler final : public Scheduler {
 public:
  BayesScheduler(NaiveBayesClassifier classifier, ClusterScale scale, UtilityConfig utility,
                 AllBadPolicy all_bad)
      : classifier_(std::move(classifier)), scale_(scale), utility_(utility),
        all_bad_(all_bad) {
    if (classifier_.feature_count() != kDefaultFeatureCount || classifier_.levels() != kLevels)
      throw ConfigError("bayes scheduler needs an " + std::to_string(kDefaultFeatureCount) +
                        "-feature, " + std::to_string(kLevels) + "-level classifier (got " +
                        std::to_string(classifier_.feature_count()) + " x " +
                        std::to_string(classifier_.levels()) + ")");
  }
  std::string name() const override { return "bayes"; }
  std::optional<Decision> on_heartbeat(const NodeState& node, std::span<const QueuedJob> jobs,
                                       SimTime now) override {
    auto c = bayes_select(jobs, node, classifier_, scale_, utility_, now, all_bad_);
    if (!c) return std::nullopt;
    return Decision{c->choice, std::move(c->features), c->p_good};
  }
  void on_feedback(const Assignment& a, Label label) override {
    classifier_.observe(a.features, label);
  }
  const NaiveBayesClassifier* classifier() const override { return &classifier_; }

 private:
  NaiveBayesClassifier classifier_;
  ClusterScale scale_;
  UtilityConfig utility_;
  AllBadPolicy all_bad_;
};

inline const std::vector<std::string>& scheduler_names() {
  static const std::vector<std::string> names{"fifo", "fair", "capacity", "bayes"};
  return names;
}

}  // namespace mrsim
