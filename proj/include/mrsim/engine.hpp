#pragma once

// Single-threaded discrete-event simulation of a heartbeat-driven cluster.
//
// Nodes pull work on heartbeats. Tasks on a node share its CPU: when the
// summed demand exceeds capacity every task runs at capacity / demand.
// Each assignment is labeled at the node's next heartbeat by the overload
// rule and the label is handed back to the scheduler.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "mrsim/classifier.hpp"
#include "mrsim/core.hpp"
#include "mrsim/error.hpp"
#include "mrsim/events.hpp"
#include "mrsim/overload.hpp"
#include "mrsim/schedulers.hpp"

namespace mrsim {

struct SchedulerConfig {
  std::string name = "fifo";  // fifo | fair | capacity | bayes
  FairPoolConfig fair_pools;
  std::optional<CapacityQueueConfig> capacity_queues;  // equal shares when absent
  UtilityConfig utility;
  AllBadPolicy all_bad = AllBadPolicy::withhold;
  double alpha = 1.0;
  std::optional<NaiveBayesClassifier> initial_classifier;
};

struct RunConfig {
  std::vector<NodeSpec> nodes;
  SchedulerConfig scheduler;
  OverloadRule overload_rule = OverloadRule::default_rule();
  std::uint64_t seed = 0;
  std::optional<SimTime> horizon;
  bool check_invariants = true;
};

// speed = 1 under capacity, otherwise capacity / demand.
inline double node_speed(const NodeState& s) {
  if (s.cpu_demand_sum <= s.spec.cpu_capacity) return 1.0;
  return s.spec.cpu_capacity / s.cpu_demand_sum;
}

// Phase index * interval / node count for nodes whose phase was not given.
inline std::vector<NodeSpec> with_default_phases(std::vector<NodeSpec> nodes,
                                                 const std::vector<bool>& phase_given) {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (i >= phase_given.size() || !phase_given[i])
      nodes[i].heartbeat_phase = static_cast<double>(i) * nodes[i].heartbeat_interval /
                                 static_cast<double>(nodes.size());
  return nodes;
}

inline std::unique_ptr<Scheduler> make_scheduler(const SchedulerConfig& cfg,
                                                 const std::vector<NodeSpec>& nodes,
                                                 const std::vector<Job>& workload) {
  int total_slots = 0;
  for (const auto& n : nodes) total_slots += n.slots;
  if (cfg.name == "fifo") return std::make_unique<FifoScheduler>();
  if (cfg.name == "fair") {
    cfg.fair_pools.validate(total_slots);
    return std::make_unique<FairScheduler>(cfg.fair_pools);
  }
  if (cfg.name == "capacity") {
    if (cfg.capacity_queues) return std::make_unique<CapacityScheduler>(*cfg.capacity_queues);
    std::set<std::string> names;
    for (const auto& j : workload) names.insert(j.pool);
    if (names.empty()) names.insert("default");
    return std::make_unique<CapacityScheduler>(CapacityQueueConfig::uniform(
        {names.begin(), names.end()}, std::max(1, total_slots)));
  }
  if (cfg.name == "bayes") {
    NaiveBayesClassifier c = cfg.initial_classifier
                                 ? *cfg.initial_classifier
                                 : NaiveBayesClassifier(kDefaultFeatureCount, kLevels, cfg.alpha);
    return std::make_unique<BayesScheduler>(std::move(c), ClusterScale::of(nodes), cfg.utility,
                                            cfg.all_bad);
  }
  std::string valid;
  for (const auto& n : scheduler_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown scheduler '" + cfg.name + "' (valid: " + valid + ")");
}

struct RunResult {
  EventLog log;
  std::optional<NaiveBayesClassifier> classifier;  // final state, bayes runs
  std::vector<Assignment> assignments;
};

class Engine {
 public:
  Engine(RunConfig config, std::vector<Job> workload)
      : config_(std::move(config)), jobs_(std::move(workload)) {
    if (config_.nodes.empty()) throw ConfigError("cluster needs at least one node");
    if (config_.horizon && !(*config_.horizon > 0.0))
      throw ConfigError("horizon must be > 0");
    std::set<NodeId> ids;
    for (const auto& n : config_.nodes) {
      validate_node(n);
      if (!ids.insert(n.node_id).second)
        throw ConfigError("duplicate node id " + std::to_string(n.node_id));
    }
    std::set<JobId> job_ids;
    for (const auto& j : jobs_) {
      validate_job(j);
      if (!job_ids.insert(j.job_id).second)
        throw ConfigError("duplicate job id " + std::to_string(j.job_id));
    }
    std::ranges::stable_sort(jobs_, arrival_before);
    scheduler_ = make_scheduler(config_.scheduler, config_.nodes, jobs_);
    scale_ = ClusterScale::of(config_.nodes);
    for (std::size_t i = 0; i < config_.nodes.size(); ++i) {
      Node n;
      n.state.spec = config_.nodes[i];
      nodes_.push_back(std::move(n));
      node_index_[config_.nodes[i].node_id] = i;
      result_.log.nodes.push_back({config_.nodes[i].node_id, config_.nodes[i].slots});
    }
  }

  RunResult run() && {
    for (std::size_t i = 0; i < jobs_.size(); ++i)
      push({jobs_[i].arrival_time, 0, Kind::arrival, i, 0, 0, 0});
    while (!queue_.empty()) {
      const Event ev = queue_.top();
      if (config_.horizon && ev.time > *config_.horizon) break;
      queue_.pop();
      now_ = ev.time;
      switch (ev.kind) {
        case Kind::arrival: on_arrival(ev.index); break;
        case Kind::heartbeat: on_heartbeat(ev.index); break;
        case Kind::finish: on_finish(ev.index, ev.job, ev.task, ev.epoch); break;
      }
      if (config_.check_invariants) check();
    }
    result_.log.truncated = finished_jobs_ < jobs_.size();
    result_.log.stalled = result_.log.truncated && stalled_;
    if (const auto* c = scheduler_->classifier()) result_.classifier = *c;
    return std::move(result_);
  }

 private:
  enum class Kind { arrival, heartbeat, finish };

  struct Event {
    SimTime time;
    std::uint64_t seq;
    Kind kind;
    std::size_t index;  // job index for arrivals, node index otherwise
    JobId job;
    TaskId task;
    std::uint64_t epoch;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  struct Node {
    NodeState state;
    SimTime last_update = 0.0;
    std::uint64_t epoch = 0;
    bool heartbeat_scheduled = false;
    std::vector<Assignment> pending_feedback;
  };

  void push(Event e) {
    e.seq = seq_++;
    queue_.push(e);
  }

  void log(EventRecord r) {
    if (!result_.log.records.empty() && r.time < result_.log.records.back().time)
      throw InternalError("event log out of order");
    result_.log.records.push_back(std::move(r));
  }

  // First heartbeat time on the node's grid strictly after `t`.
  static SimTime next_grid_time(const NodeSpec& s, SimTime t) {
    const double k = std::floor((t - s.heartbeat_phase) / s.heartbeat_interval) + 1.0;
    SimTime next = s.heartbeat_phase + std::max(0.0, k) * s.heartbeat_interval;
    while (next <= t) next += s.heartbeat_interval;
    return next;
  }

  void progress(Node& n) {
    const double speed = node_speed(n.state);
    const double dt = now_ - n.last_update;
    if (dt > 0.0)
      for (auto& t : n.state.running)
        t.remaining_work = std::max(0.0, t.remaining_work - speed * dt);
    n.last_update = now_;
  }

  void reschedule_finishes(std::size_t node_index) {
    Node& n = nodes_[node_index];
    ++n.epoch;
    const double speed = node_speed(n.state);
    for (const auto& t : n.state.running)
      push({now_ + t.remaining_work / speed, 0, Kind::finish, node_index, t.job_id, t.task_id,
            n.epoch});
  }

  void on_arrival(std::size_t job_index) {
    const Job& job = jobs_[job_index];
    scheduler_->on_job_submitted(job);
    QueuedJob q;
    q.job = &job;
    std::vector<std::size_t> order(job.tasks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::ranges::sort(order, [&](std::size_t a, std::size_t b) {
      return job.tasks[a].task_id < job.tasks[b].task_id;
    });
    q.pending = std::move(order);
    active_.push_back(std::move(q));
    log({.time = now_, .kind = EventKind::arrival, .job = job.job_id,
         .tasks = job.tasks.size(), .user = job.user, .pool = job.pool});
    note_change();
    stalled_ = false;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].heartbeat_scheduled) continue;
      nodes_[i].heartbeat_scheduled = true;
      push({next_grid_time(nodes_[i].state.spec, now_), 0, Kind::heartbeat, i, 0, 0, 0});
    }
  }

  void on_heartbeat(std::size_t node_index) {
    Node& n = nodes_[node_index];
    n.heartbeat_scheduled = false;
    const NodeId node_id = n.state.spec.node_id;
    const bool overloaded = config_.overload_rule.evaluate(n.state);
    log({.time = now_, .kind = EventKind::heartbeat, .node = node_id, .overloaded = overloaded});

    bool changed = !n.pending_feedback.empty();
    const Label label = overloaded ? Label::bad : Label::good;
    for (const auto& a : n.pending_feedback) {
      log({.time = now_, .kind = EventKind::feedback, .node = node_id, .job = a.job_id,
           .task = a.task_id, .label = label});
      scheduler_->on_feedback(a, label);
    }
    n.pending_feedback.clear();

    bool placed = false;
    while (n.state.free_slots() > 0) {
      auto d = scheduler_->on_heartbeat(n.state, active_, now_);
      if (!d) break;
      place(node_index, *d);
      placed = true;
    }
    if (placed) reschedule_finishes(node_index);
    changed = changed || placed;

    if (changed) {
      note_change();
    } else if (no_work_running()) {
      idle_seen_.insert(node_index);
      if (idle_seen_.size() == nodes_.size()) stalled_ = true;
    }
    if (!active_.empty() && !stalled_) {
      n.heartbeat_scheduled = true;
      push({now_ + n.state.spec.heartbeat_interval, 0, Kind::heartbeat, node_index, 0, 0, 0});
    }
  }

  void place(std::size_t node_index, const Decision& d) {
    Node& n = nodes_[node_index];
    if (d.choice.job_index >= active_.size())
      throw InternalError("scheduler returned an unknown job");
    QueuedJob& q = active_[d.choice.job_index];
    const auto it = std::ranges::find(q.pending, d.choice.task_index);
    if (it == q.pending.end() || q.job->job_id != d.choice.job_id)
      throw InternalError("scheduler returned a task that is not pending");
    const Task& task = q.job->tasks[d.choice.task_index];

    FeatureVector features =
        d.features ? *d.features
                   : make_features(q.job->features, node_features(n.state, scale_));
    progress(n);
    q.pending.erase(it);
    ++q.running;
    n.state.running.push_back(
        {task.job_id, task.task_id, task.work, task.cpu_demand, task.mem_demand});
    n.state.recompute_sums();

    Assignment a{task.task_id, task.job_id, n.state.spec.node_id, now_, std::move(features),
                 task.prefers(n.state.spec.node_id)};
    log({.time = now_, .kind = EventKind::assign, .node = a.node_id, .job = a.job_id,
         .task = a.task_id, .p_good = d.p_good, .local = a.local});
    n.pending_feedback.push_back(a);
    result_.assignments.push_back(std::move(a));
  }

  void on_finish(std::size_t node_index, JobId job_id, TaskId task_id, std::uint64_t epoch) {
    Node& n = nodes_[node_index];
    if (epoch != n.epoch) return;  // superseded by a later reschedule
    const auto it = std::ranges::find_if(n.state.running,
                                         [&](const RunningTask& t) {
                                           return t.job_id == job_id && t.task_id == task_id;
                                         });
    if (it == n.state.running.end()) return;
    progress(n);
    n.state.running.erase(it);
    n.state.recompute_sums();
    log({.time = now_, .kind = EventKind::finish, .node = n.state.spec.node_id, .job = job_id,
         .task = task_id});

    const auto q = std::ranges::find_if(active_,
                                        [&](const QueuedJob& x) { return x.job->job_id == job_id; });
    if (q == active_.end()) throw InternalError("finished task of an inactive job");
    --q->running;
    if (q->running == 0 && q->pending.empty()) {
      active_.erase(q);
      ++finished_jobs_;
    }
    reschedule_finishes(node_index);
    note_change();
  }

  bool no_work_running() const {
    return std::ranges::all_of(nodes_, [](const Node& n) { return n.state.running.empty(); });
  }

  void note_change() { idle_seen_.clear(); }

  void check() const {
    for (const auto& n : nodes_) {
      if (!n.state.sums_consistent(1e-9))
        throw InternalError("node demand caches drifted from running tasks");
      if (n.state.free_slots() < 0) throw InternalError("node slots exceeded");
    }
  }

  RunConfig config_;
  std::vector<Job> jobs_;
  std::unique_ptr<Scheduler> scheduler_;
  ClusterScale scale_;
  std::vector<Node> nodes_;
  std::map<NodeId, std::size_t> node_index_;
  std::vector<QueuedJob> active_;  // arrived, unfinished; arrival order
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t seq_ = 0;
  SimTime now_ = 0.0;
  std::size_t finished_jobs_ = 0;
  std::set<std::size_t> idle_seen_;
  bool stalled_ = false;
  RunResult result_;
};

inline RunResult run_simulation(RunConfig config, std::vector<Job> workload) {
  return Engine(std::move(config), std::move(workload)).run();
}

}  // namespace mrsim
