#pragma once

// Independent reference computations used by the unit and acceptance
// suites. Nothing here calls into the code paths it checks: posteriors are
// recomputed from raw observation lists without logs, scheduler choices are
// brute-force minima over every (job, task) candidate, and finish times come
// from a separate piecewise-constant-rate integration.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "mrsim/mrsim.hpp"

namespace oracle {

using mrsim::Label;

struct Observation {
  std::vector<int> levels;
  Label label;
};

// Direct probability-table posterior, straight products in long double.
inline long double p_good(const std::vector<Observation>& obs, const std::vector<int>& query,
                          int levels, long double alpha) {
  const std::size_t n = query.size();
  long double score[2];
  for (int c = 0; c < 2; ++c) {
    const Label cls = c == 0 ? Label::good : Label::bad;
    long double nc = 0;
    std::vector<long double> match(n, 0);
    for (const auto& o : obs) {
      if (o.label != cls) continue;
      nc += 1;
      for (std::size_t j = 0; j < n; ++j)
        if (o.levels[j] == query[j]) match[j] += 1;
    }
    long double s = (nc + alpha) / (static_cast<long double>(obs.size()) + 2 * alpha);
    for (std::size_t j = 0; j < n; ++j) s *= (match[j] + alpha) / (nc + levels * alpha);
    score[c] = s;
  }
  return score[0] / (score[0] + score[1]);
}

// ------------------------------------------------------------ schedulers

struct Pick {
  mrsim::JobId job;
  mrsim::TaskId task;
  bool operator==(const Pick&) const = default;
};

struct Candidate {
  std::size_t job_index;
  std::size_t task_index;
  const mrsim::Job* job;
  const mrsim::Task* task;
  bool local;
};

inline std::vector<Candidate> candidates(const std::vector<mrsim::QueuedJob>& jobs,
                                         mrsim::NodeId node) {
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < jobs.size(); ++i)
    for (std::size_t t : jobs[i].pending) {
      const auto& task = jobs[i].job->tasks[t];
      const bool local = std::ranges::find(task.preferred_nodes, node) != task.preferred_nodes.end();
      out.push_back({i, t, jobs[i].job, &task, local});
    }
  return out;
}

template <class Key>
std::optional<Pick> argmin(const std::vector<Candidate>& cs, Key key) {
  std::optional<Pick> best;
  std::optional<decltype(key(cs.front()))> best_key;
  for (const auto& c : cs) {
    auto k = key(c);
    if (!best_key || k < *best_key) {
      best_key = k;
      best = Pick{c.job->job_id, c.task->task_id};
    }
  }
  return best;
}

inline std::optional<Pick> fifo(const std::vector<mrsim::QueuedJob>& jobs, const mrsim::NodeState& n) {
  if (n.free_slots() < 1) return std::nullopt;
  const auto cs = candidates(jobs, n.spec.node_id);
  if (cs.empty()) return std::nullopt;
  return argmin(cs, [](const Candidate& c) {
    return std::make_tuple(-c.job->priority, c.job->arrival_time, c.job->job_id, c.local ? 0 : 1,
                           c.task->task_id);
  });
}

inline int running_in(const std::vector<mrsim::QueuedJob>& jobs, const std::string& pool) {
  int r = 0;
  for (const auto& q : jobs)
    if (q.job->pool == pool) r += q.running;
  return r;
}

inline std::optional<Pick> fair(const std::vector<mrsim::QueuedJob>& jobs, const mrsim::NodeState& n,
                                const mrsim::FairPoolConfig& pools) {
  if (n.free_slots() < 1) return std::nullopt;
  const auto cs = candidates(jobs, n.spec.node_id);
  if (cs.empty()) return std::nullopt;
  return argmin(cs, [&](const Candidate& c) {
    const auto& pool = c.job->pool;
    const auto it = pools.pools.find(pool);
    const int min_share = it == pools.pools.end() ? 0 : it->second.min_share;
    const double weight = it == pools.pools.end() ? 1.0 : it->second.weight;
    const int r = running_in(jobs, pool);
    const bool under = r < min_share;
    const double primary = under ? -static_cast<double>(min_share - r) : r / weight;
    return std::make_tuple(under ? 0 : 1, primary, r, pool, c.job->arrival_time, c.job->job_id,
                           c.local ? 0 : 1, c.task->task_id);
  });
}

inline std::optional<Pick> capacity(const std::vector<mrsim::QueuedJob>& jobs,
                                    const mrsim::NodeState& n,
                                    const mrsim::CapacityQueueConfig& queues) {
  if (n.free_slots() < 1) return std::nullopt;
  std::vector<Candidate> eligible;
  for (const auto& c : candidates(jobs, n.spec.node_id)) {
    const auto q = queues.queues.find(c.job->pool);
    if (q == queues.queues.end()) continue;
    int user_running = 0;
    for (const auto& j : jobs)
      if (j.job->pool == c.job->pool && j.job->user == c.job->user) user_running += j.running;
    if (user_running >= q->second.user_task_limit) continue;
    eligible.push_back(c);
  }
  if (eligible.empty()) return std::nullopt;
  return argmin(eligible, [&](const Candidate& c) {
    const double h = running_in(jobs, c.job->pool) / queues.queues.at(c.job->pool).capacity;
    return std::make_tuple(h, c.job->pool, -c.job->priority, c.job->arrival_time, c.job->job_id,
                           c.local ? 0 : 1, c.task->task_id);
  });
}

inline std::optional<Pick> bayes(const std::vector<mrsim::QueuedJob>& jobs, const mrsim::NodeState& n,
                                 const std::vector<Observation>& training, double alpha,
                                 const mrsim::ClusterScale& scale, const mrsim::UtilityConfig& u,
                                 double now, bool least_bad) {
  if (n.free_slots() < 1) return std::nullopt;
  const auto node = mrsim::node_features(n, scale);
  std::map<std::size_t, long double> p;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& f = jobs[i].job->features;
    std::vector<int> q{f.cpu_avg, f.mem_avg, f.io_avg, f.net_avg, node[0], node[1], node[2], node[3]};
    p[i] = p_good(training, q, mrsim::kLevels, alpha);
  }
  auto cs = candidates(jobs, n.spec.node_id);
  const bool any_good = std::ranges::any_of(cs, [&](const Candidate& c) { return p[c.job_index] >= 0.5L; });
  if (!any_good && !least_bad) return std::nullopt;
  if (any_good) std::erase_if(cs, [&](const Candidate& c) { return p[c.job_index] < 0.5L; });
  if (cs.empty()) return std::nullopt;
  return argmin(cs, [&](const Candidate& c) {
    const double eu = u.value(*c.job, now, n.spec.heartbeat_interval) * static_cast<double>(p[c.job_index]);
    return std::make_tuple(-eu, c.job->arrival_time, c.job->job_id, c.local ? 0 : 1, c.task->task_id);
  });
}

// Random small scheduling instance: up to `max_jobs` jobs over up to
// `max_pools` pools, random pending subsets and running counts.
struct Instance {
  std::vector<mrsim::Job> jobs;
  std::vector<mrsim::QueuedJob> queued;
  mrsim::NodeState node;
  std::vector<std::string> pools;
};

inline Instance random_instance(std::mt19937_64& rng, int max_jobs = 10, int max_pools = 3) {
  const auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  Instance in;
  const int pools = uni(1, max_pools);
  for (int p = 0; p < pools; ++p) in.pools.push_back("q" + std::to_string(p));
  const int njobs = uni(0, max_jobs);
  in.jobs.resize(static_cast<std::size_t>(njobs));
  for (int i = 0; i < njobs; ++i) {
    auto& j = in.jobs[static_cast<std::size_t>(i)];
    j.job_id = static_cast<mrsim::JobId>(uni(0, 1000) * 16 + i);
    j.user = "u" + std::to_string(uni(0, 2));
    j.pool = in.pools[static_cast<std::size_t>(uni(0, pools - 1))];
    j.priority = uni(0, 2);
    j.arrival_time = uni(0, 5);  // coarse grid forces ties
    j.features = {uni(1, 10), uni(1, 10), uni(1, 10), uni(1, 10)};
    const int tasks = uni(1, 4);
    for (int t = 0; t < tasks; ++t) {
      mrsim::Task task;
      task.task_id = static_cast<mrsim::TaskId>(uni(0, 50) * 8 + t);
      task.job_id = j.job_id;
      task.work = 1.0 + uni(0, 9);
      task.cpu_demand = uni(0, 10) / 10.0;
      task.mem_demand = uni(0, 10) / 10.0;
      if (uni(0, 2) == 0) task.preferred_nodes.push_back(static_cast<mrsim::NodeId>(uni(0, 2)));
      j.tasks.push_back(task);
    }
  }
  for (const auto& j : in.jobs) {
    mrsim::QueuedJob q;
    q.job = &j;
    std::vector<std::size_t> idx(j.tasks.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    std::ranges::sort(idx, [&](auto a, auto b) { return j.tasks[a].task_id < j.tasks[b].task_id; });
    for (std::size_t k : idx)
      if (uni(0, 3) != 0) q.pending.push_back(k);
    q.running = uni(0, 3);
    in.queued.push_back(std::move(q));
  }
  in.node.spec = {static_cast<mrsim::NodeId>(uni(0, 2)), uni(1, 4) * 0.5, uni(1, 4) * 0.5, 4, 1.0, 0.0};
  const int running = uni(0, 3);
  for (int r = 0; r < running; ++r)
    in.node.running.push_back({999, static_cast<mrsim::TaskId>(r), 1.0, uni(0, 10) / 10.0,
                               uni(0, 10) / 10.0});
  in.node.recompute_sums();
  return in;
}

// ---------------------------------------------------------- speed model

// Finish times implied by the assignment times in `log`, integrating each
// node's piecewise-constant shared rate between breakpoints.
inline std::map<std::tuple<mrsim::NodeId, mrsim::JobId, mrsim::TaskId>, double> integrate_finishes(
    const mrsim::EventLog& log, const std::vector<mrsim::Job>& workload,
    const std::vector<mrsim::NodeSpec>& nodes) {
  std::map<std::pair<mrsim::JobId, mrsim::TaskId>, const mrsim::Task*> tasks;
  for (const auto& j : workload)
    for (const auto& t : j.tasks) tasks[{j.job_id, t.task_id}] = &t;
  std::map<std::tuple<mrsim::NodeId, mrsim::JobId, mrsim::TaskId>, double> out;
  for (const auto& spec : nodes) {
    struct Arrival {
      double time;
      mrsim::JobId job;
      const mrsim::Task* task;
    };
    std::vector<Arrival> arrivals;
    for (const auto& r : log.records)
      if (r.kind == mrsim::EventKind::assign && *r.node == spec.node_id)
        arrivals.push_back({r.time, *r.job, tasks.at({*r.job, *r.task})});
    struct Active {
      mrsim::JobId job;
      const mrsim::Task* task;
      double remaining;
    };
    std::vector<Active> active;
    double t = 0.0;
    std::size_t next = 0;
    while (next < arrivals.size() || !active.empty()) {
      double demand = 0.0;
      for (const auto& a : active) demand += a.task->cpu_demand;
      const double rate = demand <= spec.cpu_capacity ? 1.0 : spec.cpu_capacity / demand;
      double t_finish = std::numeric_limits<double>::infinity();
      for (const auto& a : active) t_finish = std::min(t_finish, t + a.remaining / rate);
      const double t_arrive =
          next < arrivals.size() ? arrivals[next].time : std::numeric_limits<double>::infinity();
      const double t_next = std::min(t_finish, t_arrive);
      for (auto& a : active) a.remaining -= rate * (t_next - t);
      t = t_next;
      if (t_finish <= t_arrive) {
        // retire every task that is done at this breakpoint
        std::erase_if(active, [&](const Active& a) {
          if (a.remaining > 1e-12 * a.task->work) return false;
          out[{spec.node_id, a.job, a.task->task_id}] = t;
          return true;
        });
      }
      while (next < arrivals.size() && arrivals[next].time <= t) {
        active.push_back({arrivals[next].job, arrivals[next].task, arrivals[next].task->work});
        ++next;
      }
    }
  }
  return out;
}

// Every assignment whose job had a node-local pending task must be local.
// Returns the number of violations.
inline std::size_t locality_violations(const mrsim::EventLog& log,
                                       const std::vector<mrsim::Job>& workload) {
  std::map<mrsim::JobId, std::map<mrsim::TaskId, const mrsim::Task*>> pending;
  for (const auto& j : workload)
    for (const auto& t : j.tasks) pending[j.job_id][t.task_id] = &t;
  std::size_t bad = 0;
  for (const auto& r : log.records) {
    if (r.kind != mrsim::EventKind::assign) continue;
    auto& p = pending[*r.job];
    bool local_available = false;
    for (const auto& [id, t] : p)
      if (std::ranges::find(t->preferred_nodes, *r.node) != t->preferred_nodes.end())
        local_available = true;
    const auto* chosen = p.at(*r.task);
    const bool local =
        std::ranges::find(chosen->preferred_nodes, *r.node) != chosen->preferred_nodes.end();
    if (local_available && !local) ++bad;
    p.erase(*r.task);
  }
  return bad;
}

}  // namespace oracle
