#pragma once

// Run metrics from an event log, report documents, and cross-scheduler
// comparison tables.
//
// Conventions: locality_rate is 1.0 when nothing was assigned; standard
// deviations are population deviations (divide by the number of runs);
// relative deltas are (mean - baseline) / baseline against the "fifo" row,
// or the first row when no fifo row exists, and are 0 when both are 0.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrsim/classifier.hpp"
#include "mrsim/error.hpp"
#include "mrsim/events.hpp"

namespace mrsim {

struct RunHeader {
  std::string scheduler;
  std::uint64_t seed = 0;
  double alpha = 1.0;
  std::string utility;
  std::string all_bad;
  std::string overload_rule;
  std::string workload_digest;
  std::string cluster_digest;
  std::optional<double> horizon;
  bool operator==(const RunHeader&) const = default;
};

struct JobRow {
  JobId job_id = 0;
  std::string user;
  std::string pool;
  SimTime arrival = 0.0;
  std::optional<SimTime> finish;
  std::size_t tasks = 0;
  std::size_t local_assignments = 0;

  std::optional<double> turnaround() const {
    if (!finish) return std::nullopt;
    return *finish - arrival;
  }
  bool operator==(const JobRow&) const = default;
};

struct Metrics {
  double makespan = 0.0;
  double mean_turnaround = 0.0;
  double median_turnaround = 0.0;
  std::size_t heartbeats = 0;
  std::size_t overload_heartbeats = 0;
  std::size_t feedback_count = 0;
  std::size_t bad_label_count = 0;
  std::size_t assignments = 0;
  std::size_t local_assignments = 0;
  double locality_rate = 1.0;
  double slot_utilization = 0.0;
  std::size_t submitted_tasks = 0;
  std::size_t completed_tasks = 0;
  std::size_t jobs = 0;
  std::size_t completed_jobs = 0;
  bool truncated = false;
  bool stalled = false;
  bool operator==(const Metrics&) const = default;
};

struct SimReport {
  RunHeader header;
  Metrics metrics;
  std::vector<JobRow> jobs;  // arrival order
  std::optional<NaiveBayesClassifier> classifier;
  bool operator==(const SimReport&) const = default;
};

inline SimReport summarize(const EventLog& log) {
  SimReport rep;
  Metrics& m = rep.metrics;
  std::map<JobId, std::size_t> row_of;
  std::map<std::pair<NodeId, TaskId>, std::vector<std::pair<JobId, SimTime>>> started;
  std::optional<SimTime> first_arrival, last_finish;
  double busy = 0.0;
  SimTime prev = -INFINITY;
  std::map<JobId, std::size_t> finished_tasks;

  for (const auto& r : log.records) {
    if (r.time < prev) throw InternalError("summarize: event log out of order");
    prev = r.time;
    switch (r.kind) {
      case EventKind::arrival: {
        if (!r.job || !r.tasks) throw InternalError("summarize: malformed arrival record");
        if (!first_arrival) first_arrival = r.time;
        row_of[*r.job] = rep.jobs.size();
        rep.jobs.push_back({*r.job, r.user, r.pool, r.time, std::nullopt, *r.tasks, 0});
        m.submitted_tasks += *r.tasks;
        break;
      }
      case EventKind::heartbeat:
        ++m.heartbeats;
        if (r.overloaded.value_or(false)) ++m.overload_heartbeats;
        break;
      case EventKind::feedback:
        ++m.feedback_count;
        if (r.label == Label::bad) ++m.bad_label_count;
        break;
      case EventKind::assign: {
        ++m.assignments;
        const bool local = r.local.value_or(false);
        if (local) {
          ++m.local_assignments;
          if (auto it = row_of.find(r.job.value_or(0)); it != row_of.end())
            ++rep.jobs[it->second].local_assignments;
        }
        started[{r.node.value_or(0), r.task.value_or(0)}].push_back({r.job.value_or(0), r.time});
        break;
      }
      case EventKind::finish: {
        ++m.completed_tasks;
        last_finish = r.time;
        auto& starts = started[{r.node.value_or(0), r.task.value_or(0)}];
        const auto s = std::ranges::find_if(
            starts, [&](const auto& p) { return p.first == r.job.value_or(0); });
        if (s == starts.end()) throw InternalError("summarize: finish without assignment");
        busy += r.time - s->second;
        starts.erase(s);
        const auto it = row_of.find(r.job.value_or(0));
        if (it == row_of.end()) throw InternalError("summarize: finish for unknown job");
        auto& row = rep.jobs[it->second];
        if (++finished_tasks[row.job_id] == row.tasks) {
          row.finish = r.time;
          ++m.completed_jobs;
        }
        break;
      }
    }
  }
  m.jobs = rep.jobs.size();
  if (first_arrival && last_finish) m.makespan = *last_finish - *first_arrival;
  m.locality_rate = m.assignments == 0 ? 1.0
                                       : static_cast<double>(m.local_assignments) /
                                             static_cast<double>(m.assignments);
  const double available = static_cast<double>(log.total_slots()) * m.makespan;
  m.slot_utilization = available > 0.0 ? std::min(1.0, busy / available) : 0.0;

  std::vector<double> turnaround;
  for (const auto& row : rep.jobs)
    if (auto t = row.turnaround()) turnaround.push_back(*t);
  if (!turnaround.empty()) {
    double sum = 0.0;
    for (double t : turnaround) sum += t;
    m.mean_turnaround = sum / static_cast<double>(turnaround.size());
    std::ranges::sort(turnaround);
    const std::size_t k = turnaround.size();
    m.median_turnaround = k % 2 ? turnaround[k / 2] : 0.5 * (turnaround[k / 2 - 1] + turnaround[k / 2]);
  }
  m.truncated = log.truncated;
  m.stalled = log.stalled;
  return rep;
}

// ------------------------------------------------------------- formats

inline std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline nlohmann::ordered_json to_json(const NaiveBayesClassifier& c) {
  nlohmann::ordered_json o;
  o["features"] = c.feature_count();
  o["levels"] = c.levels();
  o["alpha"] = c.alpha();
  o["class_counts"] = {{"good", c.class_count(Label::good)}, {"bad", c.class_count(Label::bad)}};
  o["cond_counts"] = nlohmann::ordered_json::object();
  for (Label l : {Label::good, Label::bad}) {
    auto rows = nlohmann::ordered_json::array();
    const auto flat = c.cond_table(l);
    for (std::size_t j = 0; j < c.feature_count(); ++j)
      rows.push_back(std::vector<std::uint64_t>(
          flat.begin() + static_cast<std::ptrdiff_t>(j * c.levels()),
          flat.begin() + static_cast<std::ptrdiff_t>((j + 1) * c.levels())));
    o["cond_counts"][to_string(l)] = rows;
  }
  return o;
}

inline NaiveBayesClassifier classifier_from_json(const nlohmann::json& o) {
  try {
    const auto n = o.at("features").get<std::size_t>();
    const auto levels = o.at("levels").get<int>();
    NaiveBayesClassifier c(n, levels, o.at("alpha").get<double>());
    std::vector<std::uint64_t> tables[2];
    int i = 0;
    for (const char* name : {"good", "bad"}) {
      const auto& rows = o.at("cond_counts").at(name);
      if (rows.size() != n) throw ConfigError("classifier table has wrong feature count");
      for (const auto& row : rows) {
        if (row.size() != static_cast<std::size_t>(levels))
          throw ConfigError("classifier table has wrong level count");
        for (const auto& v : row) tables[i].push_back(v.get<std::uint64_t>());
      }
      ++i;
    }
    c.load_counts(o.at("class_counts").at("good").get<std::uint64_t>(),
                  o.at("class_counts").at("bad").get<std::uint64_t>(), tables[0], tables[1]);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed classifier document: ") + e.what());
  }
}

inline nlohmann::ordered_json to_json(const SimReport& r) {
  nlohmann::ordered_json o;
  const auto& h = r.header;
  o["header"] = {{"scheduler", h.scheduler},         {"seed", h.seed},
                 {"alpha", h.alpha},                 {"utility", h.utility},
                 {"all_bad", h.all_bad},             {"overload_rule", h.overload_rule},
                 {"workload_digest", h.workload_digest}, {"cluster_digest", h.cluster_digest}};
  o["header"]["horizon"] = h.horizon ? nlohmann::ordered_json(*h.horizon) : nullptr;
  const auto& m = r.metrics;
  o["metrics"] = {{"makespan", m.makespan},
                  {"mean_turnaround", m.mean_turnaround},
                  {"median_turnaround", m.median_turnaround},
                  {"heartbeats", m.heartbeats},
                  {"overload_heartbeats", m.overload_heartbeats},
                  {"feedback_count", m.feedback_count},
                  {"bad_label_count", m.bad_label_count},
                  {"assignments", m.assignments},
                  {"local_assignments", m.local_assignments},
                  {"locality_rate", m.locality_rate},
                  {"slot_utilization", m.slot_utilization},
                  {"submitted_tasks", m.submitted_tasks},
                  {"completed_tasks", m.completed_tasks},
                  {"jobs", m.jobs},
                  {"completed_jobs", m.completed_jobs},
                  {"truncated", m.truncated},
                  {"stalled", m.stalled}};
  o["jobs"] = nlohmann::ordered_json::array();
  for (const auto& j : r.jobs) {
    nlohmann::ordered_json row = {{"job_id", j.job_id},   {"user", j.user},
                                  {"pool", j.pool},       {"arrival_time", j.arrival},
                                  {"tasks", j.tasks},     {"local_assignments", j.local_assignments}};
    row["finish_time"] = j.finish ? nlohmann::ordered_json(*j.finish) : nullptr;
    row["turnaround"] = j.turnaround() ? nlohmann::ordered_json(*j.turnaround()) : nullptr;
    o["jobs"].push_back(row);
  }
  o["classifier"] = r.classifier ? to_json(*r.classifier) : nlohmann::ordered_json(nullptr);
  return o;
}

inline SimReport report_from_json(const nlohmann::json& o) {
  try {
    SimReport r;
    const auto& h = o.at("header");
    r.header.scheduler = h.at("scheduler").get<std::string>();
    r.header.seed = h.at("seed").get<std::uint64_t>();
    r.header.alpha = h.at("alpha").get<double>();
    r.header.utility = h.at("utility").get<std::string>();
    r.header.all_bad = h.at("all_bad").get<std::string>();
    r.header.overload_rule = h.at("overload_rule").get<std::string>();
    r.header.workload_digest = h.at("workload_digest").get<std::string>();
    r.header.cluster_digest = h.at("cluster_digest").get<std::string>();
    if (!h.at("horizon").is_null()) r.header.horizon = h.at("horizon").get<double>();
    const auto& m = o.at("metrics");
    auto& x = r.metrics;
    x.makespan = m.at("makespan").get<double>();
    x.mean_turnaround = m.at("mean_turnaround").get<double>();
    x.median_turnaround = m.at("median_turnaround").get<double>();
    x.heartbeats = m.at("heartbeats").get<std::size_t>();
    x.overload_heartbeats = m.at("overload_heartbeats").get<std::size_t>();
    x.feedback_count = m.at("feedback_count").get<std::size_t>();
    x.bad_label_count = m.at("bad_label_count").get<std::size_t>();
    x.assignments = m.at("assignments").get<std::size_t>();
    x.local_assignments = m.at("local_assignments").get<std::size_t>();
    x.locality_rate = m.at("locality_rate").get<double>();
    x.slot_utilization = m.at("slot_utilization").get<double>();
    x.submitted_tasks = m.at("submitted_tasks").get<std::size_t>();
    x.completed_tasks = m.at("completed_tasks").get<std::size_t>();
    x.jobs = m.at("jobs").get<std::size_t>();
    x.completed_jobs = m.at("completed_jobs").get<std::size_t>();
    x.truncated = m.at("truncated").get<bool>();
    x.stalled = m.at("stalled").get<bool>();
    for (const auto& j : o.at("jobs")) {
      JobRow row;
      row.job_id = j.at("job_id").get<JobId>();
      row.user = j.at("user").get<std::string>();
      row.pool = j.at("pool").get<std::string>();
      row.arrival = j.at("arrival_time").get<double>();
      if (!j.at("finish_time").is_null()) row.finish = j.at("finish_time").get<double>();
      row.tasks = j.at("tasks").get<std::size_t>();
      row.local_assignments = j.at("local_assignments").get<std::size_t>();
      r.jobs.push_back(std::move(row));
    }
    if (!o.at("classifier").is_null()) r.classifier = classifier_from_json(o.at("classifier"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("malformed report document: ") + e.what());
  }
}

inline void write_jobs_csv(std::ostream& os, const SimReport& r) {
  os << "job_id,user,pool,arrival_time,finish_time,turnaround,tasks,local_assignments\n";
  for (const auto& j : r.jobs) {
    os << j.job_id << ',' << j.user << ',' << j.pool << ',' << format_number(j.arrival) << ','
       << (j.finish ? format_number(*j.finish) : "") << ','
       << (j.turnaround() ? format_number(*j.turnaround()) : "") << ',' << j.tasks << ','
       << j.local_assignments << '\n';
  }
}

// ---------------------------------------------------------- comparison

struct MetricDef {
  const char* name;
  double (*get)(const Metrics&);
};

inline const std::vector<MetricDef>& compared_metrics() {
  static const std::vector<MetricDef> defs{
      {"makespan", [](const Metrics& m) { return m.makespan; }},
      {"mean_turnaround", [](const Metrics& m) { return m.mean_turnaround; }},
      {"median_turnaround", [](const Metrics& m) { return m.median_turnaround; }},
      {"overload_heartbeats",
       [](const Metrics& m) { return static_cast<double>(m.overload_heartbeats); }},
      {"bad_label_count", [](const Metrics& m) { return static_cast<double>(m.bad_label_count); }},
      {"locality_rate", [](const Metrics& m) { return m.locality_rate; }},
      {"slot_utilization", [](const Metrics& m) { return m.slot_utilization; }},
      {"truncated", [](const Metrics& m) { return m.truncated ? 1.0 : 0.0; }},
  };
  return defs;
}

struct MetricStat {
  double mean = 0.0;
  double stddev = 0.0;
  std::optional<double> delta;  // relative to the baseline row
};

struct ComparisonRow {
  std::string scheduler;
  std::size_t runs = 0;
  std::vector<MetricStat> stats;  // parallel to compared_metrics()
};

struct Comparison {
  std::string baseline;
  std::vector<ComparisonRow> rows;
};

struct SchedulerRuns {
  std::string scheduler;
  std::vector<SimReport> reports;
};

inline MetricStat mean_std(const std::vector<double>& xs) {
  MetricStat s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double sq = 0.0;
  for (double x : xs) sq += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(xs.size()));
  return s;
}

inline double relative_delta(double value, double baseline) {
  if (baseline == 0.0) return value == 0.0 ? 0.0 : (value > 0.0 ? INFINITY : -INFINITY);
  return (value - baseline) / baseline;
}

// Reports at the same position across schedulers must come from the same
// seed, workload and cluster.
inline Comparison compare(const std::vector<SchedulerRuns>& runs) {
  if (runs.empty()) throw ConfigError("compare: no schedulers");
  const auto& ref = runs.front().reports;
  if (ref.empty()) throw ConfigError("compare: scheduler '" + runs.front().scheduler + "' has no runs");
  for (const auto& r : runs) {
    if (r.reports.size() != ref.size())
      throw ConfigError("compare: scheduler '" + r.scheduler + "' has " +
                        std::to_string(r.reports.size()) + " runs, expected " +
                        std::to_string(ref.size()));
    for (std::size_t k = 0; k < ref.size(); ++k) {
      const auto& a = ref[k].header;
      const auto& b = r.reports[k].header;
      if (a.cluster_digest != b.cluster_digest)
        throw ConfigError("compare: run " + std::to_string(k) + " of '" + r.scheduler +
                          "' used a different cluster configuration");
      if (a.workload_digest != b.workload_digest || a.seed != b.seed)
        throw ConfigError("compare: run " + std::to_string(k) + " of '" + r.scheduler +
                          "' used a different workload or seed");
    }
  }
  Comparison out;
  for (const auto& r : runs) {
    ComparisonRow row;
    row.scheduler = r.scheduler;
    row.runs = r.reports.size();
    for (const auto& def : compared_metrics()) {
      std::vector<double> xs;
      for (const auto& rep : r.reports) xs.push_back(def.get(rep.metrics));
      row.stats.push_back(mean_std(xs));
    }
    out.rows.push_back(std::move(row));
  }
  auto base = std::ranges::find_if(out.rows, [](const auto& r) { return r.scheduler == "fifo"; });
  if (base == out.rows.end()) base = out.rows.begin();
  out.baseline = base->scheduler;
  const auto base_stats = base->stats;
  for (auto& row : out.rows)
    for (std::size_t i = 0; i < row.stats.size(); ++i)
      row.stats[i].delta = relative_delta(row.stats[i].mean, base_stats[i].mean);
  return out;
}

// One row per scheduler: scheduler,runs,<metric>_mean,<metric>_std,<metric>_delta,...
inline void write_comparison_csv(std::ostream& os, const Comparison& c) {
  os << "scheduler,runs";
  for (const auto& d : compared_metrics())
    os << ',' << d.name << "_mean," << d.name << "_std," << d.name << "_delta";
  os << '\n';
  for (const auto& row : c.rows) {
    os << row.scheduler << ',' << row.runs;
    for (const auto& s : row.stats)
      os << ',' << format_number(s.mean) << ',' << format_number(s.stddev) << ','
         << (s.delta ? format_number(*s.delta) : "");
    os << '\n';
  }
}

// Long format for sweeps: parameter,value,scheduler,metric,mean,std,delta.
inline void write_sweep_header(std::ostream& os) {
  os << "parameter,value,scheduler,metric,mean,std,delta\n";
}

inline void write_sweep_block(std::ostream& os, const std::string& parameter,
                              const std::string& value, const Comparison& c) {
  for (const auto& row : c.rows)
    for (std::size_t i = 0; i < row.stats.size(); ++i) {
      const auto& s = row.stats[i];
      os << parameter << ',' << value << ',' << row.scheduler << ','
         << compared_metrics()[i].name << ',' << format_number(s.mean) << ','
         << format_number(s.stddev) << ',' << (s.delta ? format_number(*s.delta) : "") << '\n';
    }
}

}  // namespace mrsim
