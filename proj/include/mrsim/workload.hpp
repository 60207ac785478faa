#pragma once

// Synthetic workload generation and the line-delimited trace format.
//
// Trace: one JSON object per line,
//   {"job_id":0,"user":"user0","pool":"pool0","priority":1,"arrival_time":2.5,
//    "features":{"cpu":7,"mem":8,"io":6,"net":9},
//    "tasks":[{"task_id":0,"work":12.0,"cpu_demand":0.7,"mem_demand":0.8,
//              "preferred_nodes":[0,2]}]}
// Blank lines are skipped. Unknown fields are rejected.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrsim/core.hpp"
#include "mrsim/error.hpp"

namespace mrsim {

struct WorkloadSpec {
  int job_count = 100;
  int users = 4;
  int pools = 2;
  double arrival_window = 100.0;  // arrivals uniform over [0, window]
  int tasks_min = 1;
  int tasks_max = 8;
  double work_min = 5.0;
  double work_max = 20.0;
  double heavy_fraction = 0.3;
  int locality_fanout = 1;  // preferred nodes per task
  int node_count = 3;       // preferred nodes are drawn from [0, node_count)
  int max_priority = 0;     // priorities uniform over [0, max_priority]
  std::uint64_t seed = 1;

  void validate() const {
    const auto fail = [](const std::string& why) { throw ConfigError("workload spec: " + why); };
    if (job_count < 1) fail("job_count must be >= 1");
    if (users < 1) fail("users must be >= 1");
    if (pools < 1) fail("pools must be >= 1");
    if (!(arrival_window >= 0.0)) fail("arrival window must be >= 0");
    if (tasks_min < 1 || tasks_max < tasks_min) fail("task count range is empty");
    if (!(work_min > 0.0) || work_max < work_min) fail("work range is empty");
    if (!(heavy_fraction >= 0.0 && heavy_fraction <= 1.0)) fail("heavy fraction outside [0,1]");
    if (node_count < 1) fail("node_count must be >= 1");
    if (locality_fanout < 0 || locality_fanout > node_count)
      fail("locality fanout must lie in [0, node_count]");
    if (max_priority < 0) fail("max_priority must be >= 0");
  }
};

inline constexpr double kHeavyDemandMin = 0.6;
inline constexpr double kHeavyDemandMax = 1.0;
inline constexpr double kLightDemandMin = 0.05;
inline constexpr double kLightDemandMax = 0.3;

// Heavy jobs demand [0.6,1.0] of a reference node's CPU and memory, light
// jobs [0.05,0.3]. Job feature levels are the discretized demands.
inline std::vector<Job> generate(const WorkloadSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const auto real = [&](double lo, double hi) {
    return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  const auto integer = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  std::vector<double> arrivals(static_cast<std::size_t>(spec.job_count));
  for (auto& a : arrivals) a = real(0.0, spec.arrival_window);
  std::ranges::sort(arrivals);

  std::vector<Job> jobs;
  jobs.reserve(arrivals.size());
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    Job j;
    j.job_id = i;
    const int user = integer(0, spec.users - 1);
    j.user = "user" + std::to_string(user);
    j.pool = "pool" + std::to_string(user % spec.pools);
    j.priority = integer(0, spec.max_priority);
    j.arrival_time = arrivals[i];
    const bool heavy = real(0.0, 1.0) < spec.heavy_fraction;
    const double lo = heavy ? kHeavyDemandMin : kLightDemandMin;
    const double hi = heavy ? kHeavyDemandMax : kLightDemandMax;
    const double cpu = real(lo, hi);
    const double mem = real(lo, hi);
    j.features.cpu_avg = discretize_fraction(cpu);
    j.features.mem_avg = discretize_fraction(mem);
    j.features.io_avg = heavy ? integer(6, 10) : integer(1, 3);
    j.features.net_avg = heavy ? integer(6, 10) : integer(1, 3);
    const int tasks = integer(spec.tasks_min, spec.tasks_max);
    for (int t = 0; t < tasks; ++t) {
      Task task;
      task.task_id = static_cast<TaskId>(t);
      task.job_id = j.job_id;
      task.work = real(spec.work_min, spec.work_max);
      task.cpu_demand = cpu;
      task.mem_demand = mem;
      std::vector<NodeId> all(static_cast<std::size_t>(spec.node_count));
      for (std::size_t n = 0; n < all.size(); ++n) all[n] = static_cast<NodeId>(n);
      std::shuffle(all.begin(), all.end(), rng);
      task.preferred_nodes.assign(all.begin(), all.begin() + spec.locality_fanout);
      std::ranges::sort(task.preferred_nodes);
      j.tasks.push_back(std::move(task));
    }
    jobs.push_back(std::move(j));
  }
  return jobs;
}

inline nlohmann::ordered_json to_json(const Job& j) {
  nlohmann::ordered_json o;
  o["job_id"] = j.job_id;
  o["user"] = j.user;
  o["pool"] = j.pool;
  o["priority"] = j.priority;
  o["arrival_time"] = j.arrival_time;
  o["features"] = {{"cpu", j.features.cpu_avg},
                   {"mem", j.features.mem_avg},
                   {"io", j.features.io_avg},
                   {"net", j.features.net_avg}};
  o["tasks"] = nlohmann::ordered_json::array();
  for (const auto& t : j.tasks) {
    o["tasks"].push_back({{"task_id", t.task_id},
                          {"work", t.work},
                          {"cpu_demand", t.cpu_demand},
                          {"mem_demand", t.mem_demand},
                          {"preferred_nodes", t.preferred_nodes}});
  }
  return o;
}

inline void write_trace(std::ostream& os, const std::vector<Job>& jobs) {
  for (const auto& j : jobs) os << to_json(j).dump() << '\n';
}

inline std::string trace_text(const std::vector<Job>& jobs) {
  std::ostringstream os;
  write_trace(os, jobs);
  return os.str();
}

namespace detail {

// Reads JSON documents field by field, rejecting anything unexpected.
class FieldReader {
 public:
  FieldReader(const nlohmann::json& obj, std::size_t line, std::string where,
              std::set<std::string> allowed)
      : obj_(obj), line_(line), where_(std::move(where)) {
    if (!obj.is_object()) fail("expected an object");
    for (const auto& [k, _] : obj.items())
      if (!allowed.contains(k)) fail("unknown field '" + k + "'");
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError(line_, where_.empty() ? why : where_ + ": " + why);
  }

  const nlohmann::json& at(const std::string& key) const {
    const auto it = obj_.find(key);
    if (it == obj_.end()) fail("missing field '" + key + "'");
    return *it;
  }
  bool has(const std::string& key) const { return obj_.contains(key); }

  std::uint64_t uint(const std::string& key) const {
    const auto& v = at(key);
    if (!v.is_number_unsigned()) fail("field '" + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
  }
  std::int64_t integer(const std::string& key) const {
    const auto& v = at(key);
    if (!v.is_number_integer()) fail("field '" + key + "' must be an integer");
    return v.get<std::int64_t>();
  }
  double number(const std::string& key) const {
    const auto& v = at(key);
    if (!v.is_number()) fail("field '" + key + "' must be a number");
    return v.get<double>();
  }
  std::string string(const std::string& key) const {
    const auto& v = at(key);
    if (!v.is_string()) fail("field '" + key + "' must be a string");
    return v.get<std::string>();
  }

 private:
  const nlohmann::json& obj_;
  std::size_t line_;
  std::string where_;
};

}  // namespace detail

inline Job parse_job_line(const std::string& text, std::size_t line) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line, std::string("malformed JSON: ") + e.what());
  }
  detail::FieldReader r(doc, line, "",
                        {"job_id", "user", "pool", "priority", "arrival_time", "features",
                         "tasks"});
  Job j;
  j.job_id = r.uint("job_id");
  const std::string where = "job " + std::to_string(j.job_id);
  detail::FieldReader jr(doc, line, where,
                         {"job_id", "user", "pool", "priority", "arrival_time", "features",
                          "tasks"});
  j.user = jr.string("user");
  j.pool = jr.string("pool");
  j.priority = static_cast<int>(jr.integer("priority"));
  j.arrival_time = jr.number("arrival_time");
  detail::FieldReader fr(jr.at("features"), line, where + " features",
                         {"cpu", "mem", "io", "net"});
  j.features = {static_cast<int>(fr.integer("cpu")), static_cast<int>(fr.integer("mem")),
                static_cast<int>(fr.integer("io")), static_cast<int>(fr.integer("net"))};
  const auto& tasks = jr.at("tasks");
  if (!tasks.is_array()) jr.fail("field 'tasks' must be an array");
  for (const auto& t : tasks) {
    detail::FieldReader tr(t, line, where + " task",
                           {"task_id", "work", "cpu_demand", "mem_demand", "preferred_nodes"});
    Task task;
    task.task_id = tr.uint("task_id");
    task.job_id = j.job_id;
    task.work = tr.number("work");
    task.cpu_demand = tr.number("cpu_demand");
    task.mem_demand = tr.number("mem_demand");
    const auto& pref = tr.at("preferred_nodes");
    if (!pref.is_array()) tr.fail("field 'preferred_nodes' must be an array");
    for (const auto& n : pref) {
      if (!n.is_number_unsigned() || n.get<std::uint64_t>() > UINT32_MAX)
        tr.fail("preferred node ids must be non-negative integers");
      task.preferred_nodes.push_back(n.get<NodeId>());
    }
    j.tasks.push_back(std::move(task));
  }
  try {
    validate_job(j);
  } catch (const ConfigError& e) {
    throw ParseError(line, e.what());
  }
  return j;
}

inline std::vector<Job> read_trace(std::istream& is) {
  std::vector<Job> jobs;
  std::set<JobId> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(is, text)) {
    ++line;
    if (std::ranges::all_of(text, [](unsigned char c) { return std::isspace(c); })) continue;
    Job j = parse_job_line(text, line);
    if (!seen.insert(j.job_id).second)
      throw ParseError(line, "job " + std::to_string(j.job_id) + ": duplicate job_id");
    jobs.push_back(std::move(j));
  }
  return jobs;
}

inline std::vector<Job> load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open workload trace '" + path + "'");
  return read_trace(in);
}

}  // namespace mrsim
