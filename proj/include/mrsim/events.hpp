#pragma once

// Run event log: what the engine did, in processing order. It is the only
// input to metric aggregation, and its JSONL rendering is the replay
// artifact compared byte for byte across runs.

#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrsim/core.hpp"
#include "mrsim/error.hpp"

namespace mrsim {

enum class EventKind { arrival, heartbeat, assign, finish, feedback };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::arrival: return "arrival";
    case EventKind::heartbeat: return "heartbeat";
    case EventKind::assign: return "assign";
    case EventKind::finish: return "finish";
    case EventKind::feedback: return "feedback";
  }
  return "?";
}

inline EventKind parse_event_kind(const std::string& s) {
  for (auto k : {EventKind::arrival, EventKind::heartbeat, EventKind::assign,
                 EventKind::finish, EventKind::feedback})
    if (s == to_string(k)) return k;
  throw ParseError(0, "unknown event kind '" + s + "'");
}

struct EventRecord {
  SimTime time = 0.0;
  EventKind kind = EventKind::heartbeat;
  std::optional<NodeId> node;
  std::optional<JobId> job;
  std::optional<TaskId> task;
  std::optional<Label> label;       // feedback
  std::optional<double> p_good;     // bayes assignments
  std::optional<bool> local;        // assign
  std::optional<bool> overloaded;   // heartbeat
  std::optional<std::size_t> tasks; // arrival: task count
  std::string user;                 // arrival
  std::string pool;                 // arrival

  bool operator==(const EventRecord&) const = default;
};

struct NodeSlots {
  NodeId node = 0;
  int slots = 1;
  bool operator==(const NodeSlots&) const = default;
};

struct EventLog {
  std::vector<NodeSlots> nodes;
  std::vector<EventRecord> records;
  bool truncated = false;
  bool stalled = false;

  int total_slots() const {
    int s = 0;
    for (const auto& n : nodes) s += n.slots;
    return s;
  }
  bool operator==(const EventLog&) const = default;
};

inline nlohmann::ordered_json to_json(const EventRecord& r) {
  nlohmann::ordered_json j;
  j["t"] = r.time;
  j["ev"] = to_string(r.kind);
  if (r.node) j["node"] = *r.node;
  if (r.job) j["job"] = *r.job;
  if (r.task) j["task"] = *r.task;
  if (r.tasks) j["tasks"] = *r.tasks;
  if (!r.user.empty()) j["user"] = r.user;
  if (!r.pool.empty()) j["pool"] = r.pool;
  if (r.local) j["local"] = *r.local;
  if (r.overloaded) j["overloaded"] = *r.overloaded;
  if (r.label) j["label"] = to_string(*r.label);
  if (r.p_good) j["p_good"] = *r.p_good;
  return j;
}

// Line-delimited records: a cluster line, one line per event, an end line.
inline void write_event_log(std::ostream& os, const EventLog& log) {
  nlohmann::ordered_json head;
  head["ev"] = "cluster";
  head["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : log.nodes) head["nodes"].push_back({{"node", n.node}, {"slots", n.slots}});
  os << head.dump() << '\n';
  for (const auto& r : log.records) os << to_json(r).dump() << '\n';
  nlohmann::ordered_json tail;
  tail["ev"] = "end";
  tail["truncated"] = log.truncated;
  tail["stalled"] = log.stalled;
  os << tail.dump() << '\n';
}

inline std::string event_log_text(const EventLog& log) {
  std::ostringstream os;
  write_event_log(os, log);
  return os.str();
}

}  // namespace mrsim
