#pragma once

// Cluster configuration document (JSON):
//
//   {
//     "nodes": [{"node_id": 0, "cpu_capacity": 1.0, "mem_capacity": 1.0, "slots": 4,
//                "heartbeat_interval": 1.0, "heartbeat_phase": 0.0}],
//     "overload_rule": "any:cpu_utilization>0.9,free_mem_fraction<0.1",
//     "fair_pools": {"pool0": {"min_share": 2, "weight": 1.0}},
//     "capacity_queues": {"pool0": {"capacity": 1.0, "user_task_limit": 4}}
//   }
//
// Only "nodes" is required. heartbeat_phase defaults to
// index * interval / node_count.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrsim/core.hpp"
#include "mrsim/engine.hpp"
#include "mrsim/overload.hpp"
#include "mrsim/schedulers.hpp"
#include "mrsim/workload.hpp"

namespace mrsim {

struct ClusterConfig {
  std::vector<NodeSpec> nodes;
  OverloadRule overload_rule = OverloadRule::default_rule();
  FairPoolConfig fair_pools;
  std::optional<CapacityQueueConfig> capacity_queues;

  int total_slots() const {
    int s = 0;
    for (const auto& n : nodes) s += n.slots;
    return s;
  }
};

inline nlohmann::ordered_json to_json(const OverloadRule& rule) {
  nlohmann::ordered_json o;
  o["combine"] = rule.combine() == Combine::any ? "any" : "all";
  o["clauses"] = nlohmann::ordered_json::array();
  for (const auto& c : rule.clauses())
    o["clauses"].push_back({{"metric", to_string(c.metric)},
                            {"op", c.comparator == Comparator::greater ? ">" : "<"},
                            {"threshold", c.threshold}});
  return o;
}

inline nlohmann::ordered_json to_json(const ClusterConfig& c) {
  nlohmann::ordered_json o;
  o["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : c.nodes)
    o["nodes"].push_back({{"node_id", n.node_id},
                          {"cpu_capacity", n.cpu_capacity},
                          {"mem_capacity", n.mem_capacity},
                          {"slots", n.slots},
                          {"heartbeat_interval", n.heartbeat_interval},
                          {"heartbeat_phase", n.heartbeat_phase}});
  o["overload_rule"] = to_json(c.overload_rule);
  o["fair_pools"] = nlohmann::ordered_json::object();
  for (const auto& [name, p] : c.fair_pools.pools)
    o["fair_pools"][name] = {{"min_share", p.min_share}, {"weight", p.weight}};
  if (c.capacity_queues) {
    o["capacity_queues"] = nlohmann::ordered_json::object();
    for (const auto& [name, q] : c.capacity_queues->queues)
      o["capacity_queues"][name] = {{"capacity", q.capacity},
                                    {"user_task_limit", q.user_task_limit}};
  }
  return o;
}

inline OverloadRule parse_overload_rule(const nlohmann::json& v) {
  if (v.is_string()) return OverloadRule::parse(v.get<std::string>());
  detail::FieldReader r(v, 0, "overload_rule", {"combine", "clauses"});
  Combine combine = Combine::any;
  if (r.has("combine")) {
    const auto s = r.string("combine");
    if (s == "all") combine = Combine::all;
    else if (s != "any") r.fail("combine must be 'any' or 'all'");
  }
  const auto& clauses = r.at("clauses");
  if (!clauses.is_array()) r.fail("clauses must be an array");
  std::vector<OverloadClause> out;
  for (const auto& c : clauses) {
    detail::FieldReader cr(c, 0, "overload clause", {"metric", "op", "threshold"});
    OverloadClause clause;
    clause.metric = parse_metric(cr.string("metric"));
    const auto op = cr.string("op");
    if (op != ">" && op != "<") cr.fail("op must be '>' or '<'");
    clause.comparator = op == ">" ? Comparator::greater : Comparator::less;
    clause.threshold = cr.number("threshold");
    out.push_back(clause);
  }
  return OverloadRule(std::move(out), combine);
}

inline ClusterConfig parse_cluster(const nlohmann::json& doc) {
  detail::FieldReader r(doc, 0, "cluster",
                        {"nodes", "overload_rule", "fair_pools", "capacity_queues"});
  ClusterConfig c;
  const auto& nodes = r.at("nodes");
  if (!nodes.is_array() || nodes.empty()) r.fail("nodes must be a non-empty array");
  std::vector<bool> phase_given;
  for (const auto& n : nodes) {
    detail::FieldReader nr(n, 0, "node",
                           {"node_id", "cpu_capacity", "mem_capacity", "slots",
                            "heartbeat_interval", "heartbeat_phase"});
    NodeSpec s;
    s.node_id = static_cast<NodeId>(nr.uint("node_id"));
    s.cpu_capacity = nr.number("cpu_capacity");
    s.mem_capacity = nr.number("mem_capacity");
    s.slots = static_cast<int>(nr.integer("slots"));
    s.heartbeat_interval = nr.has("heartbeat_interval") ? nr.number("heartbeat_interval") : 1.0;
    phase_given.push_back(nr.has("heartbeat_phase"));
    if (nr.has("heartbeat_phase")) s.heartbeat_phase = nr.number("heartbeat_phase");
    c.nodes.push_back(s);
  }
  c.nodes = with_default_phases(std::move(c.nodes), phase_given);
  try {
    for (const auto& n : c.nodes) validate_node(n);
  } catch (const ConfigError& e) {
    throw ParseError(0, e.what());
  }
  if (r.has("overload_rule")) c.overload_rule = parse_overload_rule(r.at("overload_rule"));
  if (r.has("fair_pools")) {
    const auto& pools = r.at("fair_pools");
    if (!pools.is_object()) r.fail("fair_pools must be an object");
    for (const auto& [name, p] : pools.items()) {
      detail::FieldReader pr(p, 0, "pool " + name, {"min_share", "weight"});
      PoolParams params;
      if (pr.has("min_share")) params.min_share = static_cast<int>(pr.integer("min_share"));
      if (pr.has("weight")) params.weight = pr.number("weight");
      c.fair_pools.pools[name] = params;
    }
    c.fair_pools.validate(c.total_slots());
  }
  if (r.has("capacity_queues")) {
    const auto& queues = r.at("capacity_queues");
    if (!queues.is_object()) r.fail("capacity_queues must be an object");
    CapacityQueueConfig cq;
    for (const auto& [name, q] : queues.items()) {
      detail::FieldReader qr(q, 0, "queue " + name, {"capacity", "user_task_limit"});
      QueueParams params;
      params.capacity = qr.number("capacity");
      params.user_task_limit = static_cast<int>(qr.integer("user_task_limit"));
      cq.queues[name] = params;
    }
    cq.validate();
    c.capacity_queues = std::move(cq);
  }
  return c;
}

inline ClusterConfig load_cluster(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open cluster config '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, path + ": malformed JSON: " + e.what());
  }
  return parse_cluster(doc);
}

}  // namespace mrsim
