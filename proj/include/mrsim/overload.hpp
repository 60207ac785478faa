#pragma once

// Overload predicate over a node's resource usage. Used to label
// scheduling feedback: an overloaded node turns its pending feedback bad.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "mrsim/core.hpp"
#include "mrsim/error.hpp"

namespace mrsim {

enum class Metric { cpu_utilization, mem_utilization, free_mem_fraction };
enum class Comparator { greater, less };
enum class Combine { any, all };

struct OverloadClause {
  Metric metric = Metric::cpu_utilization;
  Comparator comparator = Comparator::greater;
  double threshold = 0.9;

  bool operator==(const OverloadClause&) const = default;
};

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::cpu_utilization: return "cpu_utilization";
    case Metric::mem_utilization: return "mem_utilization";
    case Metric::free_mem_fraction: return "free_mem_fraction";
  }
  return "?";
}

inline Metric parse_metric(std::string_view s) {
  if (s == "cpu_utilization" || s == "cpu") return Metric::cpu_utilization;
  if (s == "mem_utilization" || s == "mem") return Metric::mem_utilization;
  if (s == "free_mem_fraction" || s == "free_mem") return Metric::free_mem_fraction;
  throw ConfigError("unknown overload metric '" + std::string(s) +
                    "' (expected cpu_utilization, mem_utilization, free_mem_fraction)");
}

struct NodeMetrics {
  double cpu_utilization = 0.0;
  double mem_utilization = 0.0;
  double free_mem_fraction = 1.0;

  double get(Metric m) const {
    switch (m) {
      case Metric::cpu_utilization: return cpu_utilization;
      case Metric::mem_utilization: return mem_utilization;
      case Metric::free_mem_fraction: return free_mem_fraction;
    }
    return 0.0;
  }

  static NodeMetrics of(const NodeState& s) {
    NodeMetrics m;
    m.cpu_utilization = std::min(1.0, s.cpu_demand_sum / s.spec.cpu_capacity);
    m.mem_utilization = std::min(1.0, s.mem_used / s.spec.mem_capacity);
    m.free_mem_fraction = 1.0 - m.mem_utilization;
    return m;
  }
};

class OverloadRule {
 public:
  OverloadRule(std::vector<OverloadClause> clauses, Combine combine)
      : clauses_(std::move(clauses)), combine_(combine) {
    if (clauses_.empty()) throw ConfigError("overload rule needs at least one clause");
    for (const auto& c : clauses_)
      if (!(c.threshold >= 0.0 && c.threshold <= 1.0))
        throw ConfigError("overload threshold outside [0,1]");
  }

  // cpu_utilization > 0.9 OR free_mem_fraction < 0.1
  static OverloadRule default_rule() {
    return OverloadRule({{Metric::cpu_utilization, Comparator::greater, 0.9},
                         {Metric::free_mem_fraction, Comparator::less, 0.1}},
                        Combine::any);
  }

  // Compact form: "any:cpu_utilization>0.9,free_mem_fraction<0.1".
  // The "any:" / "all:" prefix is optional and defaults to any.
  static OverloadRule parse(std::string_view text) {
    std::string s;
    for (char ch : text)
      if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
    Combine combine = Combine::any;
    if (s.starts_with("any:")) {
      s.erase(0, 4);
    } else if (s.starts_with("all:")) {
      combine = Combine::all;
      s.erase(0, 4);
    }
    std::vector<OverloadClause> clauses;
    std::size_t pos = 0;
    while (pos <= s.size()) {
      const auto end = std::min(s.find(',', pos), s.size());
      const std::string part = s.substr(pos, end - pos);
      const auto op = part.find_first_of("<>");
      if (op == std::string::npos || op == 0 || op + 1 >= part.size())
        throw ConfigError("malformed overload clause '" + part + "'");
      OverloadClause c;
      c.metric = parse_metric(part.substr(0, op));
      c.comparator = part[op] == '>' ? Comparator::greater : Comparator::less;
      try {
        std::size_t used = 0;
        c.threshold = std::stod(part.substr(op + 1), &used);
        if (used != part.size() - op - 1) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigError("malformed overload threshold in '" + part + "'");
      }
      clauses.push_back(c);
      pos = end + 1;
    }
    return OverloadRule(std::move(clauses), combine);
  }

  std::string to_string() const {
    std::string out = combine_ == Combine::any ? "any:" : "all:";
    for (std::size_t i = 0; i < clauses_.size(); ++i) {
      if (i) out += ',';
      out += mrsim::to_string(clauses_[i].metric);
      out += clauses_[i].comparator == Comparator::greater ? '>' : '<';
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof buf, clauses_[i].threshold);
      out.append(buf, res.ptr);
    }
    return out;
  }

  bool evaluate(const NodeMetrics& m) const {
    const auto holds = [&](const OverloadClause& c) {
      const double v = m.get(c.metric);
      return c.comparator == Comparator::greater ? v > c.threshold : v < c.threshold;
    };
    return combine_ == Combine::any ? std::ranges::any_of(clauses_, holds)
                                    : std::ranges::all_of(clauses_, holds);
  }

  bool evaluate(const NodeState& s) const { return evaluate(NodeMetrics::of(s)); }

  const std::vector<OverloadClause>& clauses() const { return clauses_; }
  Combine combine() const { return combine_; }

  // Returns a copy with every clause on `metric` moved to `threshold`.
  OverloadRule with_threshold(Metric metric, double threshold) const {
    auto clauses = clauses_;
    bool any = false;
    for (auto& c : clauses)
      if (c.metric == metric) {
        c.threshold = threshold;
        any = true;
      }
    if (!any)
      throw ConfigError(std::string("overload rule has no clause on ") +
                        mrsim::to_string(metric));
    return OverloadRule(std::move(clauses), combine_);
  }

  bool operator==(const OverloadRule&) const = default;

 private:
  std::vector<OverloadClause> clauses_;
  Combine combine_;
};

}  // namespace mrsim
