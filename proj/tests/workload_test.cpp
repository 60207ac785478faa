#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "mrsim/mrsim.hpp"

namespace mrsim {
namespace {

std::vector<Job> parse(const std::string& text) {
  std::istringstream in(text);
  return read_trace(in);
}

const std::string kJobLine =
    R"({"job_id":3,"user":"a","pool":"p","priority":0,"arrival_time":1.5,)"
    R"("features":{"cpu":2,"mem":2,"io":1,"net":1},)"
    R"("tasks":[{"task_id":0,"work":4,"cpu_demand":0.2,"mem_demand":0.2,"preferred_nodes":[1]}]})";

TEST(Generate, RejectsEmptyWorkload) {
  WorkloadSpec spec;
  spec.job_count = 0;
  EXPECT_THROW(generate(spec), ConfigError);
  spec.job_count = 5;
  spec.locality_fanout = 4;
  EXPECT_THROW(generate(spec), ConfigError);
  spec.locality_fanout = 1;
  spec.heavy_fraction = 1.5;
  EXPECT_THROW(generate(spec), ConfigError);
}

TEST(Generate, SameSeedSameTrace) {
  WorkloadSpec spec;
  spec.seed = 11;
  EXPECT_EQ(trace_text(generate(spec)), trace_text(generate(spec)));
  auto other = spec;
  other.seed = 12;
  EXPECT_NE(trace_text(generate(spec)), trace_text(generate(other)));
}

TEST(Generate, AllHeavyMeansHighCpuLevels) {
  WorkloadSpec spec;
  spec.heavy_fraction = 1.0;
  for (const auto& j : generate(spec)) {
    EXPECT_GE(j.features.cpu_avg, 6);
    EXPECT_GE(j.features.io_avg, 6);
  }
  spec.heavy_fraction = 0.0;
  for (const auto& j : generate(spec)) EXPECT_LE(j.features.cpu_avg, 3);
}

TEST(Generate, OutputsAreValid) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    WorkloadSpec spec;
    spec.seed = seed;
    spec.job_count = 1 + static_cast<int>(seed % 40);
    spec.node_count = 1 + static_cast<int>(seed % 6);
    spec.locality_fanout = static_cast<int>(seed % (spec.node_count + 1));
    spec.max_priority = static_cast<int>(seed % 3);
    const auto jobs = generate(spec);
    ASSERT_EQ(jobs.size(), static_cast<std::size_t>(spec.job_count));
    std::set<JobId> ids;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const auto& j = jobs[i];
      EXPECT_NO_THROW(validate_job(j));
      EXPECT_TRUE(ids.insert(j.job_id).second);
      if (i) EXPECT_GE(j.arrival_time, jobs[i - 1].arrival_time);
      EXPECT_GE(j.arrival_time, 0.0);
      EXPECT_LE(j.arrival_time, spec.arrival_window);
      EXPECT_GE(static_cast<int>(j.tasks.size()), spec.tasks_min);
      EXPECT_LE(static_cast<int>(j.tasks.size()), spec.tasks_max);
      EXPECT_LE(j.priority, spec.max_priority);
      for (const auto& t : j.tasks) {
        EXPECT_EQ(static_cast<int>(t.preferred_nodes.size()), spec.locality_fanout);
        for (NodeId n : t.preferred_nodes) EXPECT_LT(static_cast<int>(n), spec.node_count);
        EXPECT_EQ(discretize_fraction(t.cpu_demand), j.features.cpu_avg);
      }
    }
  }
}

TEST(Trace, RoundTripsExactly) {
  WorkloadSpec spec;
  spec.max_priority = 2;
  spec.locality_fanout = 2;
  const auto jobs = generate(spec);
  const auto back = parse(trace_text(jobs));
  EXPECT_EQ(back, jobs);
  EXPECT_EQ(trace_text(back), trace_text(jobs));
}

TEST(Trace, EmptyAndBlankInputsAreValid) {
  EXPECT_TRUE(parse("").empty());
  EXPECT_EQ(parse("\n" + kJobLine + "\n   \n").size(), 1u);
}

TEST(Trace, ReportsJobAndLineOnBadFeature) {
  std::string bad = kJobLine;
  bad.replace(bad.find("\"cpu\":2"), 7, "\"cpu\":0");
  try {
    parse("\n" + bad + "\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("job 3"), std::string::npos) << e.what();
  }
}

TEST(Trace, RejectsUnknownFieldsAndDuplicates) {
  std::string extra = kJobLine;
  extra.insert(1, "\"colour\":1,");
  EXPECT_THROW(parse(extra), ParseError);
  EXPECT_THROW(parse(kJobLine + "\n" + kJobLine), ParseError);
  EXPECT_THROW(parse("{not json"), ParseError);
  std::string missing = kJobLine;
  missing.replace(missing.find("\"user\":\"a\","), 11, "");
  EXPECT_THROW(parse(missing), ParseError);
  std::string no_work = kJobLine;
  no_work.replace(no_work.find("\"work\":4"), 8, "\"work\":0");
  EXPECT_THROW(parse(no_work), ParseError);
}

TEST(Cluster, ParsesWithDefaults) {
  const auto doc = nlohmann::json::parse(R"({
    "nodes": [{"node_id":0,"cpu_capacity":1,"mem_capacity":2,"slots":2},
              {"node_id":1,"cpu_capacity":2,"mem_capacity":2,"slots":4,"heartbeat_interval":2}],
    "overload_rule": "all:cpu_utilization>0.8,mem_utilization>0.5",
    "fair_pools": {"pool0": {"min_share": 2, "weight": 2}},
    "capacity_queues": {"pool0": {"capacity": 0.5, "user_task_limit": 3},
                        "pool1": {"capacity": 0.5, "user_task_limit": 3}}
  })");
  const auto c = parse_cluster(doc);
  ASSERT_EQ(c.nodes.size(), 2u);
  EXPECT_EQ(c.nodes[0].heartbeat_interval, 1.0);
  EXPECT_EQ(c.nodes[1].heartbeat_phase, 1.0);
  EXPECT_EQ(c.total_slots(), 6);
  EXPECT_EQ(c.overload_rule.combine(), Combine::all);
  EXPECT_EQ(c.fair_pools.pools.at("pool0").min_share, 2);
  ASSERT_TRUE(c.capacity_queues);
  EXPECT_EQ(c.capacity_queues->queues.size(), 2u);

  const auto again = parse_cluster(nlohmann::json::parse(to_json(c).dump()));
  EXPECT_EQ(again.nodes, c.nodes);
  EXPECT_EQ(again.overload_rule, c.overload_rule);
}

TEST(Cluster, RejectsBadDocuments) {
  const auto bad = [](const char* text) { return parse_cluster(nlohmann::json::parse(text)); };
  EXPECT_THROW(bad(R"({"nodes": []})"), ParseError);
  EXPECT_THROW(bad(R"({"nodes": [{"node_id":0,"cpu_capacity":0,"mem_capacity":1,"slots":1}]})"),
               ParseError);
  EXPECT_THROW(bad(R"({"nodes": [{"node_id":0,"cpu_capacity":1,"mem_capacity":1}]})"), ParseError);
  EXPECT_THROW(bad(R"({"nodes": [{"node_id":0,"cpu_capacity":1,"mem_capacity":1,"slots":1}],
                       "speed": 3})"),
               ParseError);
  EXPECT_ANY_THROW(bad(R"({"nodes": [{"node_id":0,"cpu_capacity":1,"mem_capacity":1,"slots":1}],
                           "capacity_queues": {"a": {"capacity": 0.7, "user_task_limit": 1}}})"));
  EXPECT_ANY_THROW(bad(R"({"nodes": [{"node_id":0,"cpu_capacity":1,"mem_capacity":1,"slots":1}],
                           "fair_pools": {"a": {"min_share": 5}}})"));
}

}  // namespace
}  // namespace mrsim
