// mrsim: generate workloads, run and compare cluster schedulers.
//
// Exit codes: 0 success, 1 usage error, 2 configuration or input error,
// 3 run truncated (horizon reached or no schedulable work left).

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mrsim/mrsim.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitTruncated = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// "1..20", "1,2,5", "1..3,10".
std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string part;
  const auto to_u64 = [&](const std::string& s) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      throw UsageError("invalid seed '" + s + "'");
    }
    if (used != s.size() || s.empty() || s[0] == '-') throw UsageError("invalid seed '" + s + "'");
    return static_cast<std::uint64_t>(v);
  };
  while (std::getline(ss, part, ',')) {
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(to_u64(part));
      continue;
    }
    const auto lo = to_u64(part.substr(0, dots));
    const auto hi = to_u64(part.substr(dots + 2));
    if (hi < lo) throw UsageError("empty seed range '" + part + "'");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw UsageError("seed list is empty");
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

template <class Write>
void write_file(const std::string& path, Write write) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mrsim::ConfigError("cannot write '" + path + "'");
  write(out);
  if (!out) throw mrsim::ConfigError("failed writing '" + path + "'");
}

void add_workload_flags(CLI::App& cmd, mrsim::WorkloadSpec& spec, bool jobs_required) {
  auto* jobs = cmd.add_option("--jobs", spec.job_count, "Number of jobs")->check(CLI::PositiveNumber);
  if (jobs_required) jobs->required();
  cmd.add_option("--heavy-frac", spec.heavy_fraction, "Fraction of heavy jobs")
      ->check(CLI::Range(0.0, 1.0));
  cmd.add_option("--users", spec.users, "Distinct users")->check(CLI::PositiveNumber);
  cmd.add_option("--pools", spec.pools, "Distinct pools/queues")->check(CLI::PositiveNumber);
  cmd.add_option("--window", spec.arrival_window, "Arrival window length")
      ->check(CLI::NonNegativeNumber);
  cmd.add_option("--tasks-min", spec.tasks_min, "Minimum tasks per job")->check(CLI::PositiveNumber);
  cmd.add_option("--tasks-max", spec.tasks_max, "Maximum tasks per job")->check(CLI::PositiveNumber);
  cmd.add_option("--work-min", spec.work_min, "Minimum task work")->check(CLI::PositiveNumber);
  cmd.add_option("--work-max", spec.work_max, "Maximum task work")->check(CLI::PositiveNumber);
  cmd.add_option("--fanout", spec.locality_fanout, "Preferred nodes per task")
      ->check(CLI::NonNegativeNumber);
  cmd.add_option("--nodes", spec.node_count, "Node id range for preferred nodes")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--max-priority", spec.max_priority, "Largest job priority")
      ->check(CLI::NonNegativeNumber);
}

struct PolicyFlags {
  double alpha = 1.0;
  std::string all_bad = "withhold";
  std::string utility = "priority";
  std::string overload_rule;
  std::string classifier_init;
  std::optional<double> horizon;
};

void add_policy_flags(CLI::App& cmd, PolicyFlags& f) {
  cmd.add_option("--alpha", f.alpha, "Classifier smoothing constant")->check(CLI::PositiveNumber);
  cmd.add_option("--all-bad", f.all_bad, "Policy when every job is classified bad")
      ->check(CLI::IsMember({"withhold", "least-bad"}));
  cmd.add_option("--utility", f.utility, "Job utility for the bayes scheduler")
      ->check(CLI::IsMember({"constant", "priority", "age"}));
  cmd.add_option("--overload-rule", f.overload_rule,
                 "Overload rule, e.g. any:cpu_utilization>0.9,free_mem_fraction<0.1");
  cmd.add_option("--classifier-init", f.classifier_init,
                 "Start the bayes classifier from a saved report or classifier document");
  cmd.add_option("--horizon", f.horizon, "Stop simulated time here")->check(CLI::PositiveNumber);
}

mrsim::SchedulerConfig scheduler_config(const PolicyFlags& f) {
  mrsim::SchedulerConfig sc;
  sc.alpha = f.alpha;
  sc.all_bad = mrsim::parse_all_bad(f.all_bad);
  sc.utility.kind = mrsim::parse_utility(f.utility);
  if (!f.classifier_init.empty()) {
    std::ifstream in(f.classifier_init);
    if (!in) throw mrsim::ConfigError("cannot open classifier '" + f.classifier_init + "'");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw mrsim::ConfigError("malformed classifier document: " + std::string(e.what()));
    }
    if (doc.contains("classifier")) doc = doc["classifier"];
    if (doc.is_null()) throw mrsim::ConfigError("document carries no classifier state");
    auto c = mrsim::classifier_from_json(doc);
    if (c.feature_count() != mrsim::kDefaultFeatureCount || c.levels() != mrsim::kLevels)
      throw mrsim::ConfigError("classifier dimension mismatch: got " +
                               std::to_string(c.feature_count()) + " features x " +
                               std::to_string(c.levels()) + " levels, expected " +
                               std::to_string(mrsim::kDefaultFeatureCount) + " x " +
                               std::to_string(mrsim::kLevels));
    sc.initial_classifier = std::move(c);
  }
  return sc;
}

mrsim::ClusterConfig load_cluster_with(const std::string& path, const PolicyFlags& f) {
  auto cluster = mrsim::load_cluster(path);
  if (!f.overload_rule.empty()) cluster.overload_rule = mrsim::OverloadRule::parse(f.overload_rule);
  return cluster;
}

void print_comparison(const mrsim::Comparison& c) {
  const auto& defs = mrsim::compared_metrics();
  for (const auto& row : c.rows) {
    std::cout << row.scheduler << " (" << row.runs << " runs)";
    for (std::size_t i = 0; i < defs.size(); ++i)
      std::cout << "  " << defs[i].name << "=" << mrsim::format_number(row.stats[i].mean);
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MapReduce cluster scheduling simulator"};
  app.require_subcommand(1);

  // gen
  mrsim::WorkloadSpec gen_spec;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic workload trace");
  add_workload_flags(*gen, gen_spec, true);
  gen->add_option("--seed", gen_spec.seed, "Random seed")->required();
  gen->add_option("--out", gen_out, "Output trace path")->required();

  // run
  std::string run_workload, run_cluster, run_scheduler, run_out, run_events, run_jobs_csv;
  std::uint64_t run_seed = 0;
  PolicyFlags run_flags;
  auto* run = app.add_subcommand("run", "Run one simulation");
  run->add_option("--workload", run_workload, "Workload trace")->required();
  run->add_option("--cluster", run_cluster, "Cluster config")->required();
  run->add_option("--scheduler", run_scheduler, "fifo, fair, capacity or bayes")
      ->required()
      ->check(CLI::IsMember(mrsim::scheduler_names()));
  run->add_option("--seed", run_seed, "Run seed (recorded in the report)")->required();
  run->add_option("--out", run_out, "Report path")->required();
  run->add_option("--event-log", run_events, "Also write the event log here");
  run->add_option("--jobs-csv", run_jobs_csv, "Also write the per-job table here");
  add_policy_flags(*run, run_flags);

  // compare and sweep share their experiment flags
  struct ExperimentFlags {
    std::string schedulers = "fifo,bayes";
    std::string seeds;
    std::string cluster;
    std::string workload;
    std::string out;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    mrsim::WorkloadSpec spec;
    PolicyFlags policy;
  };
  const auto add_experiment_flags = [](CLI::App& cmd, ExperimentFlags& f) {
    cmd.add_option("--schedulers", f.schedulers, "Comma-separated scheduler list");
    cmd.add_option("--seeds", f.seeds, "Seeds, e.g. 1..20 or 1,2,3");
    cmd.add_option("--cluster", f.cluster, "Cluster config");
    cmd.add_option("--workload", f.workload, "Fixed workload trace (else generated per seed)");
    cmd.add_option("--out", f.out, "Output table path")->required();
    cmd.add_option("--threads", f.threads, "Parallel runs")->check(CLI::PositiveNumber);
    add_workload_flags(cmd, f.spec, false);
    add_policy_flags(cmd, f.policy);
  };
  ExperimentFlags cmp_flags;
  std::string cmp_reports;
  auto* cmp = app.add_subcommand("compare", "Compare schedulers across seeds");
  add_experiment_flags(*cmp, cmp_flags);
  cmp->add_option("--reports", cmp_reports,
                  "Compare existing report files (comma-separated) instead of running");

  ExperimentFlags sweep_flags;
  std::string sweep_param, sweep_values;
  auto* sweep = app.add_subcommand("sweep", "Sweep one parameter over a value list");
  add_experiment_flags(*sweep, sweep_flags);
  sweep->add_option("--param", sweep_param, "alpha, cpu-threshold, free-mem-threshold or heavy-frac")
      ->required()
      ->check(CLI::IsMember({"alpha", "cpu-threshold", "free-mem-threshold", "heavy-frac"}));
  sweep->add_option("--values", sweep_values, "Comma-separated values")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const auto make_plan = [&](const ExperimentFlags& f) {
    if (f.cluster.empty()) throw UsageError("--cluster is required");
    if (f.seeds.empty()) throw UsageError("--seeds is required");
    mrsim::ExperimentPlan plan;
    plan.cluster = load_cluster_with(f.cluster, f.policy);
    plan.scheduler = scheduler_config(f.policy);
    plan.schedulers = split_list(f.schedulers);
    if (plan.schedulers.empty()) throw UsageError("--schedulers is empty");
    for (const auto& s : plan.schedulers)
      if (std::ranges::find(mrsim::scheduler_names(), s) == mrsim::scheduler_names().end())
        throw UsageError("unknown scheduler '" + s + "' (valid: fifo, fair, capacity, bayes)");
    plan.seeds = parse_seed_list(f.seeds);
    if (!f.workload.empty()) {
      plan.workload = mrsim::load_trace(f.workload);
    } else {
      f.spec.validate();
      plan.workload = f.spec;
    }
    plan.horizon = f.policy.horizon;
    plan.threads = f.threads;
    return plan;
  };

  try {
    if (*gen) {
      const auto jobs = mrsim::generate(gen_spec);
      write_file(gen_out, [&](std::ostream& os) { mrsim::write_trace(os, jobs); });
      std::size_t tasks = 0;
      for (const auto& j : jobs) tasks += j.tasks.size();
      std::cout << "wrote " << jobs.size() << " jobs, " << tasks << " tasks to " << gen_out << '\n';
      return 0;
    }

    if (*run) {
      const auto cluster = load_cluster_with(run_cluster, run_flags);
      auto sc = scheduler_config(run_flags);
      sc.name = run_scheduler;
      const auto cfg = mrsim::make_run_config(cluster, sc, run_seed, run_flags.horizon);
      auto out = mrsim::simulate(cfg, mrsim::load_trace(run_workload));
      write_file(run_out, [&](std::ostream& os) { os << mrsim::to_json(out.report).dump(2) << '\n'; });
      if (!run_events.empty())
        write_file(run_events, [&](std::ostream& os) { mrsim::write_event_log(os, out.log); });
      if (!run_jobs_csv.empty())
        write_file(run_jobs_csv, [&](std::ostream& os) { mrsim::write_jobs_csv(os, out.report); });
      const auto& m = out.report.metrics;
      std::cout << run_scheduler << ": makespan=" << mrsim::format_number(m.makespan)
                << " overload_heartbeats=" << m.overload_heartbeats
                << " locality_rate=" << mrsim::format_number(m.locality_rate)
                << (m.truncated ? " (truncated)" : "") << '\n';
      return m.truncated ? kExitTruncated : 0;
    }

    if (*cmp) {
      mrsim::Comparison comparison;
      if (!cmp_reports.empty()) {
        std::vector<mrsim::SchedulerRuns> runs;
        for (const auto& path : split_list(cmp_reports)) {
          std::ifstream in(path);
          if (!in) throw mrsim::ConfigError("cannot open report '" + path + "'");
          nlohmann::json doc;
          try {
            doc = nlohmann::json::parse(in);
          } catch (const nlohmann::json::parse_error& e) {
            throw mrsim::ConfigError(path + ": malformed JSON: " + e.what());
          }
          auto rep = mrsim::report_from_json(doc);
          auto it = std::ranges::find_if(
              runs, [&](const auto& r) { return r.scheduler == rep.header.scheduler; });
          if (it == runs.end()) {
            runs.push_back({rep.header.scheduler, {}});
            it = runs.end() - 1;
          }
          it->reports.push_back(std::move(rep));
        }
        comparison = mrsim::compare(runs);
      } else {
        comparison = mrsim::run_experiment(make_plan(cmp_flags)).comparison;
      }
      write_file(cmp_flags.out,
                 [&](std::ostream& os) { mrsim::write_comparison_csv(os, comparison); });
      print_comparison(comparison);
      return 0;
    }

    if (*sweep) {
      const auto values = split_list(sweep_values);
      if (values.empty()) throw UsageError("--values is empty");
      const auto base = make_plan(sweep_flags);
      std::ostringstream table;
      mrsim::write_sweep_header(table);
      for (const auto& text : values) {
        double v = 0.0;
        try {
          std::size_t used = 0;
          v = std::stod(text, &used);
          if (used != text.size()) throw std::invalid_argument(text);
        } catch (const std::exception&) {
          throw UsageError("invalid sweep value '" + text + "'");
        }
        auto plan = base;
        if (sweep_param == "alpha") {
          plan.scheduler.alpha = v;
          if (!(v > 0.0)) throw UsageError("alpha must be > 0");
        } else if (sweep_param == "cpu-threshold") {
          plan.cluster.overload_rule =
              plan.cluster.overload_rule.with_threshold(mrsim::Metric::cpu_utilization, v);
        } else if (sweep_param == "free-mem-threshold") {
          plan.cluster.overload_rule =
              plan.cluster.overload_rule.with_threshold(mrsim::Metric::free_mem_fraction, v);
        } else if (sweep_param == "heavy-frac") {
          auto* spec = std::get_if<mrsim::WorkloadSpec>(&plan.workload);
          if (!spec) throw UsageError("heavy-frac sweeps need a generated workload, not --workload");
          spec->heavy_fraction = v;
          spec->validate();
        }
        const auto res = mrsim::run_experiment(plan);
        mrsim::write_sweep_block(table, sweep_param, text, res.comparison);
        std::cout << "[" << sweep_param << "=" << text << "]\n";
        print_comparison(res.comparison);
      }
      write_file(sweep_flags.out, [&](std::ostream& os) { os << table.str(); });
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const mrsim::ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mrsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mrsim::DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitUsage;
}
