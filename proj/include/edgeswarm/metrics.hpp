#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgeswarm/errors.hpp"
#include "edgeswarm/event_log.hpp"

namespace edgeswarm {

struct TaskStats {
  int count = 0;
  double first_try_frac = 0.0;
  double retried_frac = 0.0;
  double timeout_frac = 0.0;
  double unacceptable_frac = 0.0;
  double latency_p50_s = 0.0;
  double latency_p95_s = 0.0;
  double latency_p99_s = 0.0;
  double correct_frac = 0.0;
};

struct BatterySummary {
  std::optional<double> time_to_50pct_s;
  double final_pct = 0.0;
};

struct DeploymentStats {
  int count = 0;
  int succeeded = 0;
  int max_round_trips = 0;
  double mean_transfer_s = 0.0;
};

struct LifecycleCounts {
  int installs = 0;    // transitions into Dormant
  int swaps = 0;       // completed autonomous replacements
  int apoptoses = 0;   // transitions into Uninstalled
};

struct MetricsReport {
  std::string scenario_id;
  std::uint64_t seed = 0;
  std::string arch_mode;
  TaskStats tasks;
  std::map<std::string, BatterySummary> battery;  // per device
  DeploymentStats deployments;
  LifecycleCounts lifecycle;
  int user_interactions = 0;

  json to_json() const {
    json batt = json::object();
    for (const auto& [dev, b] : battery) {
      batt[dev] = {{"time_to_50pct_s", b.time_to_50pct_s ? json(*b.time_to_50pct_s) : json(nullptr)},
                   {"final_pct", b.final_pct}};
    }
    return {{"scenario_id", scenario_id},
            {"seed", seed},
            {"arch_mode", arch_mode},
            {"tasks",
             {{"count", tasks.count},
              {"first_try_frac", tasks.first_try_frac},
              {"retried_frac", tasks.retried_frac},
              {"timeout_frac", tasks.timeout_frac},
              {"unacceptable_frac", tasks.unacceptable_frac},
              {"latency_p50_s", tasks.latency_p50_s},
              {"latency_p95_s", tasks.latency_p95_s},
              {"latency_p99_s", tasks.latency_p99_s},
              {"correct_frac", tasks.correct_frac}}},
            {"battery", batt},
            {"deployments",
             {{"count", deployments.count},
              {"succeeded", deployments.succeeded},
              {"max_round_trips", deployments.max_round_trips},
              {"mean_transfer_s", deployments.mean_transfer_s}}},
            {"lifecycle",
             {{"installs", lifecycle.installs},
              {"swaps", lifecycle.swaps},
              {"apoptoses", lifecycle.apoptoses}}},
            {"user_interactions", user_interactions}};
  }
};

namespace detail {

// nearest-rank percentile over a sorted sample
inline double percentile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  std::size_t rank = static_cast<std::size_t>(std::ceil(p / 100.0 * sorted.size()));
  if (rank == 0) rank = 1;
  if (rank > sorted.size()) rank = sorted.size();
  return sorted[rank - 1];
}

}  // namespace detail

// Pure function of the log: any third party can recompute the report from
// the serialized JSONL alone.
inline MetricsReport collect(const EventLog& log) {
  MetricsReport r;
  r.scenario_id = log.scenario_id;
  r.seed = log.master_seed;

  std::vector<double> latencies;
  int correct = 0;
  int completed = 0;
  double transfer_total = 0.0;
  std::map<std::string, double> battery_final;
  std::map<std::string, std::optional<double>> battery_t50;

  for (const auto& e : log.entries) {
    if (e.kind == "scenario-start") {
      r.scenario_id = e.payload.value("scenario_id", r.scenario_id);
      r.arch_mode = e.payload.value("arch_mode", "");
      if (e.payload.contains("seed")) r.seed = e.payload["seed"].get<std::uint64_t>();
    } else if (e.kind == "task-outcome") {
      if (!e.payload.contains("category")) throw MalformedLog("task-outcome without category");
      ++r.tasks.count;
      std::string cat = e.payload["category"].get<std::string>();
      if (cat == "first-try") r.tasks.first_try_frac += 1;
      else if (cat == "retried") r.tasks.retried_frac += 1;
      else if (cat == "timeout") r.tasks.timeout_frac += 1;
      else if (cat == "unacceptable") r.tasks.unacceptable_frac += 1;
      else throw MalformedLog("unknown task category \"" + cat + "\"");
      latencies.push_back(e.payload.value("latency_s", 0.0));
      if (cat != "timeout") {
        ++completed;
        if (e.payload.value("correct", false)) ++correct;
      }
    } else if (e.kind == "device-sample") {
      double pct = e.payload.value("battery_pct", 0.0);
      battery_final[e.subject] = pct;
      auto& t50 = battery_t50[e.subject];
      if (!t50 && pct <= 50.0) t50 = e.time.seconds();
    } else if (e.kind == "deployment") {
      ++r.deployments.count;
      std::string outcome = e.payload.value("outcome", "");
      if (outcome == "installed") {
        ++r.deployments.succeeded;
        r.deployments.max_round_trips =
            std::max(r.deployments.max_round_trips, e.payload.value("round_trips", 0));
        transfer_total += e.payload.value("transfer_s", 0.0);
      }
    } else if (e.kind == "lifecycle") {
      std::string to = e.payload.value("to", "");
      if (to == "Dormant") ++r.lifecycle.installs;
      if (to == "Uninstalled") ++r.lifecycle.apoptoses;
    } else if (e.kind == "replacement-complete") {
      ++r.lifecycle.swaps;
    } else if (e.kind == "user-interaction") {
      ++r.user_interactions;
    }
  }

  if (r.tasks.count > 0) {
    r.tasks.first_try_frac /= r.tasks.count;
    r.tasks.retried_frac /= r.tasks.count;
    r.tasks.timeout_frac /= r.tasks.count;
    r.tasks.unacceptable_frac /= r.tasks.count;
    std::sort(latencies.begin(), latencies.end());
    r.tasks.latency_p50_s = detail::percentile(latencies, 50);
    r.tasks.latency_p95_s = detail::percentile(latencies, 95);
    r.tasks.latency_p99_s = detail::percentile(latencies, 99);
  }
  r.tasks.correct_frac = completed > 0 ? static_cast<double>(correct) / completed : 0.0;
  if (r.deployments.succeeded > 0) {
    r.deployments.mean_transfer_s = transfer_total / r.deployments.succeeded;
  }
  for (const auto& [dev, pct] : battery_final) {
    r.battery[dev] = BatterySummary{battery_t50[dev], pct};
  }
  return r;
}

struct ComparisonReport {
  MetricsReport a;
  MetricsReport b;
  json deltas;  // flattened numeric leaves, b - a

  json to_json() const {
    return {{"a", a.to_json()}, {"b", b.to_json()}, {"deltas", deltas}};
  }
};

namespace detail {

inline void numeric_leaves(const json& j, const std::string& prefix,
                           std::map<std::string, double>& out) {
  if (j.is_number()) {
    out[prefix] = j.get<double>();
  } else if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      numeric_leaves(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    }
  }
}

}  // namespace detail

// Pairs two runs of the same scenario and seed (the point is differing
// arch modes) and reports per-metric deltas b - a.
inline ComparisonReport compare(const MetricsReport& a, const MetricsReport& b) {
  if (a.scenario_id != b.scenario_id) {
    throw MismatchedRuns("scenario-id mismatch: \"" + a.scenario_id + "\" vs \"" +
                         b.scenario_id + "\"");
  }
  if (a.seed != b.seed) {
    throw MismatchedRuns("seed mismatch: " + std::to_string(a.seed) + " vs " +
                         std::to_string(b.seed));
  }
  ComparisonReport cmp;
  cmp.a = a;
  cmp.b = b;
  std::map<std::string, double> la, lb;
  detail::numeric_leaves(a.to_json(), "", la);
  detail::numeric_leaves(b.to_json(), "", lb);
  cmp.deltas = json::object();
  for (const auto& [k, va] : la) {
    auto it = lb.find(k);
    if (it != lb.end() && k != "seed") cmp.deltas[k] = it->second - va;
  }
  return cmp;
}

// ---------------------------------------------------------------------------
// Human-readable rendering
// ---------------------------------------------------------------------------

inline std::string render_text(const MetricsReport& r) {
  std::ostringstream os;
  auto line = [&](const std::string& k, const std::string& v) {
    os << "  " << k;
    for (std::size_t i = k.size(); i < 24; ++i) os << ' ';
    os << v << '\n';
  };
  os << "scenario " << r.scenario_id << "  seed " << r.seed << "  arch " << r.arch_mode << '\n';
  line("tasks", std::to_string(r.tasks.count));
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f / %.3f / %.3f / %.3f", r.tasks.first_try_frac,
                r.tasks.retried_frac, r.tasks.timeout_frac, r.tasks.unacceptable_frac);
  line("first/retry/tmo/unacc", buf);
  std::snprintf(buf, sizeof(buf), "%.3f / %.3f / %.3f s", r.tasks.latency_p50_s,
                r.tasks.latency_p95_s, r.tasks.latency_p99_s);
  line("latency p50/p95/p99", buf);
  std::snprintf(buf, sizeof(buf), "%.3f", r.tasks.correct_frac);
  line("correct frac", buf);
  for (const auto& [dev, b] : r.battery) {
    std::snprintf(buf, sizeof(buf), "final %.2f%%, to-50%% %s", b.final_pct,
                  b.time_to_50pct_s ? (std::to_string(*b.time_to_50pct_s) + " s").c_str() : "never");
    line("battery " + dev, buf);
  }
  std::snprintf(buf, sizeof(buf), "%d ok / %d, max RT %d, mean transfer %.3f s",
                r.deployments.succeeded, r.deployments.count, r.deployments.max_round_trips,
                r.deployments.mean_transfer_s);
  line("deployments", buf);
  std::snprintf(buf, sizeof(buf), "%d installs, %d swaps, %d apoptoses", r.lifecycle.installs,
                r.lifecycle.swaps, r.lifecycle.apoptoses);
  line("lifecycle", buf);
  line("user interactions", std::to_string(r.user_interactions));
  return os.str();
}

inline std::string render_text(const ComparisonReport& cmp) {
  std::ostringstream os;
  os << render_text(cmp.a) << '\n' << render_text(cmp.b) << '\n';
  os << "deltas (b - a):\n";
  for (auto it = cmp.deltas.begin(); it != cmp.deltas.end(); ++it) {
    double v = it.value().get<double>();
    if (v == 0.0) continue;
    os << "  " << it.key();
    for (std::size_t i = it.key().size(); i < 36; ++i) os << ' ';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+.4f", v);
    os << buf << '\n';
  }
  return os.str();
}

}  // namespace edgeswarm
