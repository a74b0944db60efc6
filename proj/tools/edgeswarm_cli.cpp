// Command-line front end: simulate scenarios, report metrics from event
// logs, compare runs, and validate topology/scenario inputs.

#include <cstdint>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "edgeswarm/edgeswarm.hpp"

namespace {

using namespace edgeswarm;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimError("IoError", "cannot open " + path + " for writing");
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SimError("IoError", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct SeedRange {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
};

SeedRange parse_seed_range(const std::string& s) {
  auto pos = s.find("..");
  if (pos == std::string::npos) {
    throw ValidationError("--seeds expects the form A..B, got \"" + s + "\"");
  }
  SeedRange r;
  r.lo = std::stoull(s.substr(0, pos));
  r.hi = std::stoull(s.substr(pos + 2));
  if (r.hi < r.lo) throw ValidationError("--seeds range is empty: " + s);
  return r;
}

std::string substitute_seed(const std::string& pattern, std::uint64_t seed) {
  auto pos = pattern.find("{seed}");
  if (pos == std::string::npos) return pattern;
  return pattern.substr(0, pos) + std::to_string(seed) + pattern.substr(pos + 6);
}

int cmd_simulate(const std::string& scenario_path, const std::string& arch,
                 std::optional<std::uint64_t> seed, const std::string& seeds,
                 const std::string& out, std::optional<double> sever_at) {
  Scenario sc = load_scenario(scenario_path);
  RunOptions base;
  if (!arch.empty()) base.arch_override = arch_mode_from_string(arch);
  base.sever_cellular_at_s = sever_at;

  std::vector<std::uint64_t> run_seeds;
  if (!seeds.empty()) {
    if (out.find("{seed}") == std::string::npos) {
      throw ValidationError("--seeds needs an --out pattern containing {seed}");
    }
    auto r = parse_seed_range(seeds);
    for (std::uint64_t s = r.lo; s <= r.hi; ++s) run_seeds.push_back(s);
  } else {
    run_seeds.push_back(seed.value_or(0));
  }

  // independent simulations; safe to fan out
  std::vector<std::future<void>> jobs;
  for (std::uint64_t s : run_seeds) {
    jobs.push_back(std::async(std::launch::async, [&, s]() {
      RunOptions opt = base;
      opt.seed = s;
      EventLog log = run_scenario(sc, opt);
      write_file(substitute_seed(out, s), log.to_jsonl());
    }));
  }
  for (auto& j : jobs) j.get();
  return 0;
}

int cmd_report(const std::string& log_path, const std::string& out,
               const std::string& battery_csv, bool text) {
  EventLog log = EventLog::from_jsonl(read_file(log_path));
  MetricsReport report = collect(log);
  std::string js = report.to_json().dump(2) + "\n";
  if (!out.empty()) {
    write_file(out, js);
  }
  if (!battery_csv.empty()) {
    std::string csv = "t_s,device_id,battery_pct,memory_used_bytes\n";
    for (const auto& e : log.entries) {
      if (e.kind != "device-sample") continue;
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%.6f,%s,%.9g,%llu\n", e.time.seconds(), e.subject.c_str(),
                    e.payload.value("battery_pct", 0.0),
                    static_cast<unsigned long long>(e.payload.value("memory_used_bytes", 0ull)));
      csv += buf;
    }
    write_file(battery_csv, csv);
  }
  if (text || out.empty()) {
    std::cout << (text ? render_text(report) : js);
  }
  return 0;
}

int cmd_compare(const std::string& a_path, const std::string& b_path, const std::string& out) {
  MetricsReport a = collect(EventLog::from_jsonl(read_file(a_path)));
  MetricsReport b = collect(EventLog::from_jsonl(read_file(b_path)));
  ComparisonReport cmp = compare(a, b);
  std::string js = cmp.to_json().dump(2) + "\n";
  if (!out.empty()) write_file(out, js);
  std::cout << render_text(cmp);
  return 0;
}

int cmd_topology_ingest(const std::string& csv_path, const std::string& out) {
  std::ifstream in(csv_path);
  if (!in) throw SimError("IoError", "cannot open " + csv_path);
  auto result = ingest_topology(in);
  for (const auto& err : result.row_errors) {
    std::cerr << csv_path << ":" << err.line << ": " << err.message << "\n";
  }
  std::cout << result.towers.size() << " towers, " << result.row_errors.size()
            << " bad rows\n";
  if (!out.empty()) write_file(out, emit_topology(result.towers));
  return result.row_errors.empty() ? 0 : 1;
}

int cmd_scenario_validate(const std::string& path) {
  Scenario sc = load_scenario(path);
  std::cout << "ok: " << sc.scenario_id << " (" << sc.devices.size() << " devices, "
            << sc.towers.size() << " towers, " << sc.workloads.size() << " workloads, "
            << sc.duration_s << " s)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edgeswarm: discrete-event simulator for edge AI communication architectures"};
  app.require_subcommand(1);

  // simulate
  std::string scenario_path, arch, seeds, out = "run.jsonl";
  std::optional<std::uint64_t> seed;
  std::optional<double> sever_at;
  auto* simulate = app.add_subcommand("simulate", "run a scenario and write the event log");
  simulate->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  simulate->add_option("--arch", arch, "override arch mode (remote|agent)");
  simulate->add_option("--seed", seed, "master seed (default 0)");
  simulate->add_option("--seeds", seeds, "seed range A..B, fans out in parallel");
  simulate->add_option("--out", out, "output event log path; {seed} substituted");
  simulate->add_option("--sever-at", sever_at, "cut all cellular links from this time (s)");

  // report
  std::string log_path, report_out, battery_csv;
  bool text = false;
  auto* report = app.add_subcommand("report", "compute metrics from an event log");
  report->add_option("--log", log_path, "event log (jsonl)")->required();
  report->add_option("--out", report_out, "write report JSON here");
  report->add_option("--battery-csv", battery_csv, "write battery/memory trace CSV here");
  report->add_flag("--text", text, "print the human-readable table");

  // compare
  std::string log_a, log_b, cmp_out;
  auto* cmp = app.add_subcommand("compare", "compare two runs of one scenario+seed");
  cmp->add_option("--log-a", log_a, "baseline event log")->required();
  cmp->add_option("--log-b", log_b, "candidate event log")->required();
  cmp->add_option("--out", cmp_out, "write comparison JSON here");

  // topology ingest
  std::string csv_path, topo_out;
  auto* topology = app.add_subcommand("topology", "topology utilities");
  auto* ingest = topology->add_subcommand("ingest", "validate/normalize a towers CSV");
  ingest->add_option("--csv", csv_path, "towers CSV")->required();
  ingest->add_option("--out", topo_out, "write the normalized CSV here");

  // scenario validate
  std::string validate_path;
  auto* scenario = app.add_subcommand("scenario", "scenario utilities");
  auto* validate = scenario->add_subcommand("validate", "parse and validate a scenario file");
  validate->add_option("--scenario", validate_path, "scenario JSON file")->required();

  try {
    app.parse(argc, argv);
    if (app.got_subcommand(simulate)) {
      return cmd_simulate(scenario_path, arch, seed, seeds, out, sever_at);
    }
    if (app.got_subcommand(report)) {
      return cmd_report(log_path, report_out, battery_csv, text);
    }
    if (app.got_subcommand(cmp)) {
      return cmd_compare(log_a, log_b, cmp_out);
    }
    if (app.got_subcommand(topology)) {
      if (topology->got_subcommand(ingest)) return cmd_topology_ingest(csv_path, topo_out);
      std::cerr << "topology: missing subcommand (try: ingest)\n";
      return 1;
    }
    if (app.got_subcommand(scenario)) {
      if (scenario->got_subcommand(validate)) return cmd_scenario_validate(validate_path);
      std::cerr << "scenario: missing subcommand (try: validate)\n";
      return 1;
    }
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const edgeswarm::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const edgeswarm::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const edgeswarm::MalformedHeader& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const edgeswarm::MalformedLog& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const edgeswarm::MismatchedRuns& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}
