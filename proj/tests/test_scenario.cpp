#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "edgeswarm/scenario.hpp"

using namespace edgeswarm;

namespace {

nlohmann::json minimal_scenario_json() {
  return nlohmann::json::parse(R"({
    "schema_version": 1,
    "scenario_id": "minimal",
    "duration_s": 100,
    "arch_mode": "agent",
    "origin": {"lat": 34.05, "lon": -118.25},
    "towers": [
      {"tower_id": "T1", "lat": 34.0505, "lon": -118.2505, "rat": "4G",
       "max_bandwidth_bps": 50000000, "range_m": 1500, "base_latency_s": 0.03}
    ],
    "devices": [
      {"device_id": "d1", "initial_position": [0, 0]}
    ]
  })");
}

}  // namespace

TEST_CASE("a minimal scenario loads with defaults filled in") {
  auto sc = scenario_from_json(minimal_scenario_json());
  REQUIRE(sc.scenario_id == "minimal");
  REQUIRE(sc.duration_s == 100.0);
  REQUIRE(sc.arch_mode == ArchMode::Agent);
  REQUIRE(sc.towers.size() == 1);
  REQUIRE(sc.devices.size() == 1);
  REQUIRE(sc.workloads.empty());
  REQUIRE(sc.devices[0].battery_pct == 100.0);
  REQUIRE(sc.devices[0].credential);
  REQUIRE(sc.config.retry.max_attempts == 3);
  REQUIRE(sc.config.deploy.time_budget_s == 120.0);
  REQUIRE(sc.config.lifecycle.n_bad == 5);
  // tower projected into the local frame of the origin
  REQUIRE(sc.towers[0].pos.norm() > 10.0);
}

TEST_CASE("a waypoint past the scenario duration is rejected by name") {
  auto j = minimal_scenario_json();
  j["devices"][0]["waypoints"] = {{{"t_s", 150.0}, {"pos", {1, 1}}}};
  try {
    scenario_from_json(j);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    REQUIRE(std::string(e.what()).find("devices[0].waypoints[0].t_s") != std::string::npos);
  }
}

TEST_CASE("scenario validation catches the documented field errors") {
  SECTION("bad duration") {
    auto j = minimal_scenario_json();
    j["duration_s"] = 0;
    REQUIRE_THROWS_AS(scenario_from_json(j), ValidationError);
  }
  SECTION("unknown arch mode") {
    auto j = minimal_scenario_json();
    j["arch_mode"] = "hybrid";
    REQUIRE_THROWS_AS(scenario_from_json(j), ValidationError);
  }
  SECTION("workload referencing an unknown device") {
    auto j = minimal_scenario_json();
    j["workloads"] = {{{"capability", "drug-label-classification"},
                       {"device_id", "ghost"},
                       {"arrival", {{"type", "fixed-interval"}, {"dt_s", 10}}}}};
    REQUIRE_THROWS_AS(scenario_from_json(j), ValidationError);
  }
  SECTION("scripted arrivals must be strictly increasing") {
    auto j = minimal_scenario_json();
    j["workloads"] = {{{"capability", "drug-label-classification"},
                       {"device_id", "d1"},
                       {"arrival", {{"type", "scripted"}, {"times_s", {5.0, 5.0}}}}}};
    REQUIRE_THROWS_AS(scenario_from_json(j), ValidationError);
  }
  SECTION("scripted arrivals outside [0, duration]") {
    auto j = minimal_scenario_json();
    j["workloads"] = {{{"capability", "drug-label-classification"},
                       {"device_id", "d1"},
                       {"arrival", {{"type", "scripted"}, {"times_s", {5.0, 500.0}}}}}};
    REQUIRE_THROWS_AS(scenario_from_json(j), ValidationError);
  }
  SECTION("preinstalled agent missing from the catalog") {
    auto j = minimal_scenario_json();
    j["devices"][0]["preinstalled"] = {{{"agent_id", "ghost"}, {"state", "Dormant"}}};
    REQUIRE_THROWS_AS(scenario_from_json(j), ValidationError);
  }
  SECTION("missing required field is a ParseError") {
    auto j = minimal_scenario_json();
    j.erase("scenario_id");
    REQUIRE_THROWS_AS(scenario_from_json(j), ParseError);
  }
  SECTION("negative waypoint time") {
    auto j = minimal_scenario_json();
    j["devices"][0]["waypoints"] = {{{"t_s", -1.0}, {"pos", {1, 1}}}};
    REQUIRE_THROWS_AS(scenario_from_json(j), ValidationError);
  }
  SECTION("duplicate device ids") {
    auto j = minimal_scenario_json();
    j["devices"].push_back(j["devices"][0]);
    REQUIRE_THROWS_AS(scenario_from_json(j), ValidationError);
  }
  SECTION("duplicate tower ids") {
    auto j = minimal_scenario_json();
    j["towers"].push_back(j["towers"][0]);
    REQUIRE_THROWS_AS(scenario_from_json(j), ValidationError);
  }
}

TEST_CASE("a towers_csv reference resolves relative to the scenario file") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "edgeswarm_csv_test";
  fs::create_directories(dir / "data");
  {
    std::ofstream csv(dir / "data" / "towers.csv");
    csv << "tower_id,lat,lon,rat,max_bandwidth_bps,range_m,base_latency_s\n"
        << "T1,34.0505,-118.2505,4G,50000000,1500,0.03\n";
  }
  auto j = minimal_scenario_json();
  j.erase("towers");
  j["towers_csv"] = "data/towers.csv";
  {
    std::ofstream f(dir / "scenario.json");
    f << j.dump();
  }
  auto sc = load_scenario(dir / "scenario.json");
  REQUIRE(sc.towers.size() == 1);
  REQUIRE(sc.towers[0].id == "T1");
  // projected about the scenario origin, not the tower centroid
  REQUIRE(sc.towers[0].pos.norm() > 10.0);
  fs::remove_all(dir);
}

TEST_CASE("loading is idempotent and round-trips through emission") {
  std::mt19937_64 gen(2718);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
  };
  for (int iter = 0; iter < 30; ++iter) {
    auto j = minimal_scenario_json();
    j["scenario_id"] = "gen-" + std::to_string(iter);
    j["duration_s"] = std::floor(uniform(100, 2000));
    j["arch_mode"] = (gen() % 2) ? "agent" : "remote";
    int nwp = static_cast<int>(gen() % 4);
    auto wps = nlohmann::json::array();
    double t = 0;
    for (int k = 0; k < nwp; ++k) {
      t += std::floor(uniform(1, 20));
      wps.push_back({{"t_s", t}, {"pos", {std::floor(uniform(-500, 500)), std::floor(uniform(-500, 500))}}});
    }
    j["devices"][0]["waypoints"] = wps;
    j["buildings"] = {{{"id", "b0"},
                       {"x_min", -10.0}, {"y_min", -10.0},
                       {"x_max", std::floor(uniform(0, 50))}, {"y_max", std::floor(uniform(0, 50))}}};
    if (gen() % 2) {
      j["workloads"] = {{{"capability", "drug-label-classification"},
                         {"device_id", "d1"},
                         {"arrival", {{"type", "poisson"}, {"rate_per_s", 0.05}}},
                         {"acceptable_latency_s", 10.0},
                         {"payload_bytes", 250000}}};
    }
    if (gen() % 2) {
      j["p2p"] = {{"range_m", 80.0}, {"bandwidth_bps", 2e6},
                  {"loss_prob", 0.05}, {"base_latency_s", 0.01}};
    }
    if (gen() % 2) {
      j["config"] = {{"retry", {{"max_attempts", 4}}},
                     {"lifecycle", {{"n_bad", 3}}}};
    }

    Scenario s1 = scenario_from_json(j);
    nlohmann::json emitted = scenario_to_json(s1);
    Scenario s2 = scenario_from_json(emitted);
    REQUIRE(scenario_to_json(s2) == emitted);  // load(emit(S)) == S
  }
}

TEST_CASE("fixed-interval tasks: dt=60 over 300 s gives 60,120,180,240,300") {
  WorkloadSpec w;
  w.arrival.kind = ArrivalProcess::Kind::FixedInterval;
  w.arrival.dt_s = 60;
  RngStream arr("task-arrival", 1);
  auto times = generate_tasks(w, 300, arr);
  REQUIRE(times == std::vector<double>{60, 120, 180, 240, 300});
  REQUIRE(arr.draw_count() == 0);  // deterministic processes draw nothing
}

TEST_CASE("scripted empty workload yields no tasks") {
  WorkloadSpec w;
  w.arrival.kind = ArrivalProcess::Kind::Scripted;
  RngStream arr("task-arrival", 2);
  REQUIRE(generate_tasks(w, 300, arr).empty());
}

TEST_CASE("poisson arrivals: mean count over 1e3 seeds matches rate*duration within 4") {
  WorkloadSpec w;
  w.arrival.kind = ArrivalProcess::Kind::Poisson;
  w.arrival.rate_per_s = 2.0 / 60.0;  // 2 per minute
  const double duration = 3600.0;
  double total = 0;
  for (int seed = 0; seed < 1000; ++seed) {
    RngStream arr("task-arrival", seed);
    auto times = generate_tasks(w, duration, arr);
    total += static_cast<double>(times.size());
    // strictly increasing within (0, duration]
    double prev = 0.0;
    for (double t : times) {
      REQUIRE(t > prev);
      REQUIRE(t <= duration);
      prev = t;
    }
  }
  double mean = total / 1000.0;
  REQUIRE(std::abs(mean - 120.0) < 4.0);
}

TEST_CASE("waypoint interpolation is piecewise linear and clamps at both ends") {
  DeviceSpec spec;
  spec.initial_position = {0, 0};
  spec.waypoints = {{10, {100, 0}}, {20, {100, 50}}};
  REQUIRE(position_at(spec, 0.0) == Vec2{0, 0});
  REQUIRE(position_at(spec, 5.0) == Vec2{50, 0});
  REQUIRE(position_at(spec, 10.0) == Vec2{100, 0});
  REQUIRE(position_at(spec, 15.0) == Vec2{100, 25});
  REQUIRE(position_at(spec, 99.0) == Vec2{100, 50});
}

TEST_CASE("the built-in scenarios load and validate") {
  for (const char* name :
       {"paramedic_five_rights.json", "firefighter_indoor.json", "urban_walk_topology.json"}) {
    auto sc = load_scenario(std::string(EDGESWARM_SCENARIO_DIR) + "/" + name);
    REQUIRE(sc.duration_s > 0);
    REQUIRE_FALSE(sc.devices.empty());
    // two loads compare equal
    auto sc2 = load_scenario(std::string(EDGESWARM_SCENARIO_DIR) + "/" + name);
    REQUIRE(scenario_to_json(sc) == scenario_to_json(sc2));
  }
}

TEST_CASE("config overrides nest under the built-in defaults") {
  auto j = minimal_scenario_json();
  j["config"] = {{"retry", {{"per_attempt_timeout_s", 2.5}}},
                 {"gps", {{"sigma_indoor_m", 40.0}}}};
  auto sc = scenario_from_json(j);
  REQUIRE(sc.config.retry.per_attempt_timeout_s == 2.5);
  REQUIRE(sc.config.retry.max_attempts == 3);  // untouched default
  REQUIRE(sc.config.gps.sigma_indoor_m == 40.0);
  REQUIRE(sc.config.gps.sigma_outdoor_m == 4.0);
}

TEST_CASE("the shipped radio_defaults.json matches the built-in defaults") {
  std::ifstream in(std::string(EDGESWARM_SCENARIO_DIR) + "/../config/radio_defaults.json");
  REQUIRE(in.good());
  auto j = nlohmann::json::parse(in);
  auto from_file = RadioConfig::from_json(j.at("radio"));
  REQUIRE(from_file == RadioConfig{});
}

TEST_CASE("env config sits between defaults and the scenario block") {
  auto j = minimal_scenario_json();
  j["config"] = {{"retry", {{"max_attempts", 7}}}};
  nlohmann::json env = {{"retry", {{"max_attempts", 5}, {"per_attempt_timeout_s", 9.0}}}};
  auto sc = scenario_from_json(j, ".", env);
  REQUIRE(sc.config.retry.max_attempts == 7);           // scenario wins
  REQUIRE(sc.config.retry.per_attempt_timeout_s == 9.0);  // env fills the rest
}
