#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgeswarm/agents.hpp"
#include "edgeswarm/device.hpp"
#include "edgeswarm/errors.hpp"
#include "edgeswarm/geometry.hpp"
#include "edgeswarm/lifecycle.hpp"
#include "edgeswarm/network.hpp"
#include "edgeswarm/registry.hpp"
#include "edgeswarm/rng.hpp"

namespace edgeswarm {

// Every tunable default in one place. Scenario files override fields under
// "config"; the EDGESWARM_CONFIG environment file sits between the built-in
// defaults and the scenario.
struct SimConfig {
  RadioConfig radio;
  RetryPolicy retry;
  DeployPolicy deploy;
  BatteryParams battery;
  GpsParams gps;
  ImuParams imu;
  LifecycleConfig lifecycle;
  double backend_compute_s = 0.8;
  double tick_s = 1.0;
  std::optional<double> sever_cellular_at_s;  // experiment hook: kill all towers from t on

  bool operator==(const SimConfig&) const = default;

  nlohmann::json to_json() const {
    nlohmann::json j{{"radio", radio.to_json()},
                     {"retry", retry.to_json()},
                     {"deploy", deploy.to_json()},
                     {"battery", battery.to_json()},
                     {"gps", gps.to_json()},
                     {"imu", imu.to_json()},
                     {"lifecycle", lifecycle.to_json()},
                     {"backend_compute_s", backend_compute_s},
                     {"tick_s", tick_s}};
    if (sever_cellular_at_s) j["sever_cellular_at_s"] = *sever_cellular_at_s;
    return j;
  }

  // Partial override: absent fields keep their current values.
  void apply_json(const nlohmann::json& j) {
    if (j.contains("radio")) radio = RadioConfig::from_json(j["radio"], radio);
    if (j.contains("retry")) retry = RetryPolicy::from_json(j["retry"], retry);
    if (j.contains("deploy")) deploy = DeployPolicy::from_json(j["deploy"], deploy);
    if (j.contains("battery")) battery = BatteryParams::from_json(j["battery"], battery);
    if (j.contains("gps")) gps = GpsParams::from_json(j["gps"], gps);
    if (j.contains("imu")) imu = ImuParams::from_json(j["imu"], imu);
    if (j.contains("lifecycle")) lifecycle = LifecycleConfig::from_json(j["lifecycle"], lifecycle);
    backend_compute_s = j.value("backend_compute_s", backend_compute_s);
    tick_s = j.value("tick_s", tick_s);
    if (j.contains("sever_cellular_at_s") && !j["sever_cellular_at_s"].is_null()) {
      sever_cellular_at_s = j["sever_cellular_at_s"].get<double>();
    }
  }
};

struct Waypoint {
  double t_s = 0.0;
  Vec2 pos;
  bool operator==(const Waypoint&) const = default;
};

struct PreinstalledAgent {
  std::string agent_id;
  LifecycleState state = LifecycleState::Dormant;  // Dormant or Active
  bool operator==(const PreinstalledAgent&) const = default;
};

struct DeviceSpec {
  std::string device_id;
  Vec2 initial_position;
  double battery_pct = 100.0;
  std::uint64_t memory_capacity_bytes = 2ull << 30;
  bool credential = true;
  std::vector<Waypoint> waypoints;
  std::vector<PreinstalledAgent> preinstalled;
  std::optional<BatteryParams> battery_override;
  bool operator==(const DeviceSpec&) const = default;
};

struct ArrivalProcess {
  enum class Kind { Poisson, FixedInterval, Scripted };
  Kind kind = Kind::FixedInterval;
  double rate_per_s = 0.0;          // poisson
  double dt_s = 0.0;                // fixed-interval
  std::vector<double> times_s;      // scripted
  bool operator==(const ArrivalProcess&) const = default;
};

struct WorkloadSpec {
  Capability capability = Capability::DrugLabelClassification;
  std::string device_id;
  ArrivalProcess arrival;
  double acceptable_latency_s = 10.0;
  std::uint64_t payload_bytes = 500'000;  // task upload size (image)
  bool operator==(const WorkloadSpec&) const = default;
};

struct BuildingSpec {
  std::string id;
  Rect rect;
  bool operator==(const BuildingSpec&) const = default;
};

struct Scenario {
  int schema_version = 1;
  std::string scenario_id;
  double duration_s = 0.0;
  ArchMode arch_mode = ArchMode::Agent;
  std::optional<GeoPoint> origin;
  std::vector<CellTower> towers;
  std::vector<BuildingSpec> buildings;
  std::vector<DeviceSpec> devices;
  std::vector<WorkloadSpec> workloads;
  Catalog catalog;
  std::vector<RemoteService> remote_services;
  std::optional<P2PConfig> p2p;
  SimConfig config;
};

// ---------------------------------------------------------------------------
// Waypoint motion
// ---------------------------------------------------------------------------

// Piecewise-linear position along the waypoint script. Before the first
// waypoint the device sits at initial_position; after the last it stays put.
inline Vec2 position_at(const DeviceSpec& spec, double t_s) {
  if (spec.waypoints.empty()) return spec.initial_position;
  Vec2 prev_pos = spec.initial_position;
  double prev_t = 0.0;
  for (const auto& wp : spec.waypoints) {
    if (t_s <= wp.t_s) {
      double span = wp.t_s - prev_t;
      if (span <= 0.0) return wp.pos;
      double a = (t_s - prev_t) / span;
      return prev_pos + (wp.pos - prev_pos) * a;
    }
    prev_pos = wp.pos;
    prev_t = wp.t_s;
  }
  return spec.waypoints.back().pos;
}

// ---------------------------------------------------------------------------
// Task generation
// ---------------------------------------------------------------------------

// Deterministic arrival times in (0, duration], strictly increasing.
// Poisson arrivals consume one draw per inter-arrival gap.
inline std::vector<double> generate_tasks(const WorkloadSpec& spec, double duration_s,
                                          RngStream& arrival_stream) {
  std::vector<double> times;
  switch (spec.arrival.kind) {
    case ArrivalProcess::Kind::FixedInterval: {
      for (double t = spec.arrival.dt_s; t <= duration_s + 1e-9; t += spec.arrival.dt_s) {
        times.push_back(t);
      }
      break;
    }
    case ArrivalProcess::Kind::Poisson: {
      double t = arrival_stream.exponential(spec.arrival.rate_per_s);
      while (t <= duration_s) {
        times.push_back(t);
        t += arrival_stream.exponential(spec.arrival.rate_per_s);
      }
      break;
    }
    case ArrivalProcess::Kind::Scripted: {
      times = spec.arrival.times_s;
      break;
    }
  }
  return times;
}

// ---------------------------------------------------------------------------
// JSON (de)serialization
// ---------------------------------------------------------------------------

namespace scenario_io {

inline nlohmann::json vec2_to_json(Vec2 v) { return nlohmann::json::array({v.x, v.y}); }

inline Vec2 vec2_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) {
    throw ValidationError(path + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

inline nlohmann::json tower_to_json(const CellTower& t) {
  return {{"tower_id", t.id},
          {"lat", t.geo.lat},
          {"lon", t.geo.lon},
          {"rat", to_string(t.rat)},
          {"max_bandwidth_bps", t.max_bandwidth_bps},
          {"range_m", t.range_m},
          {"base_latency_s", t.base_latency_s}};
}

inline nlohmann::json arrival_to_json(const ArrivalProcess& a) {
  switch (a.kind) {
    case ArrivalProcess::Kind::Poisson:
      return {{"type", "poisson"}, {"rate_per_s", a.rate_per_s}};
    case ArrivalProcess::Kind::FixedInterval:
      return {{"type", "fixed-interval"}, {"dt_s", a.dt_s}};
    case ArrivalProcess::Kind::Scripted:
      return {{"type", "scripted"}, {"times_s", a.times_s}};
  }
  return {};
}

inline ArrivalProcess arrival_from_json(const nlohmann::json& j, const std::string& path) {
  ArrivalProcess a;
  std::string type = j.at("type").get<std::string>();
  if (type == "poisson") {
    a.kind = ArrivalProcess::Kind::Poisson;
    a.rate_per_s = j.at("rate_per_s").get<double>();
    if (a.rate_per_s <= 0) throw ValidationError(path + ".rate_per_s: must be > 0");
  } else if (type == "fixed-interval") {
    a.kind = ArrivalProcess::Kind::FixedInterval;
    a.dt_s = j.at("dt_s").get<double>();
    if (a.dt_s <= 0) throw ValidationError(path + ".dt_s: must be > 0");
  } else if (type == "scripted") {
    a.kind = ArrivalProcess::Kind::Scripted;
    a.times_s = j.at("times_s").get<std::vector<double>>();
    for (std::size_t i = 1; i < a.times_s.size(); ++i) {
      if (a.times_s[i] <= a.times_s[i - 1]) {
        throw ValidationError(path + ".times_s[" + std::to_string(i) +
                              "]: times must be strictly increasing");
      }
    }
  } else {
    throw ValidationError(path + ".type: unknown arrival type \"" + type + "\"");
  }
  return a;
}

}  // namespace scenario_io

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  using namespace scenario_io;
  nlohmann::json j;
  j["schema_version"] = sc.schema_version;
  j["scenario_id"] = sc.scenario_id;
  j["duration_s"] = sc.duration_s;
  j["arch_mode"] = to_string(sc.arch_mode);
  if (sc.origin) j["origin"] = {{"lat", sc.origin->lat}, {"lon", sc.origin->lon}};

  j["towers"] = nlohmann::json::array();
  for (const auto& t : sc.towers) j["towers"].push_back(tower_to_json(t));

  j["buildings"] = nlohmann::json::array();
  for (const auto& b : sc.buildings) {
    j["buildings"].push_back({{"id", b.id},
                              {"x_min", b.rect.x_min},
                              {"y_min", b.rect.y_min},
                              {"x_max", b.rect.x_max},
                              {"y_max", b.rect.y_max}});
  }

  j["devices"] = nlohmann::json::array();
  for (const auto& d : sc.devices) {
    nlohmann::json dj{{"device_id", d.device_id},
                      {"initial_position", vec2_to_json(d.initial_position)},
                      {"battery_pct", d.battery_pct},
                      {"memory_capacity_bytes", d.memory_capacity_bytes},
                      {"credential", d.credential}};
    dj["waypoints"] = nlohmann::json::array();
    for (const auto& wp : d.waypoints) {
      dj["waypoints"].push_back({{"t_s", wp.t_s}, {"pos", vec2_to_json(wp.pos)}});
    }
    if (!d.preinstalled.empty()) {
      dj["preinstalled"] = nlohmann::json::array();
      for (const auto& pa : d.preinstalled) {
        dj["preinstalled"].push_back({{"agent_id", pa.agent_id}, {"state", to_string(pa.state)}});
      }
    }
    if (d.battery_override) dj["battery_override"] = d.battery_override->to_json();
    j["devices"].push_back(std::move(dj));
  }

  j["workloads"] = nlohmann::json::array();
  for (const auto& w : sc.workloads) {
    j["workloads"].push_back({{"capability", to_string(w.capability)},
                              {"device_id", w.device_id},
                              {"arrival", arrival_to_json(w.arrival)},
                              {"acceptable_latency_s", w.acceptable_latency_s},
                              {"payload_bytes", w.payload_bytes}});
  }

  j["catalog"] = nlohmann::json::array();
  for (const auto& m : sc.catalog) j["catalog"].push_back(m.to_json());

  if (!sc.remote_services.empty()) {
    j["remote_services"] = nlohmann::json::array();
    for (const auto& s : sc.remote_services) j["remote_services"].push_back(s.to_json());
  }

  if (sc.p2p) j["p2p"] = sc.p2p->to_json();
  j["config"] = sc.config.to_json();
  return j;
}

// Parses and validates a scenario. `base_dir` resolves a towers_csv
// reference; env_config (EDGESWARM_CONFIG) overrides defaults but loses to
// the scenario's own config block.
inline Scenario scenario_from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = ".",
                                   const std::optional<nlohmann::json>& env_config = std::nullopt) {
  using namespace scenario_io;
  Scenario sc;
  try {
    sc.schema_version = j.value("schema_version", 1);
    if (sc.schema_version != 1) {
      throw ValidationError("schema_version: unsupported version " +
                            std::to_string(sc.schema_version));
    }
    sc.scenario_id = j.at("scenario_id").get<std::string>();
    sc.duration_s = j.at("duration_s").get<double>();
    if (sc.duration_s <= 0) throw ValidationError("duration_s: must be > 0");
    sc.arch_mode = arch_mode_from_string(j.at("arch_mode").get<std::string>());

    if (j.contains("origin")) {
      sc.origin = GeoPoint{j["origin"].at("lat").get<double>(), j["origin"].at("lon").get<double>()};
    }

    if (j.contains("towers_csv")) {
      std::filesystem::path p = base_dir / j["towers_csv"].get<std::string>();
      std::ifstream in(p);
      if (!in) throw ValidationError("towers_csv: cannot open " + p.string());
      auto ingest = ingest_topology(in, sc.origin);
      if (!ingest.row_errors.empty()) {
        throw ValidationError("towers_csv: line " + std::to_string(ingest.row_errors[0].line) +
                              ": " + ingest.row_errors[0].message);
      }
      sc.towers = std::move(ingest.towers);
      if (!sc.origin) sc.origin = ingest.origin;
    } else if (j.contains("towers")) {
      // inline towers share the CSV field names; projection about origin
      // (or the tower centroid when no origin is given)
      std::vector<GeoPoint> geos;
      for (std::size_t i = 0; i < j["towers"].size(); ++i) {
        const auto& tj = j["towers"][i];
        std::string path = "towers[" + std::to_string(i) + "]";
        CellTower t;
        t.id = tj.at("tower_id").get<std::string>();
        t.geo = {tj.at("lat").get<double>(), tj.at("lon").get<double>()};
        auto rat = rat_from_string(tj.at("rat").get<std::string>());
        if (!rat) throw ValidationError(path + ".rat: expected one of 2G/3G/4G/5G");
        t.rat = *rat;
        t.max_bandwidth_bps = tj.at("max_bandwidth_bps").get<double>();
        t.range_m = tj.at("range_m").get<double>();
        t.base_latency_s = tj.at("base_latency_s").get<double>();
        if (t.max_bandwidth_bps <= 0) throw ValidationError(path + ".max_bandwidth_bps: must be > 0");
        if (t.range_m <= 0) throw ValidationError(path + ".range_m: must be > 0");
        sc.towers.push_back(std::move(t));
        geos.push_back(sc.towers.back().geo);
      }
      if (!sc.origin && !geos.empty()) {
        GeoPoint c{0, 0};
        for (auto g : geos) { c.lat += g.lat; c.lon += g.lon; }
        sc.origin = GeoPoint{c.lat / geos.size(), c.lon / geos.size()};
      }
      if (sc.origin) {
        Projection proj(*sc.origin);
        for (auto& t : sc.towers) t.pos = proj.to_local(t.geo);
      }
      std::sort(sc.towers.begin(), sc.towers.end(),
                [](const CellTower& a, const CellTower& b) { return a.id < b.id; });
    }

    if (j.contains("buildings")) {
      for (std::size_t i = 0; i < j["buildings"].size(); ++i) {
        const auto& bj = j["buildings"][i];
        std::string path = "buildings[" + std::to_string(i) + "]";
        BuildingSpec b;
        b.id = bj.value("id", "building-" + std::to_string(i));
        b.rect = Rect{bj.at("x_min").get<double>(), bj.at("y_min").get<double>(),
                      bj.at("x_max").get<double>(), bj.at("y_max").get<double>()};
        if (b.rect.x_max < b.rect.x_min || b.rect.y_max < b.rect.y_min) {
          throw ValidationError(path + ": empty rectangle");
        }
        sc.buildings.push_back(std::move(b));
      }
    }

    for (std::size_t i = 0; i < j.at("devices").size(); ++i) {
      const auto& dj = j["devices"][i];
      std::string path = "devices[" + std::to_string(i) + "]";
      DeviceSpec d;
      d.device_id = dj.at("device_id").get<std::string>();
      d.initial_position = vec2_from_json(dj.at("initial_position"), path + ".initial_position");
      d.battery_pct = dj.value("battery_pct", 100.0);
      if (d.battery_pct < 0 || d.battery_pct > 100) {
        throw ValidationError(path + ".battery_pct: out of [0,100]");
      }
      d.memory_capacity_bytes = dj.value("memory_capacity_bytes", d.memory_capacity_bytes);
      d.credential = dj.value("credential", true);
      if (dj.contains("waypoints")) {
        double prev_t = -1.0;
        for (std::size_t k = 0; k < dj["waypoints"].size(); ++k) {
          const auto& wj = dj["waypoints"][k];
          std::string wpath = path + ".waypoints[" + std::to_string(k) + "]";
          Waypoint wp;
          wp.t_s = wj.at("t_s").get<double>();
          wp.pos = vec2_from_json(wj.at("pos"), wpath + ".pos");
          if (wp.t_s < 0.0) throw ValidationError(wpath + ".t_s: must be >= 0");
          if (wp.t_s > sc.duration_s) {
            throw ValidationError(wpath + ".t_s: " + std::to_string(wp.t_s) +
                                  " exceeds duration_s " + std::to_string(sc.duration_s));
          }
          if (wp.t_s <= prev_t) throw ValidationError(wpath + ".t_s: must be increasing");
          prev_t = wp.t_s;
          d.waypoints.push_back(wp);
        }
      }
      if (dj.contains("preinstalled")) {
        for (std::size_t k = 0; k < dj["preinstalled"].size(); ++k) {
          const auto& pj = dj["preinstalled"][k];
          PreinstalledAgent pa;
          pa.agent_id = pj.at("agent_id").get<std::string>();
          std::string st = pj.value("state", "Dormant");
          if (st == "Dormant") pa.state = LifecycleState::Dormant;
          else if (st == "Active") pa.state = LifecycleState::Active;
          else throw ValidationError(path + ".preinstalled[" + std::to_string(k) +
                                     "].state: expected Dormant or Active");
          d.preinstalled.push_back(std::move(pa));
        }
      }
      if (dj.contains("battery_override")) {
        d.battery_override = BatteryParams::from_json(dj["battery_override"]);
      }
      sc.devices.push_back(std::move(d));
    }
    if (sc.devices.empty()) throw ValidationError("devices: at least one device required");
    for (std::size_t i = 0; i < sc.devices.size(); ++i) {
      for (std::size_t k = i + 1; k < sc.devices.size(); ++k) {
        if (sc.devices[i].device_id == sc.devices[k].device_id) {
          throw ValidationError("devices[" + std::to_string(k) + "].device_id: duplicate \"" +
                                sc.devices[k].device_id + "\"");
        }
      }
    }
    for (std::size_t i = 0; i < sc.towers.size(); ++i) {
      for (std::size_t k = i + 1; k < sc.towers.size(); ++k) {
        if (sc.towers[i].id == sc.towers[k].id) {
          throw ValidationError("towers: duplicate tower_id \"" + sc.towers[k].id + "\"");
        }
      }
    }

    if (j.contains("workloads")) {
      for (std::size_t i = 0; i < j["workloads"].size(); ++i) {
        const auto& wj = j["workloads"][i];
        std::string path = "workloads[" + std::to_string(i) + "]";
        WorkloadSpec w;
        w.capability = capability_from_string(wj.at("capability").get<std::string>());
        w.device_id = wj.value("device_id", sc.devices.front().device_id);
        bool known = false;
        for (const auto& d : sc.devices) known = known || d.device_id == w.device_id;
        if (!known) throw ValidationError(path + ".device_id: unknown device \"" + w.device_id + "\"");
        w.arrival = scenario_io::arrival_from_json(wj.at("arrival"), path + ".arrival");
        for (double t : w.arrival.times_s) {
          if (t < 0 || t > sc.duration_s) {
            throw ValidationError(path + ".arrival.times_s: " + std::to_string(t) +
                                  " outside [0, duration]");
          }
        }
        w.acceptable_latency_s = wj.value("acceptable_latency_s", 10.0);
        w.payload_bytes = wj.value("payload_bytes", w.payload_bytes);
        sc.workloads.push_back(std::move(w));
      }
    }

    if (j.contains("catalog")) {
      for (const auto& mj : j["catalog"]) sc.catalog.push_back(AgentManifest::from_json(mj));
      validate_catalog(sc.catalog);
    }

    for (const auto& d : sc.devices) {
      for (const auto& pa : d.preinstalled) {
        bool found = false;
        for (const auto& m : sc.catalog) found = found || m.agent_id == pa.agent_id;
        if (!found) {
          throw ValidationError("devices: preinstalled agent \"" + pa.agent_id +
                                "\" not present in catalog");
        }
      }
    }

    if (j.contains("remote_services")) {
      for (const auto& sj : j["remote_services"]) {
        sc.remote_services.push_back(RemoteService::from_json(sj));
      }
    }

    if (j.contains("p2p")) sc.p2p = P2PConfig::from_json(j["p2p"]);

    if (env_config) sc.config.apply_json(*env_config);
    if (j.contains("config")) sc.config.apply_json(j["config"]);
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("scenario JSON: ") + ex.what());
  }
  return sc;
}

inline std::optional<nlohmann::json> env_config_overrides() {
  const char* path = std::getenv("EDGESWARM_CONFIG");
  if (!path || !*path) return std::nullopt;
  std::ifstream in(path);
  if (!in) throw ParseError(std::string("EDGESWARM_CONFIG: cannot open ") + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ParseError(std::string("EDGESWARM_CONFIG: invalid JSON in ") + path);
  return j;
}

inline Scenario load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open scenario file " + file.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ParseError("scenario file " + file.string() + " is not valid JSON");
  return scenario_from_json(j, file.parent_path(), env_config_overrides());
}

}  // namespace edgeswarm
