#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgeswarm/agent_state.hpp"
#include "edgeswarm/agents.hpp"
#include "edgeswarm/errors.hpp"
#include "edgeswarm/geometry.hpp"
#include "edgeswarm/rng.hpp"
#include "edgeswarm/time.hpp"

namespace edgeswarm {

struct BatteryParams {
  double idle_pct_per_h = 2.0;
  double radio_pct_per_byte = 2e-8;

  bool operator==(const BatteryParams&) const = default;

  nlohmann::json to_json() const {
    return {{"idle_pct_per_h", idle_pct_per_h}, {"radio_pct_per_byte", radio_pct_per_byte}};
  }
  static BatteryParams from_json(const nlohmann::json& j) { return from_json(j, BatteryParams{}); }
  static BatteryParams from_json(const nlohmann::json& j, BatteryParams p) {
    p.idle_pct_per_h = j.value("idle_pct_per_h", p.idle_pct_per_h);
    p.radio_pct_per_byte = j.value("radio_pct_per_byte", p.radio_pct_per_byte);
    return p;
  }
};

struct GpsParams {
  double sigma_outdoor_m = 4.0;
  double sigma_indoor_m = 25.0;
  // reported error estimate = applicable sigma * U(scale_min, scale_max)
  double err_scale_min = 0.8;
  double err_scale_max = 1.2;

  bool operator==(const GpsParams&) const = default;

  nlohmann::json to_json() const {
    return {{"sigma_outdoor_m", sigma_outdoor_m},
            {"sigma_indoor_m", sigma_indoor_m},
            {"err_scale_min", err_scale_min},
            {"err_scale_max", err_scale_max}};
  }
  static GpsParams from_json(const nlohmann::json& j) { return from_json(j, GpsParams{}); }
  static GpsParams from_json(const nlohmann::json& j, GpsParams p) {
    p.sigma_outdoor_m = j.value("sigma_outdoor_m", p.sigma_outdoor_m);
    p.sigma_indoor_m = j.value("sigma_indoor_m", p.sigma_indoor_m);
    p.err_scale_min = j.value("err_scale_min", p.err_scale_min);
    p.err_scale_max = j.value("err_scale_max", p.err_scale_max);
    return p;
  }
};

struct ImuParams {
  double heading_sigma_rad = 0.05;
  double stride_jitter_frac = 0.05;  // stride reported within +-5%

  bool operator==(const ImuParams&) const = default;

  nlohmann::json to_json() const {
    return {{"heading_sigma_rad", heading_sigma_rad}, {"stride_jitter_frac", stride_jitter_frac}};
  }
  static ImuParams from_json(const nlohmann::json& j) { return from_json(j, ImuParams{}); }
  static ImuParams from_json(const nlohmann::json& j, ImuParams p) {
    p.heading_sigma_rad = j.value("heading_sigma_rad", p.heading_sigma_rad);
    p.stride_jitter_frac = j.value("stride_jitter_frac", p.stride_jitter_frac);
    return p;
  }
};

struct SensorReading {
  enum class Kind { GpsFix, ImuStep };
  SimTime t;
  Kind kind = Kind::GpsFix;
  // gps-fix
  Vec2 reported_position;
  double error_estimate_m = 0.0;
  // imu-step
  double heading_rad = 0.0;
  double stride_m = 0.0;
};

struct Task {
  std::string task_id;
  Capability capability = Capability::DrugLabelClassification;
  std::uint64_t payload_bytes = 0;
  double acceptable_latency_s = 10.0;
};

struct TaskOutcome {
  enum class Category { FirstTry, Retried, Timeout, Unacceptable };

  std::string task_id;
  Category category = Category::FirstTry;
  int attempts = 1;
  double latency_s = 0.0;
  bool correct = false;

  static std::string to_string(Category c) {
    switch (c) {
      case Category::FirstTry: return "first-try";
      case Category::Retried: return "retried";
      case Category::Timeout: return "timeout";
      case Category::Unacceptable: return "unacceptable";
    }
    return "?";
  }

  nlohmann::json to_json() const {
    return {{"task_id", task_id},
            {"category", to_string(category)},
            {"attempts", attempts},
            {"latency_s", latency_s},
            {"correct", correct}};
  }
};

struct InstalledAgent {
  AgentManifest manifest;
  LifecycleState state = LifecycleState::Requested;
  std::optional<SimTime> activated_at;  // set on first activation; TTL anchor
};

struct Pose {
  Vec2 position;
  double heading_rad = 0.0;
};

// The mobile/wearable device: battery and memory ledgers, install table,
// and localization runtime state. Memory is charged from Deploying(staged)
// through Expired and released exactly once, on Uninstalled.
struct Device {
  std::string id;
  Vec2 position;
  double battery_pct = 100.0;
  std::uint64_t memory_capacity_bytes = 2ull << 30;
  std::uint64_t memory_used_bytes = 0;
  bool indoor = false;
  bool credential = true;
  BatteryParams battery_params;
  std::map<std::string, InstalledAgent> installed;

  // localization runtime
  std::optional<Vec2> last_good_fix;
  int consecutive_bad_fixes = 0;
  std::optional<Pose> pdr_pose;

  bool alive() const { return battery_pct > 0.0; }

  std::uint64_t free_memory() const { return memory_capacity_bytes - memory_used_bytes; }

  // Stages an agent in Deploying state, memory charged up front.
  InstalledAgent& stage(const AgentManifest& m) {
    if (installed.count(m.agent_id)) {
      throw ValidationError("agent " + m.agent_id + " already present on " + id);
    }
    if (memory_used_bytes + m.memory_bytes > memory_capacity_bytes) {
      throw InsufficientMemory("agent " + m.agent_id + " needs " + std::to_string(m.memory_bytes) +
                               " B, device " + id + " has " + std::to_string(free_memory()) + " B free");
    }
    memory_used_bytes += m.memory_bytes;
    auto& rec = installed[m.agent_id];
    rec.manifest = m;
    rec.state = LifecycleState::Deploying;
    return rec;
  }

  // Direct install (stage + commit): the agent lands Dormant.
  InstalledAgent& install(const AgentManifest& m) {
    auto& rec = stage(m);
    rec.state = LifecycleState::Dormant;
    return rec;
  }

  InstalledAgent& agent(const std::string& agent_id) {
    auto it = installed.find(agent_id);
    if (it == installed.end()) throw UnknownAgent("no agent " + agent_id + " on device " + id);
    return it->second;
  }

  const InstalledAgent* find(const std::string& agent_id) const {
    auto it = installed.find(agent_id);
    return it == installed.end() ? nullptr : &it->second;
  }

  // First installed agent of the capability in one of the given states.
  InstalledAgent* find_by_capability(Capability cap,
                                     std::initializer_list<LifecycleState> states) {
    for (auto& [aid, rec] : installed) {
      if (rec.manifest.capability != cap) continue;
      for (auto s : states) {
        if (rec.state == s) return &rec;
      }
    }
    return nullptr;
  }

  struct Transition {
    LifecycleState from;
    LifecycleState to;
  };

  // Applies one lifecycle event. Entering Active anchors the TTL clock
  // (first activation only, so pause/resume cannot extend the lifetime);
  // entering Uninstalled releases the memory and drops the ledger row.
  Transition transition(const std::string& agent_id, LifecycleEvent ev, SimTime now) {
    auto& rec = agent(agent_id);
    auto next = lifecycle_next(rec.state, ev);
    if (!next) {
      throw IllegalTransition("agent " + agent_id + ": " + to_string(rec.state) +
                              " + " + to_string(ev));
    }
    Transition tr{rec.state, *next};
    rec.state = *next;
    if (*next == LifecycleState::Active && !rec.activated_at) rec.activated_at = now;
    if (*next == LifecycleState::Uninstalled) {
      memory_used_bytes -= rec.manifest.memory_bytes;
      installed.erase(agent_id);
    }
    return tr;
  }

  // Direct uninstall outside the lifecycle flow; the agent must exist.
  void uninstall(const std::string& agent_id) {
    auto& rec = agent(agent_id);
    memory_used_bytes -= rec.manifest.memory_bytes;
    installed.erase(agent_id);
  }
};

struct Activity {
  double dt_s = 0.0;
  int inferences = 0;
  double per_inference_energy_pct = 0.0;
  std::uint64_t radio_bytes = 0;
};

// Battery ledger step. Dormant agents contribute nothing by construction:
// there is no dormant term in the model at all. Floors at zero; an empty
// battery is a scenario outcome, not an error.
inline double step_battery(Device& d, const Activity& a) {
  double drain = a.dt_s / 3600.0 * d.battery_params.idle_pct_per_h +
                 a.inferences * a.per_inference_energy_pct +
                 static_cast<double>(a.radio_bytes) * d.battery_params.radio_pct_per_byte;
  d.battery_pct = std::max(0.0, d.battery_pct - drain);
  return d.battery_pct;
}

// Onboard inference: no network term anywhere. Correctness is one draw
// from the inference stream against the manifest accuracy.
inline TaskOutcome run_inference(Device& d, const std::string& agent_id, const Task& task,
                                 RngStream& inference_stream) {
  auto& rec = d.agent(agent_id);
  if (rec.state != LifecycleState::Active) {
    throw AgentNotActive("agent " + agent_id + " is " + to_string(rec.state));
  }
  if (rec.manifest.capability != task.capability) {
    throw CapabilityMismatch("agent " + agent_id + " provides " +
                             to_string(rec.manifest.capability) + ", task needs " +
                             to_string(task.capability));
  }
  if (!d.alive()) {
    throw AgentNotActive("device " + d.id + " battery is empty");
  }
  TaskOutcome out;
  out.task_id = task.task_id;
  out.category = TaskOutcome::Category::FirstTry;
  out.attempts = 1;
  out.latency_s = rec.manifest.per_inference_latency_s;
  out.correct = inference_stream.bernoulli(rec.manifest.accuracy);
  step_battery(d, Activity{0.0, 1, rec.manifest.per_inference_energy_pct, 0});
  return out;
}

// GPS fix: ground truth plus Gaussian noise, sigma chosen by the indoor
// predicate. Three draws per fix (noise x, noise y via Box-Muller pairs,
// error-estimate scale), always in that order.
inline SensorReading sample_gps(const Device& d, SimTime t, const GpsParams& p,
                                RngStream& gps_stream) {
  double sigma = d.indoor ? p.sigma_indoor_m : p.sigma_outdoor_m;
  SensorReading r;
  r.t = t;
  r.kind = SensorReading::Kind::GpsFix;
  r.reported_position = {d.position.x + gps_stream.gaussian(0.0, sigma),
                         d.position.y + gps_stream.gaussian(0.0, sigma)};
  r.error_estimate_m = sigma * gps_stream.uniform(p.err_scale_min, p.err_scale_max);
  return r;
}

// IMU step: absolute (compass-aided) heading with Gaussian noise, stride
// within +-jitter of truth.
inline SensorReading sample_imu(SimTime t, double true_heading_rad, double true_stride_m,
                                const ImuParams& p, RngStream& imu_stream) {
  SensorReading r;
  r.t = t;
  r.kind = SensorReading::Kind::ImuStep;
  r.heading_rad = true_heading_rad + imu_stream.gaussian(0.0, p.heading_sigma_rad);
  r.stride_m = true_stride_m * imu_stream.uniform(1.0 - p.stride_jitter_frac,
                                                  1.0 + p.stride_jitter_frac);
  return r;
}

// Dead reckoning: integrate the step, adopt the step's heading. Drift
// accumulates; there is no absolute correction.
inline Pose pdr_update(Pose pose, const SensorReading& step) {
  pose.position.x += step.stride_m * std::cos(step.heading_rad);
  pose.position.y += step.stride_m * std::sin(step.heading_rad);
  pose.heading_rad = step.heading_rad;
  return pose;
}

}  // namespace edgeswarm
