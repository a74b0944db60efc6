#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgeswarm/agent_state.hpp"
#include "edgeswarm/device.hpp"
#include "edgeswarm/errors.hpp"
#include "edgeswarm/registry.hpp"
#include "edgeswarm/time.hpp"

namespace edgeswarm {

// Sink for events produced by lifecycle operations; the runner binds this
// to Simulator::emit, unit tests bind it to a plain vector.
using EventEmitter =
    std::function<void(const std::string& kind, const std::string& subject, const nlohmann::json& payload)>;

inline void emit_nothing(const std::string&, const std::string&, const nlohmann::json&) {}

struct LifecycleConfig {
  int n_bad = 5;            // consecutive bad readings before a pause
  double e_max_m = 15.0;    // GPS error estimate above this is "bad"
  double sweep_period_s = 60.0;

  bool operator==(const LifecycleConfig&) const = default;

  nlohmann::json to_json() const {
    return {{"n_bad", n_bad}, {"e_max_m", e_max_m}, {"sweep_period_s", sweep_period_s}};
  }
  static LifecycleConfig from_json(const nlohmann::json& j) { return from_json(j, LifecycleConfig{}); }
  static LifecycleConfig from_json(const nlohmann::json& j, LifecycleConfig c) {
    c.n_bad = j.value("n_bad", c.n_bad);
    c.e_max_m = j.value("e_max_m", c.e_max_m);
    c.sweep_period_s = j.value("sweep_period_s", c.sweep_period_s);
    return c;
  }
};

struct SensorQualityVerdict {
  bool degraded = false;
  int consecutive_bad = 0;
  double metric = 0.0;  // the error estimate that was judged
};

struct ReplacementRequest {
  std::string requesting_agent_id;
  std::string device_id;
  Capability desired_capability = Capability::Localization;
  std::string reason;
  bool user_interaction = false;  // must stay false: replacement is autonomous

  nlohmann::json to_json() const {
    return {{"requesting_agent_id", requesting_agent_id},
            {"device_id", device_id},
            {"desired_capability", to_string(desired_capability)},
            {"reason", reason},
            {"user_interaction", user_interaction}};
  }
};

// Applies a lifecycle event and records it. This is the logged form of
// Device::transition; every state change in a simulation goes through here.
inline LifecycleState transition(Device& device, const std::string& agent_id, LifecycleEvent ev,
                                 SimTime now, const std::string& reason,
                                 const EventEmitter& emit) {
  auto tr = device.transition(agent_id, ev, now);
  emit("lifecycle", device.id,
       {{"agent_id", agent_id},
        {"from", to_string(tr.from)},
        {"to", to_string(tr.to)},
        {"reason", reason}});
  return tr.to;
}

// Streaming sensor-quality monitor for a GPS-reliant agent. A reading is
// bad when its error estimate exceeds e_max; the verdict turns degraded
// only on the n_bad-th consecutive bad reading.
inline SensorQualityVerdict monitor_gps_quality(Device& device, double error_estimate_m,
                                                const LifecycleConfig& cfg) {
  if (error_estimate_m > cfg.e_max_m) {
    ++device.consecutive_bad_fixes;
  } else {
    device.consecutive_bad_fixes = 0;
  }
  SensorQualityVerdict v;
  v.consecutive_bad = device.consecutive_bad_fixes;
  v.metric = error_estimate_m;
  v.degraded = device.consecutive_bad_fixes >= cfg.n_bad;
  return v;
}

// Apoptosis sweep. Agents whose TTL ran out (anchored at first activation)
// go Expired; anything Expired is then uninstalled. At end of emergency
// everything goes, dormant agents included. Returns the uninstalled ids.
inline std::vector<std::string> expire_sweep(Device& device, SimTime now, bool end_of_emergency,
                                             const EventEmitter& emit) {
  std::vector<std::string> uninstalled;
  std::vector<std::string> ids;
  ids.reserve(device.installed.size());
  for (const auto& [aid, rec] : device.installed) ids.push_back(aid);

  for (const auto& aid : ids) {
    auto& rec = device.agent(aid);
    bool ttl_out = rec.activated_at &&
                   *rec.activated_at + SimTime::from_seconds(rec.manifest.ttl_s) <= now;
    std::string reason = end_of_emergency ? "end-of-emergency" : "ttl-expired";
    switch (rec.state) {
      case LifecycleState::Active:
      case LifecycleState::Paused:
      case LifecycleState::Dormant:
        if (ttl_out || end_of_emergency) {
          transition(device, aid, LifecycleEvent::Expire, now, reason, emit);
          transition(device, aid, LifecycleEvent::Uninstall, now, reason, emit);
          uninstalled.push_back(aid);
        }
        break;
      case LifecycleState::Expired:
        transition(device, aid, LifecycleEvent::Uninstall, now, reason, emit);
        uninstalled.push_back(aid);
        break;
      case LifecycleState::Deploying:
        if (end_of_emergency) {
          transition(device, aid, LifecycleEvent::TransferFailed, now, reason, emit);
          uninstalled.push_back(aid);
        }
        break;
      default:
        break;
    }
  }
  return uninstalled;
}

// Autonomous agent swap: discover, plan and deploy a replacement for the
// requesting agent's capability, excluding the requester's own model class.
// On success the replacement activates immediately and the requester
// expires; on any failure the requester stays exactly where it was.
// The whole flow emits no user-interaction events.
inline DeploymentRecord request_replacement(const ReplacementRequest& request, Registry& registry,
                                            Device& device, const LinkSample& link,
                                            const RetryPolicy& retry, SimTime now,
                                            RngStream& loss_stream, const EventEmitter& emit) {
  if (request.user_interaction) {
    throw ValidationError("replacement requests are autonomous; user_interaction must be false");
  }
  auto& requester = device.agent(request.requesting_agent_id);
  if (requester.state != LifecycleState::Paused && requester.state != LifecycleState::Active) {
    throw IllegalTransition("agent " + request.requesting_agent_id + " is " +
                            to_string(requester.state) + ", cannot request a replacement");
  }

  emit("replacement-request", device.id, request.to_json());

  Catalog filtered;
  for (const auto& m : registry.catalog) {
    if (m.capability == request.desired_capability &&
        m.model_class != requester.manifest.model_class) {
      filtered.push_back(m);
    }
  }

  DiscoverRequest dreq;
  dreq.capability = request.desired_capability;
  dreq.position = device.position;
  dreq.arch_mode = ArchMode::Agent;
  dreq.credential = device.credential;
  emit("message", device.id, {{"msg_type", "DiscoverRequest"}, {"body", dreq.to_json()}});

  DeviceResources res{device.free_memory()};
  // propagates DiscoveryTimeout / NoConnectivity / NoFeasibleBundle
  auto offerings = registry.discover(dreq, link, res, retry, loss_stream);
  DiscoverResponse dresp{offerings.offerings};
  emit("message", device.id, {{"msg_type", "DiscoverResponse"}, {"body", dresp.to_json()}});

  AgentManifest choice =
      Registry::plan_bundle_from(filtered, request.desired_capability, link, res,
                                 registry.deploy_policy);

  DeployRequest dep{choice.agent_id, device.id};
  emit("message", device.id, {{"msg_type", "DeployRequest"}, {"body", dep.to_json()}});
  DeploymentRecord rec = deploy(choice, device, link, registry.deploy_policy, loss_stream, emit);
  // the radio cost is paid whether or not the transfer survived
  step_battery(device, Activity{0.0, 0, 0.0, rec.radio_bytes});
  emit("message", device.id,
       {{"msg_type", "DeployAck"},
        {"body", DeployAck{rec.installed ? "installed" : "failed(" + rec.fail_reason + ")"}.to_json()}});
  emit("deployment", device.id, rec.to_json());
  if (!rec.installed) {
    throw TransferFailed("replacement deployment of " + choice.agent_id + " failed: " +
                         rec.fail_reason);
  }

  transition(device, choice.agent_id, LifecycleEvent::InstallComplete, now, "replacement", emit);
  transition(device, choice.agent_id, LifecycleEvent::Activate, now, "replacement", emit);
  transition(device, request.requesting_agent_id, LifecycleEvent::Expire, now, "replaced", emit);
  emit("replacement-complete", device.id,
       {{"requesting_agent_id", request.requesting_agent_id},
        {"replacement_agent_id", choice.agent_id}});
  return rec;
}

}  // namespace edgeswarm
