#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgeswarm/agents.hpp"
#include "edgeswarm/device.hpp"
#include "edgeswarm/errors.hpp"
#include "edgeswarm/network.hpp"
#include "edgeswarm/rng.hpp"
#include "edgeswarm/time.hpp"

namespace edgeswarm {

enum class ArchMode { Remote, Agent };

inline std::string to_string(ArchMode m) {
  return m == ArchMode::Remote ? "remote" : "agent";
}

inline ArchMode arch_mode_from_string(const std::string& s) {
  if (s == "remote") return ArchMode::Remote;
  if (s == "agent") return ArchMode::Agent;
  throw ValidationError("unknown arch_mode \"" + s + "\" (expected remote|agent)");
}

struct RetryPolicy {
  int max_attempts = 3;
  double per_attempt_timeout_s = 5.0;

  bool operator==(const RetryPolicy&) const = default;

  nlohmann::json to_json() const {
    return {{"max_attempts", max_attempts}, {"per_attempt_timeout_s", per_attempt_timeout_s}};
  }
  static RetryPolicy from_json(const nlohmann::json& j) { return from_json(j, RetryPolicy{}); }
  static RetryPolicy from_json(const nlohmann::json& j, RetryPolicy p) {
    p.max_attempts = j.value("max_attempts", p.max_attempts);
    p.per_attempt_timeout_s = j.value("per_attempt_timeout_s", p.per_attempt_timeout_s);
    return p;
  }
};

struct DeployPolicy {
  double time_budget_s = 120.0;  // dispatch-window budget for the bundle transfer
  int per_leg_attempts = 5;
  std::uint64_t control_bytes = 2048;  // request / offer / ack message size

  bool operator==(const DeployPolicy&) const = default;

  nlohmann::json to_json() const {
    return {{"time_budget_s", time_budget_s},
            {"per_leg_attempts", per_leg_attempts},
            {"control_bytes", control_bytes}};
  }
  static DeployPolicy from_json(const nlohmann::json& j) { return from_json(j, DeployPolicy{}); }
  static DeployPolicy from_json(const nlohmann::json& j, DeployPolicy p) {
    p.time_budget_s = j.value("time_budget_s", p.time_budget_s);
    p.per_leg_attempts = j.value("per_leg_attempts", p.per_leg_attempts);
    p.control_bytes = j.value("control_bytes", p.control_bytes);
    return p;
  }
};

struct RemoteService {
  std::string offering_id;
  Capability capability = Capability::DrugLabelClassification;
  double backend_compute_s = 0.8;
  double accuracy = 0.98;

  bool operator==(const RemoteService&) const = default;

  nlohmann::json to_json() const {
    return {{"offering_id", offering_id},
            {"capability", to_string(capability)},
            {"backend_compute_s", backend_compute_s},
            {"accuracy", accuracy}};
  }
  static RemoteService from_json(const nlohmann::json& j) {
    RemoteService s;
    s.offering_id = j.at("offering_id").get<std::string>();
    s.capability = capability_from_string(j.at("capability").get<std::string>());
    s.backend_compute_s = j.value("backend_compute_s", s.backend_compute_s);
    s.accuracy = j.value("accuracy", s.accuracy);
    return s;
  }
};

// Exactly one of `remote` / `agent` is set, per the mode.
struct ServiceOffering {
  std::string offering_id;
  Capability capability = Capability::DrugLabelClassification;
  std::optional<RemoteService> remote;
  std::optional<AgentManifest> agent;

  nlohmann::json to_json() const {
    nlohmann::json j{{"offering_id", offering_id},
                     {"capability", to_string(capability)},
                     {"mode", remote ? "remote-service" : "deployable-agent"}};
    if (remote) j["remote"] = remote->to_json();
    if (agent) j["agent"] = agent->to_json();
    return j;
  }
};

// --- wire messages (JSON schemas; serialized forms appear in the event log)

struct DiscoverRequest {
  Capability capability = Capability::DrugLabelClassification;
  Vec2 position;
  ArchMode arch_mode = ArchMode::Agent;
  bool credential = true;

  nlohmann::json to_json() const {
    return {{"capability", to_string(capability)},
            {"position", {position.x, position.y}},
            {"arch_mode", to_string(arch_mode)},
            {"credential", credential}};
  }
};

struct DiscoverResponse {
  std::vector<ServiceOffering> offerings;

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& o : offerings) arr.push_back(o.to_json());
    return {{"offerings", arr}};
  }
};

struct DeployRequest {
  std::string agent_id;
  std::string device_id;

  nlohmann::json to_json() const {
    return {{"agent_id", agent_id}, {"device_id", device_id}};
  }
};

struct DeployAck {
  std::string outcome;  // "installed" or "failed(<reason>)"

  nlohmann::json to_json() const { return {{"outcome", outcome}}; }
};

struct DeploymentRecord {
  std::string agent_id;
  std::string device_id;
  int round_trips = 0;
  double transfer_s = 0.0;
  std::uint64_t radio_bytes = 0;  // bytes moved over the device radio, retries included
  bool installed = false;
  std::string fail_reason;

  nlohmann::json to_json() const {
    return {{"agent_id", agent_id},
            {"device_id", device_id},
            {"round_trips", round_trips},
            {"transfer_s", transfer_s},
            {"radio_bytes", radio_bytes},
            {"outcome", installed ? "installed" : "failed(" + fail_reason + ")"}};
  }
};

struct DeviceResources {
  std::uint64_t free_memory_bytes = 0;
};

struct DiscoverResult {
  std::vector<ServiceOffering> offerings;
  int attempts = 1;
  double elapsed_s = 0.0;
};

// The SBA-style registry: one discoverable catalog serving both modes.
// Architecture 1 consumers get remote endpoints; Architecture 2 consumers
// get deployable agents already filtered to what would actually fit the
// link and the device.
class Registry {
 public:
  std::vector<RemoteService> remote_services;
  Catalog catalog;
  DeployPolicy deploy_policy;

  // A bundle is feasible when its transfer fits the deploy budget and its
  // footprint fits the device's free memory.
  bool feasible(const AgentManifest& m, const LinkSample& link, const DeviceResources& res) const {
    if (!link.has_coverage()) return false;
    if (m.memory_bytes > res.free_memory_bytes) return false;
    return transfer_time_s(m.payload_bytes, link) <= deploy_policy.time_budget_s;
  }

  // Service discovery over a lossy link: each attempt costs one request and
  // one response draw; exhausting the retry budget raises DiscoveryTimeout.
  DiscoverResult discover(const DiscoverRequest& req, const LinkSample& link,
                          const DeviceResources& res, const RetryPolicy& retry,
                          RngStream& loss_stream) const {
    double elapsed = 0.0;
    int attempts = 0;
    bool reached = false;
    while (attempts < retry.max_attempts) {
      ++attempts;
      bool up = !loss_stream.bernoulli(link.loss_prob) && link.has_coverage();
      bool down = up && !loss_stream.bernoulli(link.loss_prob);
      if (up && down) {
        elapsed += 2.0 * link.base_latency_s;
        reached = true;
        break;
      }
      elapsed += retry.per_attempt_timeout_s;
    }
    if (!reached) {
      throw DiscoveryTimeout("no response after " + std::to_string(attempts) + " attempts");
    }

    DiscoverResult result;
    result.attempts = attempts;
    result.elapsed_s = elapsed;
    if (!req.credential) return result;  // unauthorized consumers see nothing

    if (req.arch_mode == ArchMode::Remote) {
      for (const auto& s : remote_services) {
        if (s.capability != req.capability) continue;
        ServiceOffering o;
        o.offering_id = s.offering_id;
        o.capability = s.capability;
        o.remote = s;
        result.offerings.push_back(std::move(o));
      }
    } else {
      for (const auto& m : catalog) {
        if (m.capability != req.capability) continue;
        if (!feasible(m, link, res)) continue;
        ServiceOffering o;
        o.offering_id = m.agent_id;
        o.capability = m.capability;
        o.agent = m;
        result.offerings.push_back(std::move(o));
      }
    }
    return result;
  }

  // Condition-aware bundle choice: the most accurate manifest that fits the
  // link budget and the device memory. The catalog ordering invariants make
  // ties impossible.
  AgentManifest plan_bundle(Capability capability, const LinkSample& link,
                            const DeviceResources& res) const {
    return plan_bundle_from(catalog, capability, link, res, deploy_policy);
  }

  static AgentManifest plan_bundle_from(const Catalog& catalog, Capability capability,
                                        const LinkSample& link, const DeviceResources& res,
                                        const DeployPolicy& policy) {
    if (!link.has_coverage()) {
      throw NoConnectivity("no cellular coverage and no P2P path to the registry");
    }
    const AgentManifest* best = nullptr;
    bool any_for_capability = false;
    for (const auto& m : catalog) {
      if (m.capability != capability) continue;
      any_for_capability = true;
      if (m.memory_bytes > res.free_memory_bytes) continue;
      if (transfer_time_s(m.payload_bytes, link) > policy.time_budget_s) continue;
      if (!best || m.accuracy > best->accuracy) best = &m;
    }
    if (!best) {
      throw NoFeasibleBundle(std::string("no ") + to_string(capability) +
                             (any_for_capability ? " bundle fits the link budget and device memory"
                                                 : " bundle in the catalog"));
    }
    return *best;
  }
};

// Architecture 1 request/response inference. One loss draw per attempt; an
// attempt also fails when its round trip would exceed the per-attempt
// timeout (the client gives up waiting). The round trip is modeled
// symmetric: upload and result transfer each cost transfer_time(payload).
inline TaskOutcome remote_infer(const Task& task, const RemoteService& service,
                                const LinkSample& link, const RetryPolicy& retry,
                                RngStream& loss_stream, RngStream& inference_stream,
                                int* delivered_attempts = nullptr) {
  TaskOutcome out;
  out.task_id = task.task_id;
  double elapsed = 0.0;
  int attempts = 0;
  int delivered = 0;
  bool success = false;
  while (attempts < retry.max_attempts) {
    ++attempts;
    bool lost = loss_stream.bernoulli(link.loss_prob) || !link.has_coverage();
    if (!lost) {
      ++delivered;
      double rtt = 2.0 * transfer_time_s(task.payload_bytes, link) + service.backend_compute_s;
      if (rtt <= retry.per_attempt_timeout_s) {
        elapsed += rtt;
        success = true;
        break;
      }
    }
    elapsed += retry.per_attempt_timeout_s;
  }
  out.attempts = attempts;
  out.latency_s = elapsed;
  if (delivered_attempts) *delivered_attempts = delivered;
  if (!success) {
    out.category = TaskOutcome::Category::Timeout;
    out.correct = false;
  } else {
    out.correct = inference_stream.bernoulli(service.accuracy);
    if (elapsed > task.acceptable_latency_s) {
      out.category = TaskOutcome::Category::Unacceptable;
    } else if (attempts > 1) {
      out.category = TaskOutcome::Category::Retried;
    } else {
      out.category = TaskOutcome::Category::FirstTry;
    }
  }
  return out;
}

using LifecycleEmitter =
    std::function<void(const std::string& kind, const std::string& subject, const nlohmann::json& payload)>;

// Architecture 2 deployment: round trip 1 carries the request and the
// manifest offer, round trip 2 the bundle payload and the install ack.
// Each of the four legs retries up to the per-leg budget; a lost attempt
// costs the same transfer window as a delivered one. The agent is staged
// (memory charged) before the payload leg and rolled back on failure, so a
// failed deployment never leaves memory behind.
inline DeploymentRecord deploy(const AgentManifest& manifest, Device& device,
                               const LinkSample& link, const DeployPolicy& policy,
                               RngStream& loss_stream, const LifecycleEmitter& emit = nullptr) {
  auto lifecycle = [&](LifecycleState from, LifecycleState to, const std::string& reason) {
    if (!emit) return;
    emit("lifecycle", device.id,
         {{"agent_id", manifest.agent_id},
          {"from", to_string(from)},
          {"to", to_string(to)},
          {"reason", reason}});
  };
  DeploymentRecord rec;
  rec.agent_id = manifest.agent_id;
  rec.device_id = device.id;

  if (!link.has_coverage()) {
    rec.fail_reason = "NoConnectivity";
    return rec;
  }
  if (device.memory_used_bytes + manifest.memory_bytes > device.memory_capacity_bytes) {
    // planned against stale resources; device stays untouched
    throw InsufficientMemory("device " + device.id + " no longer has " +
                             std::to_string(manifest.memory_bytes) + " B free for " +
                             manifest.agent_id);
  }

  auto leg = [&](std::uint64_t bytes, double& total_s) -> bool {
    double t = transfer_time_s(bytes, link);
    for (int i = 0; i < policy.per_leg_attempts; ++i) {
      total_s += t;
      rec.radio_bytes += bytes;
      if (!loss_stream.bernoulli(link.loss_prob)) return true;
    }
    return false;
  };

  double total = 0.0;
  // round trip 1: deploy request up, manifest offer down
  if (!leg(policy.control_bytes, total) || !leg(policy.control_bytes, total)) {
    rec.round_trips = 1;
    rec.transfer_s = total;
    rec.fail_reason = "TransferFailed";
    return rec;
  }
  // round trip 2: bundle payload down, install ack up
  device.stage(manifest);
  lifecycle(LifecycleState::Requested, LifecycleState::Deploying, "deploy");
  if (!leg(manifest.payload_bytes, total) || !leg(policy.control_bytes, total)) {
    device.transition(manifest.agent_id, LifecycleEvent::TransferFailed, SimTime::zero());
    lifecycle(LifecycleState::Deploying, LifecycleState::Uninstalled, "transfer-failed");
    rec.round_trips = 2;
    rec.transfer_s = total;
    rec.fail_reason = "TransferFailed";
    return rec;
  }
  rec.round_trips = 2;
  rec.transfer_s = total;
  rec.installed = true;
  return rec;
}

}  // namespace edgeswarm
