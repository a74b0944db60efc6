#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgeswarm/engine.hpp"
#include "edgeswarm/lifecycle.hpp"
#include "edgeswarm/registry.hpp"
#include "edgeswarm/scenario.hpp"

namespace edgeswarm {

struct RunOptions {
  std::uint64_t seed = 0;
  std::optional<ArchMode> arch_override;
  std::optional<double> sever_cellular_at_s;
};

// Executes one scenario under one seed and architecture mode, producing the
// event log. Everything stochastic draws from a named stream, so two runs
// with the same inputs serialize to identical bytes.
class ScenarioRun {
 public:
  ScenarioRun(Scenario scenario, const RunOptions& opt)
      : sc_(std::move(scenario)),
        mode_(opt.arch_override.value_or(sc_.arch_mode)),
        sim_(sc_.scenario_id, opt.seed) {
    if (opt.sever_cellular_at_s) sc_.config.sever_cellular_at_s = opt.sever_cellular_at_s;
    emit_ = [this](const std::string& kind, const std::string& subject,
                   const nlohmann::json& payload) { sim_.emit(kind, subject, payload); };
  }

  EventLog run() {
    setup();
    SimTime end = SimTime::from_seconds(sc_.duration_s);
    sim_.run_until(end);
    // end of emergency: everything uninstalls itself, dormant agents included
    for (auto& [id, rt] : devices_) {
      auto gone = expire_sweep(rt.dev, end, true, emit_);
      sim_.emit("sweep-result", id,
                {{"end_of_emergency", true}, {"uninstalled", gone}});
    }
    sim_.emit("scenario-end", sc_.scenario_id, {{"reason", "end-of-emergency"}});
    return sim_.log();
  }

 private:
  struct DeviceRt {
    Device dev;
    const DeviceSpec* spec = nullptr;
    double last_heading = 0.0;
  };

  void setup() {
    sim_.open_stream("link-fade");
    sim_.open_stream("link-loss");
    sim_.open_stream("task-arrival");
    sim_.open_stream("inference");
    sim_.open_stream("gps-noise");
    sim_.open_stream("imu-noise");

    sim_.emit("scenario-start", sc_.scenario_id,
              {{"scenario_id", sc_.scenario_id},
               {"seed", sim_.rng().master_seed()},
               {"arch_mode", to_string(mode_)},
               {"schema_version", sc_.schema_version}});

    registry_.catalog = sc_.catalog;
    registry_.deploy_policy = sc_.config.deploy;
    registry_.remote_services = sc_.remote_services;
    if (mode_ == ArchMode::Remote) {
      // the backend always exposes an endpoint per requested capability
      for (const auto& w : sc_.workloads) {
        bool have = false;
        for (const auto& s : registry_.remote_services) have = have || s.capability == w.capability;
        if (!have) {
          RemoteService s;
          s.offering_id = "svc-" + to_string(w.capability);
          s.capability = w.capability;
          s.backend_compute_s = sc_.config.backend_compute_s;
          registry_.remote_services.push_back(std::move(s));
        }
      }
    }

    for (const auto& spec : sc_.devices) {
      DeviceRt rt;
      rt.spec = &spec;
      rt.dev.id = spec.device_id;
      rt.dev.position = spec.initial_position;
      rt.dev.battery_pct = spec.battery_pct;
      rt.dev.memory_capacity_bytes = spec.memory_capacity_bytes;
      rt.dev.credential = spec.credential;
      rt.dev.battery_params = spec.battery_override.value_or(sc_.config.battery);
      rt.dev.indoor = indoor_at(spec.initial_position);
      devices_.emplace(spec.device_id, std::move(rt));
    }
    // preinstall after the map is final so emitted events see stable state
    for (auto& [id, rt] : devices_) {
      for (const auto& pa : rt.spec->preinstalled) {
        const AgentManifest* m = nullptr;
        for (const auto& cm : sc_.catalog) {
          if (cm.agent_id == pa.agent_id) m = &cm;
        }
        if (!m) {
          throw ValidationError("preinstalled agent \"" + pa.agent_id +
                                "\" not present in the catalog");
        }
        rt.dev.install(*m);
        sim_.emit("lifecycle", id,
                  {{"agent_id", pa.agent_id},
                   {"from", to_string(LifecycleState::Requested)},
                   {"to", to_string(LifecycleState::Dormant)},
                   {"reason", "preinstalled"}});
        if (pa.state == LifecycleState::Active) {
          transition(rt.dev, pa.agent_id, LifecycleEvent::Activate, sim_.now(), "preinstalled",
                     emit_);
        }
      }
    }

    // workload tasks, drawn up front from the task-arrival stream
    for (const auto& w : sc_.workloads) {
      auto times = generate_tasks(w, sc_.duration_s, sim_.stream("task-arrival"));
      for (double t : times) {
        Task task;
        task.task_id = "task-" + std::to_string(task_counter_++);
        task.capability = w.capability;
        task.payload_bytes = w.payload_bytes;
        task.acceptable_latency_s = w.acceptable_latency_s;
        std::string dev_id = w.device_id;
        sim_.schedule(SimTime::from_seconds(t), "task-arrival", dev_id,
                      {{"task_id", task.task_id},
                       {"capability", to_string(task.capability)},
                       {"payload_bytes", task.payload_bytes},
                       {"acceptable_latency_s", task.acceptable_latency_s}},
                      [this, dev_id, task]() { handle_task(devices_.at(dev_id), task); });
      }
    }

    // architecture-specific startup flow
    if (mode_ == ArchMode::Agent) {
      std::set<std::pair<std::string, Capability>> wanted;
      for (const auto& w : sc_.workloads) wanted.insert({w.device_id, w.capability});
      for (const auto& [dev_id, cap] : wanted) {
        auto& rt = devices_.at(dev_id);
        if (rt.dev.find_by_capability(cap, {LifecycleState::Dormant, LifecycleState::Active})) {
          continue;  // preinstalled
        }
        std::string id = dev_id;
        Capability c = cap;
        sim_.schedule(SimTime::zero(), "deployment-flow", dev_id,
                      {{"capability", to_string(cap)}},
                      [this, id, c]() { initial_deployment(devices_.at(id), c); });
      }
    } else {
      std::set<std::string> queriers;
      for (const auto& w : sc_.workloads) queriers.insert(w.device_id);
      for (const auto& dev_id : queriers) {
        std::string id = dev_id;
        Capability cap = sc_.workloads.front().capability;
        for (const auto& w : sc_.workloads) {
          if (w.device_id == dev_id) cap = w.capability;
        }
        sim_.schedule(SimTime::zero(), "discovery-flow", dev_id, {{"capability", to_string(cap)}},
                      [this, id, cap]() { remote_discovery(devices_.at(id), cap); });
      }
    }

    // 1 Hz device ticks and the periodic apoptosis sweep
    for (auto& [id, rt] : devices_) schedule_tick(id, sc_.config.tick_s);
    schedule_sweep(sc_.config.lifecycle.sweep_period_s);
  }

  bool indoor_at(Vec2 p) const {
    for (const auto& b : sc_.buildings) {
      if (b.rect.contains(p)) return true;
    }
    return false;
  }

  bool cellular_severed() const {
    return sc_.config.sever_cellular_at_s &&
           sim_.now().seconds() >= *sc_.config.sever_cellular_at_s;
  }

  // Current link for a device: cellular first, then one P2P relay hop via
  // the nearest peer that still has cellular coverage.
  LinkSample current_link(const DeviceRt& rt) {
    LinkSample cell = cellular_severed()
                          ? LinkSample::no_coverage()
                          : link_state(rt.dev.position, sc_.towers, rt.dev.indoor,
                                       sc_.config.radio, sim_.stream("link-fade"));
    if (cell.has_coverage() || !sc_.p2p) return cell;
    for (const auto& [peer_id, peer] : devices_) {
      if (peer_id == rt.dev.id) continue;
      auto p2p = p2p_link(rt.dev.position, peer.dev.position, peer_id, *sc_.p2p);
      if (!p2p) continue;
      LinkSample peer_cell = cellular_severed()
                                 ? LinkSample::no_coverage()
                                 : link_state(peer.dev.position, sc_.towers, peer.dev.indoor,
                                              sc_.config.radio, sim_.stream("link-fade"));
      if (peer_cell.has_coverage()) return relay_link(*p2p, peer_cell);
    }
    return LinkSample::no_coverage();
  }

  void schedule_tick(const std::string& dev_id, double at_s) {
    if (at_s > sc_.duration_s + 1e-9) return;
    std::string id = dev_id;
    sim_.schedule(SimTime::from_seconds(at_s), "tick", dev_id, {}, [this, id, at_s]() {
      auto& rt = devices_.at(id);
      double stride = tick(rt);
      // the sample is recorded before any localization side effects, so it
      // precedes the lifecycle events this tick may trigger
      sim_.emit("device-sample", id,
                {{"battery_pct", rt.dev.battery_pct},
                 {"memory_used_bytes", rt.dev.memory_used_bytes},
                 {"pos", {rt.dev.position.x, rt.dev.position.y}},
                 {"indoor", rt.dev.indoor}});
      if (rt.dev.alive()) run_localization(rt, stride);
      schedule_tick(id, at_s + sc_.config.tick_s);
    });
  }

  void schedule_sweep(double at_s) {
    if (at_s > sc_.duration_s + 1e-9) return;
    sim_.schedule(SimTime::from_seconds(at_s), "sweep", "sim", {}, [this, at_s]() {
      nlohmann::json gone = nlohmann::json::array();
      for (auto& [id, rt] : devices_) {
        for (auto& aid : expire_sweep(rt.dev, sim_.now(), false, emit_)) {
          gone.push_back(aid);
        }
      }
      sim_.emit("sweep-result", "sim", {{"end_of_emergency", false}, {"uninstalled", gone}});
      schedule_sweep(at_s + sc_.config.lifecycle.sweep_period_s);
    });
  }

  // Movement, battery drain and the link sample for one tick. Returns the
  // distance moved (the IMU stride for this tick).
  double tick(DeviceRt& rt) {
    double t_s = sim_.now().seconds();
    Vec2 next = position_at(*rt.spec, t_s);
    double stride = distance(next, rt.dev.position);
    if (stride > 1e-9) {
      rt.last_heading = std::atan2(next.y - rt.dev.position.y, next.x - rt.dev.position.x);
    }
    rt.dev.position = next;
    rt.dev.indoor = indoor_at(next);
    step_battery(rt.dev, Activity{sc_.config.tick_s, 0, 0.0, 0});

    if (rt.dev.alive()) {
      LinkSample link = current_link(rt);
      sim_.emit("link", rt.dev.id, link.to_json());
    } else {
      sim_.emit("link", rt.dev.id, LinkSample::no_coverage().to_json());
    }
    return stride;
  }

  void run_localization(DeviceRt& rt, double stride) {
    // GPS hardware samples while a GPS-reliant localizer is Active or Paused
    InstalledAgent* gps = nullptr;
    InstalledAgent* pdr = nullptr;
    std::string gps_id, pdr_id;
    for (auto& [aid, rec] : rt.dev.installed) {
      if (rec.manifest.capability != Capability::Localization) continue;
      if (rec.manifest.model_class == ModelClass::GPS_LOC &&
          (rec.state == LifecycleState::Active || rec.state == LifecycleState::Paused)) {
        gps = &rec;
        gps_id = aid;
      }
      if (rec.manifest.model_class == ModelClass::PDR_LOC && rec.state == LifecycleState::Active) {
        pdr = &rec;
        pdr_id = aid;
      }
    }

    if (gps) {
      auto fix = sample_gps(rt.dev, sim_.now(), sc_.config.gps, sim_.stream("gps-noise"));
      sim_.emit("gps-fix", rt.dev.id,
                {{"reported", {fix.reported_position.x, fix.reported_position.y}},
                 {"truth", {rt.dev.position.x, rt.dev.position.y}},
                 {"error_estimate_m", fix.error_estimate_m},
                 {"indoor", rt.dev.indoor},
                 {"agent_state", to_string(gps->state)}});
      if (fix.error_estimate_m <= sc_.config.lifecycle.e_max_m) {
        rt.dev.last_good_fix = fix.reported_position;
      }
      bool active_gps = gps->state == LifecycleState::Active;
      auto verdict = monitor_gps_quality(rt.dev, fix.error_estimate_m, sc_.config.lifecycle);
      if (verdict.degraded && !pdr) {
        if (active_gps) {
          transition(rt.dev, gps_id, LifecycleEvent::Pause, sim_.now(), "sensor-degraded", emit_);
        }
        attempt_replacement(rt, gps_id, fix);
        rt.dev.consecutive_bad_fixes = 0;
      }
      // charge the active localizer for processing the fix
      if (active_gps && gps->state == LifecycleState::Active) {
        step_battery(rt.dev, Activity{0.0, 1, gps->manifest.per_inference_energy_pct, 0});
      }
    }

    if (pdr && stride > 1e-9 && rt.dev.pdr_pose) {
      auto step = sample_imu(sim_.now(), rt.last_heading, stride, sc_.config.imu,
                             sim_.stream("imu-noise"));
      rt.dev.pdr_pose = pdr_update(*rt.dev.pdr_pose, step);
      step_battery(rt.dev, Activity{0.0, 1, pdr->manifest.per_inference_energy_pct, 0});
      sim_.emit("pdr-pose", rt.dev.id,
                {{"est", {rt.dev.pdr_pose->position.x, rt.dev.pdr_pose->position.y}},
                 {"truth", {rt.dev.position.x, rt.dev.position.y}}});
    }
  }

  void attempt_replacement(DeviceRt& rt, const std::string& gps_agent_id,
                           const SensorReading& last_fix) {
    ReplacementRequest req;
    req.requesting_agent_id = gps_agent_id;
    req.device_id = rt.dev.id;
    req.desired_capability = Capability::Localization;
    req.reason = "gps-degraded";
    req.user_interaction = false;
    LinkSample link = current_link(rt);
    try {
      request_replacement(req, registry_, rt.dev, link, sc_.config.retry, sim_.now(),
                          sim_.stream("link-loss"), emit_);
      // seed dead reckoning from the last trustworthy fix
      Vec2 seed = rt.dev.last_good_fix.value_or(last_fix.reported_position);
      rt.dev.pdr_pose = Pose{seed, rt.last_heading};
    } catch (const SimError& e) {
      sim_.emit("replacement-failed", rt.dev.id,
                {{"requesting_agent_id", gps_agent_id}, {"reason", e.code()}});
    }
  }

  void initial_deployment(DeviceRt& rt, Capability cap) {
    sim_.emit("user-interaction", rt.dev.id,
              {{"action", "request-deployment"}, {"capability", to_string(cap)}});
    LinkSample link = current_link(rt);
    DiscoverRequest dreq{cap, rt.dev.position, ArchMode::Agent, rt.dev.credential};
    sim_.emit("message", rt.dev.id, {{"msg_type", "DiscoverRequest"}, {"body", dreq.to_json()}});
    try {
      DeviceResources res{rt.dev.free_memory()};
      auto found = registry_.discover(dreq, link, res, sc_.config.retry, sim_.stream("link-loss"));
      sim_.emit("message", rt.dev.id,
                {{"msg_type", "DiscoverResponse"}, {"body", DiscoverResponse{found.offerings}.to_json()}});
      auto manifest = registry_.plan_bundle(cap, link, res);
      sim_.emit("message", rt.dev.id,
                {{"msg_type", "DeployRequest"},
                 {"body", DeployRequest{manifest.agent_id, rt.dev.id}.to_json()}});
      auto rec = deploy(manifest, rt.dev, link, registry_.deploy_policy,
                        sim_.stream("link-loss"), emit_);
      sim_.emit("message", rt.dev.id,
                {{"msg_type", "DeployAck"},
                 {"body",
                  DeployAck{rec.installed ? "installed" : "failed(" + rec.fail_reason + ")"}.to_json()}});
      sim_.emit("deployment", rt.dev.id, rec.to_json());
      step_battery(rt.dev, Activity{0.0, 0, 0.0, rec.radio_bytes});
      if (rec.installed) {
        std::string dev_id = rt.dev.id;
        std::string agent_id = manifest.agent_id;
        sim_.schedule(sim_.now() + SimTime::from_seconds(rec.transfer_s), "install-commit", dev_id,
                      {{"agent_id", agent_id}},
                      [this, dev_id, agent_id]() {
                        auto& d = devices_.at(dev_id);
                        transition(d.dev, agent_id, LifecycleEvent::InstallComplete, sim_.now(),
                                   "deployed", emit_);
                      });
      }
    } catch (const SimError& e) {
      sim_.emit("deployment-failed", rt.dev.id,
                {{"capability", to_string(cap)}, {"reason", e.code()}});
    }
  }

  void remote_discovery(DeviceRt& rt, Capability cap) {
    sim_.emit("user-interaction", rt.dev.id,
              {{"action", "query-services"}, {"capability", to_string(cap)}});
    LinkSample link = current_link(rt);
    DiscoverRequest dreq{cap, rt.dev.position, ArchMode::Remote, rt.dev.credential};
    sim_.emit("message", rt.dev.id, {{"msg_type", "DiscoverRequest"}, {"body", dreq.to_json()}});
    try {
      DeviceResources res{rt.dev.free_memory()};
      auto found = registry_.discover(dreq, link, res, sc_.config.retry, sim_.stream("link-loss"));
      sim_.emit("message", rt.dev.id,
                {{"msg_type", "DiscoverResponse"}, {"body", DiscoverResponse{found.offerings}.to_json()}});
    } catch (const SimError& e) {
      sim_.emit("discovery-timeout", rt.dev.id,
                {{"capability", to_string(cap)}, {"reason", e.code()}});
    }
  }

  void handle_task(DeviceRt& rt, const Task& task) {
    if (!rt.dev.alive()) {
      TaskOutcome out;
      out.task_id = task.task_id;
      out.category = TaskOutcome::Category::Timeout;
      out.attempts = 0;
      out.correct = false;
      sim_.emit("task-outcome", rt.dev.id, out.to_json());
      return;
    }
    sim_.emit("user-interaction", rt.dev.id,
              {{"action", "capture-image"}, {"task_id", task.task_id}});
    if (mode_ == ArchMode::Remote) {
      handle_task_remote(rt, task);
    } else {
      handle_task_agent(rt, task);
    }
  }

  void handle_task_remote(DeviceRt& rt, const Task& task) {
    LinkSample link = current_link(rt);
    const RemoteService* svc = nullptr;
    for (const auto& s : registry_.remote_services) {
      if (s.capability == task.capability) svc = &s;
    }
    int delivered = 0;
    TaskOutcome out = remote_infer(task, *svc, link, sc_.config.retry,
                                   sim_.stream("link-loss"), sim_.stream("inference"), &delivered);
    std::uint64_t radio = task.payload_bytes * (static_cast<std::uint64_t>(out.attempts) +
                                                static_cast<std::uint64_t>(delivered));
    step_battery(rt.dev, Activity{0.0, 0, 0.0, radio});
    sim_.emit("task-outcome", rt.dev.id, out.to_json());
  }

  void handle_task_agent(DeviceRt& rt, const Task& task) {
    InstalledAgent* agent =
        rt.dev.find_by_capability(task.capability, {LifecycleState::Active});
    if (!agent) {
      if (auto* dormant = rt.dev.find_by_capability(task.capability, {LifecycleState::Dormant})) {
        transition(rt.dev, dormant->manifest.agent_id, LifecycleEvent::Activate, sim_.now(),
                   "first-task", emit_);
        agent = dormant;
      }
    }
    if (!agent) {
      // nothing usable onboard (deployment failed or still in transfer):
      // try once more on demand, synchronously
      agent = on_demand_deploy(rt, task.capability);
    }
    if (!agent) {
      TaskOutcome out;
      out.task_id = task.task_id;
      out.category = TaskOutcome::Category::Timeout;
      out.attempts = 0;
      out.correct = false;
      sim_.emit("task-outcome", rt.dev.id, out.to_json());
      return;
    }
    TaskOutcome out =
        run_inference(rt.dev, agent->manifest.agent_id, task, sim_.stream("inference"));
    sim_.emit("task-outcome", rt.dev.id, out.to_json());
  }

  InstalledAgent* on_demand_deploy(DeviceRt& rt, Capability cap) {
    LinkSample link = current_link(rt);
    try {
      DeviceResources res{rt.dev.free_memory()};
      DiscoverRequest dreq{cap, rt.dev.position, ArchMode::Agent, rt.dev.credential};
      sim_.emit("message", rt.dev.id, {{"msg_type", "DiscoverRequest"}, {"body", dreq.to_json()}});
      auto found = registry_.discover(dreq, link, res, sc_.config.retry, sim_.stream("link-loss"));
      sim_.emit("message", rt.dev.id,
                {{"msg_type", "DiscoverResponse"}, {"body", DiscoverResponse{found.offerings}.to_json()}});
      auto manifest = registry_.plan_bundle(cap, link, res);
      auto rec = deploy(manifest, rt.dev, link, registry_.deploy_policy,
                        sim_.stream("link-loss"), emit_);
      sim_.emit("deployment", rt.dev.id, rec.to_json());
      step_battery(rt.dev, Activity{0.0, 0, 0.0, rec.radio_bytes});
      if (!rec.installed) return nullptr;
      transition(rt.dev, manifest.agent_id, LifecycleEvent::InstallComplete, sim_.now(),
                 "on-demand", emit_);
      transition(rt.dev, manifest.agent_id, LifecycleEvent::Activate, sim_.now(), "on-demand",
                 emit_);
      return &rt.dev.agent(manifest.agent_id);
    } catch (const SimError& e) {
      sim_.emit("deployment-failed", rt.dev.id,
                {{"capability", to_string(cap)}, {"reason", e.code()}});
      return nullptr;
    }
  }

  Scenario sc_;
  ArchMode mode_;
  Simulator sim_;
  Registry registry_;
  std::map<std::string, DeviceRt> devices_;
  EventEmitter emit_;
  int task_counter_ = 0;
};

inline EventLog run_scenario(const Scenario& sc, const RunOptions& opt) {
  ScenarioRun run(sc, opt);
  return run.run();
}

}  // namespace edgeswarm
