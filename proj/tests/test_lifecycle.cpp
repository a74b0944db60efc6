#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <tuple>
#include <vector>

#include "edgeswarm/lifecycle.hpp"

using namespace edgeswarm;

namespace {

AgentManifest loc_manifest(const std::string& id, ModelClass mc, double payload, double mem,
                           double acc, double ttl = 3600) {
  AgentManifest m;
  m.agent_id = id;
  m.capability = Capability::Localization;
  m.model_class = mc;
  m.payload_bytes = static_cast<std::uint64_t>(payload);
  m.memory_bytes = static_cast<std::uint64_t>(mem);
  m.per_inference_energy_pct = 0.0003;
  m.per_inference_latency_s = 0.05;
  m.accuracy = acc;
  m.ttl_s = ttl;
  return m;
}

Catalog localization_catalog() {
  Catalog c;
  c.push_back(loc_manifest("loc-gps", ModelClass::GPS_LOC, 800e3, 10e6, 0.95));
  c.push_back(loc_manifest("loc-pdr", ModelClass::PDR_LOC, 1e6, 12e6, 0.85));
  return c;
}

struct CapturedEvents {
  std::vector<std::tuple<std::string, std::string, nlohmann::json>> events;
  EventEmitter emitter() {
    return [this](const std::string& k, const std::string& s, const nlohmann::json& p) {
      events.emplace_back(k, s, p);
    };
  }
  int count(const std::string& kind) const {
    int n = 0;
    for (const auto& [k, s, p] : events) n += (k == kind);
    return n;
  }
};

LinkSample good_link() {
  LinkSample l;
  l.serving = "T";
  l.rat = Rat::G5;
  l.bandwidth_bps = 50e6;
  l.loss_prob = 0.0;
  l.base_latency_s = 0.01;
  return l;
}

}  // namespace

TEST_CASE("the transition table accepts exactly the documented edges") {
  using S = LifecycleState;
  using E = LifecycleEvent;
  const std::set<std::tuple<S, E, S>> legal = {
      {S::Requested, E::StartDeploy, S::Deploying},
      {S::Deploying, E::InstallComplete, S::Dormant},
      {S::Deploying, E::TransferFailed, S::Uninstalled},
      {S::Dormant, E::Activate, S::Active},
      {S::Dormant, E::Expire, S::Expired},
      {S::Active, E::Pause, S::Paused},
      {S::Active, E::Expire, S::Expired},
      {S::Paused, E::Resume, S::Active},
      {S::Paused, E::Expire, S::Expired},
      {S::Expired, E::Uninstall, S::Uninstalled},
  };
  int legal_seen = 0;
  for (auto s : kAllLifecycleStates) {
    for (auto e : kAllLifecycleEvents) {
      auto next = lifecycle_next(s, e);
      bool should_exist = false;
      for (const auto& [ls, le, lt] : legal) {
        if (ls == s && le == e) {
          should_exist = true;
          REQUIRE(next.has_value());
          REQUIRE(*next == lt);
        }
      }
      if (should_exist) ++legal_seen;
      if (!should_exist) REQUIRE_FALSE(next.has_value());
    }
  }
  REQUIRE(legal_seen == static_cast<int>(legal.size()));
}

TEST_CASE("activation anchors the TTL clock; re-activation does not move it") {
  Device dev;
  dev.id = "d";
  CapturedEvents ev;
  dev.install(localization_catalog()[0]);
  transition(dev, "loc-gps", LifecycleEvent::Activate, 100_s, "test", ev.emitter());
  REQUIRE(dev.agent("loc-gps").state == LifecycleState::Active);
  REQUIRE(dev.agent("loc-gps").activated_at == 100_s);
  transition(dev, "loc-gps", LifecycleEvent::Pause, 200_s, "test", ev.emitter());
  transition(dev, "loc-gps", LifecycleEvent::Resume, 300_s, "test", ev.emitter());
  REQUIRE(dev.agent("loc-gps").activated_at == 100_s);  // pause/resume cannot extend life
  REQUIRE(ev.count("lifecycle") == 3);
}

TEST_CASE("illegal transitions are rejected with state intact") {
  Device dev;
  dev.id = "d";
  dev.install(localization_catalog()[0]);
  REQUIRE_THROWS_AS(dev.transition("loc-gps", LifecycleEvent::Resume, 0_s), IllegalTransition);
  REQUIRE(dev.agent("loc-gps").state == LifecycleState::Dormant);
  REQUIRE_THROWS_AS(dev.transition("missing", LifecycleEvent::Activate, 0_s), UnknownAgent);
}

TEST_CASE("a failed transfer uninstalls the staged agent and frees its memory") {
  Device dev;
  dev.id = "d";
  auto m = localization_catalog()[1];
  dev.stage(m);
  REQUIRE(dev.memory_used_bytes == m.memory_bytes);
  dev.transition(m.agent_id, LifecycleEvent::TransferFailed, 1_s);
  REQUIRE(dev.memory_used_bytes == 0);
  REQUIRE(dev.installed.empty());
}

TEST_CASE("gps quality monitor: all good readings never degrade") {
  Device dev;
  dev.id = "d";
  LifecycleConfig cfg;
  for (int i = 0; i < 100; ++i) {
    auto v = monitor_gps_quality(dev, 5.0, cfg);
    REQUIRE_FALSE(v.degraded);
    REQUIRE(v.consecutive_bad == 0);
  }
}

TEST_CASE("gps quality monitor: degraded exactly on the n_bad-th consecutive bad fix") {
  Device dev;
  dev.id = "d";
  LifecycleConfig cfg;  // n_bad 5, e_max 15 m
  for (int i = 0; i < cfg.n_bad - 1; ++i) {
    REQUIRE_FALSE(monitor_gps_quality(dev, 20.0, cfg).degraded);
  }
  auto v = monitor_gps_quality(dev, 20.0, cfg);
  REQUIRE(v.degraded);
  REQUIRE(v.consecutive_bad == cfg.n_bad);
}

TEST_CASE("gps quality monitor matches the sliding-window oracle on all strings up to 12") {
  LifecycleConfig cfg;
  cfg.n_bad = 3;
  for (int len = 1; len <= 12; ++len) {
    for (int bits = 0; bits < (1 << len); ++bits) {
      Device dev;
      dev.id = "d";
      std::vector<bool> bad;
      for (int i = 0; i < len; ++i) bad.push_back((bits >> i) & 1);

      for (int i = 0; i < len; ++i) {
        bool streaming = monitor_gps_quality(dev, bad[i] ? 99.0 : 1.0, cfg).degraded;
        // oracle: the trailing n_bad readings are all bad
        bool oracle = i + 1 >= cfg.n_bad;
        for (int k = 0; oracle && k < cfg.n_bad; ++k) oracle = bad[i - k];
        REQUIRE(streaming == oracle);
      }
    }
  }
}

TEST_CASE("alternating good/bad never degrades") {
  Device dev;
  dev.id = "d";
  LifecycleConfig cfg;
  for (int i = 0; i < 1000; ++i) {
    auto v = monitor_gps_quality(dev, (i % 2) ? 99.0 : 1.0, cfg);
    REQUIRE_FALSE(v.degraded);
  }
}

TEST_CASE("expire_sweep rule table") {
  auto catalog = localization_catalog();

  SECTION("no agents: empty result") {
    Device dev;
    dev.id = "d";
    CapturedEvents ev;
    REQUIRE(expire_sweep(dev, 1000_s, false, ev.emitter()).empty());
  }

  SECTION("ttl 3600 activated at 0, swept at 3601: uninstalled") {
    Device dev;
    dev.id = "d";
    CapturedEvents ev;
    dev.install(catalog[0]);
    dev.transition("loc-gps", LifecycleEvent::Activate, 0_s);
    REQUIRE(expire_sweep(dev, 3601_s, false, ev.emitter()) ==
            std::vector<std::string>{"loc-gps"});
    REQUIRE(dev.installed.empty());
    REQUIRE(dev.memory_used_bytes == 0);
  }

  SECTION("just inside the ttl: retained") {
    Device dev;
    dev.id = "d";
    CapturedEvents ev;
    dev.install(catalog[0]);
    dev.transition("loc-gps", LifecycleEvent::Activate, 0_s);
    REQUIRE(expire_sweep(dev, 3599_s, false, ev.emitter()).empty());
    REQUIRE(dev.agent("loc-gps").state == LifecycleState::Active);
  }

  SECTION("dormant agents have no ttl countdown") {
    Device dev;
    dev.id = "d";
    CapturedEvents ev;
    dev.install(catalog[0]);  // never activated
    REQUIRE(expire_sweep(dev, 100000_s, false, ev.emitter()).empty());
    REQUIRE(dev.agent("loc-gps").state == LifecycleState::Dormant);
    // end of emergency takes everything, dormant included
    auto gone = expire_sweep(dev, 100000_s, true, ev.emitter());
    REQUIRE(gone == std::vector<std::string>{"loc-gps"});
    REQUIRE(dev.memory_used_bytes == 0);
  }

  SECTION("paused agents expire on ttl too") {
    Device dev;
    dev.id = "d";
    CapturedEvents ev;
    dev.install(catalog[0]);
    dev.transition("loc-gps", LifecycleEvent::Activate, 0_s);
    dev.transition("loc-gps", LifecycleEvent::Pause, 10_s);
    REQUIRE(expire_sweep(dev, 4000_s, false, ev.emitter()) ==
            std::vector<std::string>{"loc-gps"});
  }

  SECTION("already-expired agents are uninstalled by the next sweep") {
    Device dev;
    dev.id = "d";
    CapturedEvents ev;
    dev.install(catalog[0]);
    dev.transition("loc-gps", LifecycleEvent::Activate, 0_s);
    dev.transition("loc-gps", LifecycleEvent::Expire, 50_s);
    REQUIRE(dev.memory_used_bytes > 0);  // expired but not yet swept
    auto gone = expire_sweep(dev, 60_s, false, ev.emitter());
    REQUIRE(gone == std::vector<std::string>{"loc-gps"});
    REQUIRE(dev.memory_used_bytes == 0);
  }
}

TEST_CASE("freed memory equals the sum of uninstalled footprints") {
  auto catalog = localization_catalog();
  Device dev;
  dev.id = "d";
  CapturedEvents ev;
  dev.install(catalog[0]);
  dev.install(catalog[1]);
  std::uint64_t before = dev.memory_used_bytes;
  REQUIRE(before == catalog[0].memory_bytes + catalog[1].memory_bytes);
  auto gone = expire_sweep(dev, 10_s, true, ev.emitter());
  REQUIRE(gone.size() == 2);
  REQUIRE(dev.memory_used_bytes == 0);
}

TEST_CASE("replacement: paused GPS agent swaps to PDR without user interaction") {
  Registry reg;
  reg.catalog = localization_catalog();
  Device dev;
  dev.id = "ff-1";
  dev.install(reg.catalog[0]);
  dev.transition("loc-gps", LifecycleEvent::Activate, 0_s);
  dev.transition("loc-gps", LifecycleEvent::Pause, 10_s);

  CapturedEvents ev;
  RngStream loss("link-loss", 50);
  ReplacementRequest req{"loc-gps", "ff-1", Capability::Localization, "gps-degraded", false};
  auto rec = request_replacement(req, reg, dev, good_link(), RetryPolicy{}, 10_s, loss,
                                 ev.emitter());
  REQUIRE(rec.installed);
  REQUIRE(rec.round_trips <= 2);
  REQUIRE(dev.agent("loc-pdr").state == LifecycleState::Active);
  REQUIRE(dev.agent("loc-gps").state == LifecycleState::Expired);
  REQUIRE(ev.count("user-interaction") == 0);
  REQUIRE(ev.count("replacement-request") == 1);
  REQUIRE(ev.count("replacement-complete") == 1);
  // the flow never picks the requester's own model class
  REQUIRE(rec.agent_id == "loc-pdr");
}

TEST_CASE("replacement: unreachable registry leaves the requester paused") {
  Registry reg;
  reg.catalog = localization_catalog();
  Device dev;
  dev.id = "ff-1";
  dev.install(reg.catalog[0]);
  dev.transition("loc-gps", LifecycleEvent::Activate, 0_s);
  dev.transition("loc-gps", LifecycleEvent::Pause, 10_s);

  CapturedEvents ev;
  RngStream loss("link-loss", 51);
  ReplacementRequest req{"loc-gps", "ff-1", Capability::Localization, "gps-degraded", false};
  REQUIRE_THROWS_AS(request_replacement(req, reg, dev, LinkSample::no_coverage(), RetryPolicy{},
                                        10_s, loss, ev.emitter()),
                    DiscoveryTimeout);
  REQUIRE(dev.agent("loc-gps").state == LifecycleState::Paused);
  REQUIRE(dev.find("loc-pdr") == nullptr);
  REQUIRE(ev.count("user-interaction") == 0);
}

TEST_CASE("replacement requests must be autonomous") {
  Registry reg;
  reg.catalog = localization_catalog();
  Device dev;
  dev.id = "ff-1";
  dev.install(reg.catalog[0]);
  dev.transition("loc-gps", LifecycleEvent::Activate, 0_s);
  CapturedEvents ev;
  RngStream loss("link-loss", 52);
  ReplacementRequest req{"loc-gps", "ff-1", Capability::Localization, "x", true};
  REQUIRE_THROWS_AS(request_replacement(req, reg, dev, good_link(), RetryPolicy{}, 0_s, loss,
                                        ev.emitter()),
                    ValidationError);
}

TEST_CASE("replacement from a terminal state is illegal") {
  Registry reg;
  reg.catalog = localization_catalog();
  Device dev;
  dev.id = "ff-1";
  dev.install(reg.catalog[0]);
  dev.transition("loc-gps", LifecycleEvent::Expire, 0_s);
  CapturedEvents ev;
  RngStream loss("link-loss", 53);
  ReplacementRequest req{"loc-gps", "ff-1", Capability::Localization, "x", false};
  REQUIRE_THROWS_AS(request_replacement(req, reg, dev, good_link(), RetryPolicy{}, 0_s, loss,
                                        ev.emitter()),
                    IllegalTransition);
}
