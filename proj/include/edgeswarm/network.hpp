#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgeswarm/errors.hpp"
#include "edgeswarm/geometry.hpp"
#include "edgeswarm/rng.hpp"
#include "edgeswarm/time.hpp"

namespace edgeswarm {

enum class Rat { G2, G3, G4, G5 };

inline std::string to_string(Rat r) {
  switch (r) {
    case Rat::G2: return "2G";
    case Rat::G3: return "3G";
    case Rat::G4: return "4G";
    case Rat::G5: return "5G";
  }
  return "?";
}

inline int generation(Rat r) {
  switch (r) {
    case Rat::G2: return 2;
    case Rat::G3: return 3;
    case Rat::G4: return 4;
    case Rat::G5: return 5;
  }
  return 0;
}

inline std::optional<Rat> rat_from_string(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (s == "2G") return Rat::G2;
  if (s == "3G") return Rat::G3;
  if (s == "4G") return Rat::G4;
  if (s == "5G") return Rat::G5;
  return std::nullopt;
}

struct CellTower {
  std::string id;
  GeoPoint geo;    // as captured
  Vec2 pos;        // projected local meters
  Rat rat = Rat::G4;
  double max_bandwidth_bps = 0.0;
  double range_m = 0.0;
  double base_latency_s = 0.0;

  bool operator==(const CellTower&) const = default;
};

// One SNR quality bin: at or above min_snr_db the link gets this fraction
// of the serving tower's bandwidth and this per-attempt loss probability.
struct QualityBin {
  double min_snr_db = 0.0;
  double bandwidth_frac = 0.0;
  double loss_prob = 1.0;
  bool operator==(const QualityBin&) const = default;
};

struct PathLossParams {
  double snr0_db = 60.0;  // modeled SNR at the reference distance
  double exponent = 3.0;
  bool operator==(const PathLossParams&) const = default;
};

// Log-distance path loss with Gaussian fade plus a piecewise SNR->quality
// table. The capture data behind the model is not published, so the table
// ships as config and can be re-binned per scenario.
struct RadioConfig {
  double ref_distance_m = 10.0;
  double fade_sigma_db = 4.0;
  double indoor_penalty_db = 20.0;
  std::map<Rat, PathLossParams> path_loss = {
      {Rat::G2, {60.0, 2.7}},
      {Rat::G3, {60.0, 2.7}},
      {Rat::G4, {60.0, 3.0}},
      {Rat::G5, {65.0, 3.5}},  // higher EIRP, faster falloff
  };
  // Sorted by min_snr_db descending; the last bin catches everything.
  std::vector<QualityBin> bins = {
      {25.0, 1.00, 0.005},
      {15.0, 0.60, 0.02},
      {5.0, 0.30, 0.08},
      {-5.0, 0.10, 0.25},
      {-1e300, 0.02, 0.60},
  };

  bool operator==(const RadioConfig&) const = default;

  const QualityBin& bin_for(double snr_db) const {
    for (const auto& b : bins) {
      if (snr_db >= b.min_snr_db) return b;
    }
    return bins.back();
  }

  nlohmann::json to_json() const {
    nlohmann::json pl;
    for (const auto& [rat, p] : path_loss) {
      pl[to_string(rat)] = {{"snr0_db", p.snr0_db}, {"exponent", p.exponent}};
    }
    nlohmann::json bj = nlohmann::json::array();
    for (const auto& b : bins) {
      bj.push_back({{"min_snr_db", b.min_snr_db},
                    {"bandwidth_frac", b.bandwidth_frac},
                    {"loss_prob", b.loss_prob}});
    }
    return {{"ref_distance_m", ref_distance_m},
            {"fade_sigma_db", fade_sigma_db},
            {"indoor_penalty_db", indoor_penalty_db},
            {"path_loss", pl},
            {"bins", bj}};
  }

  static RadioConfig from_json(const nlohmann::json& j) { return from_json(j, RadioConfig{}); }
  static RadioConfig from_json(const nlohmann::json& j, RadioConfig c) {
    c.ref_distance_m = j.value("ref_distance_m", c.ref_distance_m);
    c.fade_sigma_db = j.value("fade_sigma_db", c.fade_sigma_db);
    c.indoor_penalty_db = j.value("indoor_penalty_db", c.indoor_penalty_db);
    if (j.contains("path_loss")) {
      for (auto it = j["path_loss"].begin(); it != j["path_loss"].end(); ++it) {
        auto rat = rat_from_string(it.key());
        if (!rat) throw ValidationError("radio.path_loss: unknown RAT \"" + it.key() + "\"");
        c.path_loss[*rat] = {it.value().at("snr0_db").get<double>(),
                             it.value().at("exponent").get<double>()};
      }
    }
    if (j.contains("bins")) {
      c.bins.clear();
      for (const auto& b : j["bins"]) {
        c.bins.push_back({b.at("min_snr_db").get<double>(),
                          b.at("bandwidth_frac").get<double>(),
                          b.at("loss_prob").get<double>()});
      }
      std::sort(c.bins.begin(), c.bins.end(),
                [](const QualityBin& a, const QualityBin& b) { return a.min_snr_db > b.min_snr_db; });
    }
    return c;
  }
};

// Instantaneous link state. No serving id means no coverage: bandwidth 0,
// loss probability 1.
struct LinkSample {
  std::optional<std::string> serving;  // tower id, or peer id for P2P
  std::optional<Rat> rat;
  double snr_db = 0.0;
  double bandwidth_bps = 0.0;
  double loss_prob = 1.0;
  double base_latency_s = 0.0;
  bool p2p = false;

  bool has_coverage() const { return serving.has_value(); }

  static LinkSample no_coverage() { return LinkSample{}; }

  nlohmann::json to_json() const {
    nlohmann::json j{{"snr_db", snr_db},
                     {"bandwidth_bps", bandwidth_bps},
                     {"loss_prob", loss_prob},
                     {"base_latency_s", base_latency_s},
                     {"p2p", p2p}};
    j["serving"] = serving ? nlohmann::json(*serving) : nlohmann::json(nullptr);
    j["rat"] = rat ? nlohmann::json(to_string(*rat)) : nlohmann::json(nullptr);
    return j;
  }
};

// ---------------------------------------------------------------------------
// Topology CSV ingestion / emission
// ---------------------------------------------------------------------------

struct RowError {
  int line = 0;  // 1-based, header is line 1
  std::string message;
};

struct TopologyIngest {
  std::vector<CellTower> towers;
  std::vector<RowError> row_errors;
  GeoPoint origin;  // projection origin actually used
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

inline bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && p == e;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

inline std::string format_fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace detail

inline constexpr const char* kTowersCsvHeader =
    "tower_id,lat,lon,rat,max_bandwidth_bps,range_m,base_latency_s";

// Parses a towers CSV (documented schema, header required). Bad rows are
// collected with their line numbers; the whole ingest fails only when the
// header is wrong or every data row is bad.
inline TopologyIngest ingest_topology(std::istream& in,
                                      std::optional<GeoPoint> origin = std::nullopt) {
  std::string header;
  if (!std::getline(in, header)) {
    throw MalformedHeader("empty input, expected header \"" + std::string(kTowersCsvHeader) + "\"");
  }
  auto header_fields = detail::split_csv_row(header);
  auto expected = detail::split_csv_row(kTowersCsvHeader);
  auto lower = [](std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  if (header_fields.size() != expected.size()) {
    throw MalformedHeader("expected " + std::to_string(expected.size()) + " columns, got " +
                          std::to_string(header_fields.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (lower(header_fields[i]) != expected[i]) {
      throw MalformedHeader("column " + std::to_string(i + 1) + " is \"" + header_fields[i] +
                            "\", expected \"" + expected[i] + "\"");
    }
  }

  struct RawRow {
    std::string id;
    GeoPoint geo;
    Rat rat;
    double bw, range, latency;
  };
  std::vector<RawRow> rows;
  TopologyIngest result;
  std::string line;
  int line_no = 1;
  int data_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    ++data_rows;
    auto f = detail::split_csv_row(line);
    auto fail = [&](const std::string& msg) {
      result.row_errors.push_back({line_no, msg});
    };
    if (f.size() != 7) {
      fail("expected 7 fields, got " + std::to_string(f.size()));
      continue;
    }
    RawRow r;
    r.id = f[0];
    double lat, lon;
    if (r.id.empty()) { fail("tower_id is empty"); continue; }
    if (!detail::parse_double(f[1], lat) || lat < -90.0 || lat > 90.0) { fail("bad lat \"" + f[1] + "\""); continue; }
    if (!detail::parse_double(f[2], lon) || lon < -180.0 || lon > 180.0) { fail("bad lon \"" + f[2] + "\""); continue; }
    auto rat = rat_from_string(f[3]);
    if (!rat) { fail("bad rat \"" + f[3] + "\", expected one of 2G/3G/4G/5G"); continue; }
    if (!detail::parse_double(f[4], r.bw) || r.bw <= 0) { fail("bad max_bandwidth_bps \"" + f[4] + "\""); continue; }
    if (!detail::parse_double(f[5], r.range) || r.range <= 0) { fail("bad range_m \"" + f[5] + "\""); continue; }
    if (!detail::parse_double(f[6], r.latency) || r.latency < 0) { fail("bad base_latency_s \"" + f[6] + "\""); continue; }
    r.geo = {lat, lon};
    r.rat = *rat;
    rows.push_back(std::move(r));
  }

  if (data_rows > 0 && rows.empty()) {
    throw TopologyError("all " + std::to_string(data_rows) + " rows failed to parse");
  }

  if (origin) {
    result.origin = *origin;
  } else if (!rows.empty()) {
    double lat = 0, lon = 0;
    for (const auto& r : rows) { lat += r.geo.lat; lon += r.geo.lon; }
    result.origin = {lat / rows.size(), lon / rows.size()};
  }
  Projection proj(result.origin);
  for (const auto& r : rows) {
    CellTower t;
    t.id = r.id;
    t.geo = r.geo;
    t.pos = proj.to_local(r.geo);
    t.rat = r.rat;
    t.max_bandwidth_bps = r.bw;
    t.range_m = r.range;
    t.base_latency_s = r.latency;
    result.towers.push_back(std::move(t));
  }
  std::sort(result.towers.begin(), result.towers.end(),
            [](const CellTower& a, const CellTower& b) { return a.id < b.id; });
  return result;
}

// Writes the same schema back, lat/lon at 6 decimals.
inline std::string emit_topology(std::span<const CellTower> towers) {
  std::string out = kTowersCsvHeader;
  out += '\n';
  for (const auto& t : towers) {
    out += t.id;
    out += ',' + detail::format_fixed6(t.geo.lat);
    out += ',' + detail::format_fixed6(t.geo.lon);
    out += ',' + to_string(t.rat);
    out += ',' + detail::format_double(t.max_bandwidth_bps);
    out += ',' + detail::format_double(t.range_m);
    out += ',' + detail::format_double(t.base_latency_s);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Link model
// ---------------------------------------------------------------------------

// Deterministic part of the path-loss model: SNR at distance d with zero
// fade. Distances inside the reference distance saturate at snr0.
inline double modeled_snr_db(const CellTower& tower, double distance_m,
                             const RadioConfig& cfg) {
  const auto& pl = cfg.path_loss.at(tower.rat);
  double d = std::max(distance_m, cfg.ref_distance_m);
  return pl.snr0_db - 10.0 * pl.exponent * std::log10(d / cfg.ref_distance_m);
}

// Serving-tower election and link quality at one position. One fade draw
// per in-range tower, in tower-id order, so replay is a pure function of
// the stream draw count. Ties break to the higher RAT generation, then to
// the lexicographically smaller tower id.
inline LinkSample link_state(Vec2 position, std::span<const CellTower> towers,
                             bool indoor, const RadioConfig& cfg, RngStream& fade_stream) {
  struct Candidate {
    const CellTower* tower;
    double snr;
  };
  std::vector<const CellTower*> in_range;
  for (const auto& t : towers) {
    if (distance(position, t.pos) <= t.range_m) in_range.push_back(&t);
  }
  std::sort(in_range.begin(), in_range.end(),
            [](const CellTower* a, const CellTower* b) { return a->id < b->id; });

  std::optional<Candidate> best;
  for (const CellTower* t : in_range) {
    double snr = modeled_snr_db(*t, distance(position, t->pos), cfg);
    if (cfg.fade_sigma_db > 0.0) snr += fade_stream.gaussian(0.0, cfg.fade_sigma_db);
    if (indoor) snr -= cfg.indoor_penalty_db;
    bool better = false;
    if (!best) {
      better = true;
    } else if (snr != best->snr) {
      better = snr > best->snr;
    } else if (generation(t->rat) != generation(best->tower->rat)) {
      better = generation(t->rat) > generation(best->tower->rat);
    } else {
      better = t->id < best->tower->id;
    }
    if (better) best = Candidate{t, snr};
  }

  if (!best) return LinkSample::no_coverage();

  const QualityBin& bin = cfg.bin_for(best->snr);
  LinkSample s;
  s.serving = best->tower->id;
  s.rat = best->tower->rat;
  s.snr_db = best->snr;
  s.bandwidth_bps = bin.bandwidth_frac * best->tower->max_bandwidth_bps;
  s.loss_prob = bin.loss_prob;
  s.base_latency_s = best->tower->base_latency_s;
  return s;
}

inline double transfer_time_s(std::uint64_t payload_bytes, const LinkSample& link) {
  if (!link.has_coverage()) {
    throw NoCoverage("transfer_time over a link with no coverage");
  }
  return link.base_latency_s + static_cast<double>(payload_bytes) * 8.0 / link.bandwidth_bps;
}

// One delivery attempt: one draw from the loss stream. Returns the arrival
// time, or nullopt when the message is lost (which is an outcome, not an
// error). No coverage always loses.
inline std::optional<SimTime> deliver(std::uint64_t payload_bytes, const LinkSample& link,
                                      SimTime now, RngStream& loss_stream) {
  if (loss_stream.bernoulli(link.loss_prob)) return std::nullopt;
  if (!link.has_coverage()) return std::nullopt;  // loss_prob is 1, not reached
  return now + SimTime::from_seconds(transfer_time_s(payload_bytes, link));
}

struct P2PConfig {
  double range_m = 80.0;
  double bandwidth_bps = 2e6;
  double loss_prob = 0.05;
  double base_latency_s = 0.01;

  bool operator==(const P2PConfig&) const = default;

  nlohmann::json to_json() const {
    return {{"range_m", range_m},
            {"bandwidth_bps", bandwidth_bps},
            {"loss_prob", loss_prob},
            {"base_latency_s", base_latency_s}};
  }
  static P2PConfig from_json(const nlohmann::json& j) { return from_json(j, P2PConfig{}); }
  static P2PConfig from_json(const nlohmann::json& j, P2PConfig c) {
    c.range_m = j.value("range_m", c.range_m);
    c.bandwidth_bps = j.value("bandwidth_bps", c.bandwidth_bps);
    c.loss_prob = j.value("loss_prob", c.loss_prob);
    c.base_latency_s = j.value("base_latency_s", c.base_latency_s);
    return c;
  }
};

// Short-range device-to-device link; present only within range.
inline std::optional<LinkSample> p2p_link(Vec2 a, Vec2 b, const std::string& peer_id,
                                          const P2PConfig& cfg) {
  if (distance(a, b) > cfg.range_m) return std::nullopt;
  LinkSample s;
  s.serving = peer_id;
  s.p2p = true;
  s.bandwidth_bps = cfg.bandwidth_bps;
  s.loss_prob = cfg.loss_prob;
  s.base_latency_s = cfg.base_latency_s;
  return s;
}

// Two-hop composition: device -> peer over P2P, peer -> backend over
// cellular. Bottleneck bandwidth, additive latency, independent losses.
inline LinkSample relay_link(const LinkSample& p2p, const LinkSample& cellular) {
  LinkSample s;
  if (!p2p.has_coverage() || !cellular.has_coverage()) return LinkSample::no_coverage();
  s.serving = *p2p.serving + "+" + *cellular.serving;
  s.rat = cellular.rat;
  s.snr_db = cellular.snr_db;
  s.bandwidth_bps = std::min(p2p.bandwidth_bps, cellular.bandwidth_bps);
  s.loss_prob = 1.0 - (1.0 - p2p.loss_prob) * (1.0 - cellular.loss_prob);
  s.base_latency_s = p2p.base_latency_s + cellular.base_latency_s;
  s.p2p = true;
  return s;
}

}  // namespace edgeswarm
