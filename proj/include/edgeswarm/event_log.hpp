#pragma once

#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgeswarm/errors.hpp"
#include "edgeswarm/time.hpp"

namespace edgeswarm {

using json = nlohmann::json;

struct LogEntry {
  SimTime time;
  std::uint64_t seq = 0;
  std::string kind;
  std::string subject;
  json payload;

  json to_json() const {
    return json{{"time_us", time.us},
                {"seq", seq},
                {"kind", kind},
                {"subject", subject},
                {"payload", payload}};
  }

  static LogEntry from_json(const json& j) {
    LogEntry e;
    e.time = SimTime{j.at("time_us").get<std::int64_t>()};
    e.seq = j.at("seq").get<std::uint64_t>();
    e.kind = j.at("kind").get<std::string>();
    e.subject = j.at("subject").get<std::string>();
    e.payload = j.at("payload");
    return e;
  }
};

// Append-only, (time, seq)-ordered record of everything that happened in a
// run. Serialized as newline-delimited JSON, one object per event; the
// scenario id and master seed travel in the scenario-start event.
struct EventLog {
  std::string scenario_id;
  std::uint64_t master_seed = 0;
  std::vector<LogEntry> entries;

  void append(LogEntry e) { entries.push_back(std::move(e)); }

  std::string to_jsonl() const {
    std::string out;
    for (const auto& e : entries) {
      out += e.to_json().dump();
      out += '\n';
    }
    return out;
  }

  static EventLog from_jsonl(std::istream& in) {
    EventLog log;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) {
        throw MalformedLog("line " + std::to_string(line_no) + " is not valid JSON");
      }
      try {
        log.append(LogEntry::from_json(j));
      } catch (const json::exception& ex) {
        throw MalformedLog("line " + std::to_string(line_no) + ": " + ex.what());
      }
    }
    for (const auto& e : log.entries) {
      if (e.kind == "scenario-start") {
        log.scenario_id = e.payload.value("scenario_id", "");
        log.master_seed = e.payload.value("seed", std::uint64_t{0});
        break;
      }
    }
    return log;
  }

  static EventLog from_jsonl(const std::string& text) {
    std::istringstream in(text);
    return from_jsonl(in);
  }
};

}  // namespace edgeswarm
