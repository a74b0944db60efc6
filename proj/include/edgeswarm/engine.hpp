#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "edgeswarm/errors.hpp"
#include "edgeswarm/event_log.hpp"
#include "edgeswarm/rng.hpp"
#include "edgeswarm/time.hpp"

namespace edgeswarm {

// Single-threaded discrete-event core. Scheduled events are dequeued in
// (time, schedule-order) and appended to the log as they execute; emit()
// records an event at the current clock instantly, so anything a handler
// emits lands in the log right where it happened. Log seq is the append
// counter: entries are always sorted by (time, seq).
class Simulator {
 public:
  using Handler = std::function<void()>;

  Simulator(std::string scenario_id, std::uint64_t master_seed)
      : rng_(master_seed) {
    log_.scenario_id = std::move(scenario_id);
    log_.master_seed = master_seed;
  }

  SimTime now() const { return clock_; }

  // Enqueues an event. Returns a stable event id (its scheduling order).
  std::uint64_t schedule(SimTime at, std::string kind, std::string subject,
                         json payload, Handler handler = nullptr) {
    if (at < clock_) {
      throw SchedulingInPast("schedule at " + std::to_string(at.us) +
                             "us, clock already at " + std::to_string(clock_.us) + "us");
    }
    std::uint64_t id = next_event_id_++;
    queue_.push(Pending{at, id, std::move(kind), std::move(subject), std::move(payload),
                        std::move(handler)});
    return id;
  }

  // Schedule-at-now with immediate processing: the entry is appended to the
  // log on the spot. This is how handlers record what they did.
  std::uint64_t emit(std::string kind, std::string subject, json payload) {
    std::uint64_t id = next_event_id_++;
    append(std::move(kind), std::move(subject), std::move(payload));
    return id;
  }

  // Processes every event with time <= t_end, including events scheduled
  // while running. An empty queue is a normal halt; the clock still
  // advances to t_end.
  const EventLog& run_until(SimTime t_end) {
    if (t_end < clock_) {
      throw SchedulingInPast("run_until(" + std::to_string(t_end.us) +
                             "us) is before clock " + std::to_string(clock_.us) + "us");
    }
    while (!queue_.empty() && queue_.top().time <= t_end) {
      Pending ev = queue_.top();
      queue_.pop();
      clock_ = ev.time;
      append(std::move(ev.kind), std::move(ev.subject), std::move(ev.payload));
      if (ev.handler) ev.handler();
    }
    clock_ = t_end;
    return log_;
  }

  RngRegistry& rng() { return rng_; }
  RngStream& open_stream(std::string_view name) { return rng_.open(name); }
  RngStream& stream(std::string_view name) { return rng_.get(name); }

  const EventLog& log() const { return log_; }
  std::size_t pending() const { return queue_.size(); }
  std::uint64_t scheduled_count() const { return next_event_id_; }

 private:
  struct Pending {
    SimTime time;
    std::uint64_t id;
    std::string kind;
    std::string subject;
    json payload;
    Handler handler;
  };

  struct Later {
    bool operator()(const Pending& a, const Pending& b) const {
      if (a.time != b.time) return b.time < a.time;
      return b.id < a.id;
    }
  };

  void append(std::string kind, std::string subject, json payload) {
    log_.append(LogEntry{clock_, log_seq_++, std::move(kind), std::move(subject),
                         std::move(payload)});
  }

  SimTime clock_ = SimTime::zero();
  std::uint64_t next_event_id_ = 0;
  std::uint64_t log_seq_ = 0;
  std::priority_queue<Pending, std::vector<Pending>, Later> queue_;
  EventLog log_;
  RngRegistry rng_;
};

}  // namespace edgeswarm
