#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

namespace edgeswarm {

// Virtual time as a non-negative count of microseconds. Integer ticks keep
// replay byte-exact; seconds are a view, never the stored representation.
struct SimTime {
  std::int64_t us = 0;

  static constexpr SimTime zero() { return SimTime{0}; }

  static SimTime from_seconds(double s) {
    return SimTime{static_cast<std::int64_t>(std::llround(s * 1e6))};
  }

  double seconds() const { return static_cast<double>(us) / 1e6; }

  SimTime operator+(SimTime o) const { return SimTime{us + o.us}; }
  SimTime operator-(SimTime o) const { return SimTime{us - o.us}; }
  auto operator<=>(const SimTime&) const = default;
};

inline SimTime operator""_s(long double s) {
  return SimTime::from_seconds(static_cast<double>(s));
}

inline SimTime operator""_s(unsigned long long s) {
  return SimTime{static_cast<std::int64_t>(s) * 1'000'000};
}

}  // namespace edgeswarm
