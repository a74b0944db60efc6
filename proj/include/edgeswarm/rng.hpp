#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>

#include "edgeswarm/errors.hpp"

namespace edgeswarm {

namespace detail {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// One named stream of deterministic draws. The stream seed is a pure
// function of (master seed, stream name), so streams never perturb each
// other no matter in which order they are opened or drawn from.
class RngStream {
 public:
  RngStream(std::string name, std::uint64_t master_seed)
      : name_(std::move(name)),
        seed_(detail::splitmix64(master_seed ^ detail::fnv1a64(name_))),
        gen_(seed_) {}

  // Uniform sample in [0, 1). Exactly one generator step per call.
  double next() {
    ++draw_count_;
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform sample in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next(); }

  // Box-Muller; always consumes exactly two uniform draws.
  double gaussian(double mean, double sigma) {
    double u1 = next();
    double u2 = next();
    // avoid log(0)
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return mean + sigma * r * std::cos(2.0 * M_PI * u2);
  }

  // Exponential with the given rate (events per unit); two uniforms never
  // needed, one draw per call.
  double exponential(double rate) { return -std::log(1.0 - next()) / rate; }

  bool bernoulli(double p) { return next() < p; }

  const std::string& name() const { return name_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t draw_count() const { return draw_count_; }

 private:
  std::string name_;
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  std::uint64_t draw_count_ = 0;
};

// Registry of streams under one master seed. A stream must be opened before
// it can be drawn from; opening is idempotent.
class RngRegistry {
 public:
  explicit RngRegistry(std::uint64_t master_seed) : master_seed_(master_seed) {}

  RngStream& open(std::string_view name) {
    auto it = streams_.find(std::string(name));
    if (it == streams_.end()) {
      it = streams_.emplace(std::string(name), RngStream(std::string(name), master_seed_)).first;
    }
    return it->second;
  }

  RngStream& get(std::string_view name) {
    auto it = streams_.find(std::string(name));
    if (it == streams_.end()) {
      throw UnknownStream("stream \"" + std::string(name) + "\" was never opened");
    }
    return it->second;
  }

  std::uint64_t master_seed() const { return master_seed_; }

 private:
  std::uint64_t master_seed_;
  std::map<std::string, RngStream, std::less<>> streams_;
};

}  // namespace edgeswarm
