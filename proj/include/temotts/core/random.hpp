#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "temotts/core/common.hpp"

namespace temotts {

// Seeded RNG wrapper. Every stochastic step in the library draws from one of
// these; derive() gives reproducible independent streams from a single run seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  std::uint64_t next_u64() { return engine_(); }

  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    std::shuffle(v.begin(), v.end(), engine_);
  }

  // Independent stream for a named purpose ("init", "shuffle", "dropout", ...).
  Rng derive(const std::string& stream) const {
    return Rng(fnv1a64(stream) ^ (seed_ * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull));
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

}  // namespace temotts
