#pragma once

#include <cstdint>
#include <random>

namespace condenser {

/// Seeded generator with a portable mapping to doubles (the standard distributions are
/// implementation defined, which would break bit-identical reruns across toolchains).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  std::uint64_t index(std::uint64_t n) { return gen_() % n; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace condenser
