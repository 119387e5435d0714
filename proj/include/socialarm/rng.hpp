#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace socialarm {

/// Seeded generator with platform-independent draws.
///
/// std::mt19937_64 output is fully specified by the standard, the
/// std::*_distribution adaptors are not, so uniform draws are derived here
/// from the raw 64-bit stream. This keeps traces byte-identical across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Independent stream for a named consumer, derived from a session seed.
  static Rng stream(std::uint64_t seed, std::string_view label);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace socialarm
