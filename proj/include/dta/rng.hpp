#pragma once

// Seeded random streams. Every replica owns independent streams keyed by
// (seed, replica, purpose), so results do not depend on scheduling.

#include <cmath>
#include <cstdint>
#include <random>

namespace dta {

enum class StreamPurpose : std::uint64_t {
  Network = 1,
  Disturbance = 2,
  Plan = 3,
  Model = 4,
  Test = 5,
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  bool bernoulli(double p) { return uniform01() < p; }
  int index(int n) {
    return static_cast<int>(uniform01() * static_cast<double>(n));
  }
  double normal() { return normal_(engine_); }
  /// Zero-mean Laplace with the given scale, by inverse CDF.
  double laplace(double scale) {
    const double u = uniform01() - 0.5;
    const double s = u < 0.0 ? -1.0 : 1.0;
    return -scale * s * std::log1p(-2.0 * std::abs(u));
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline Rng make_stream(std::uint64_t seed, std::uint64_t replica,
                       StreamPurpose purpose) {
  std::uint64_t s = seed;
  std::uint64_t mixed = splitmix64(s);
  mixed ^= replica * 0xD1B54A32D192ED03ULL;
  mixed = splitmix64(mixed);
  mixed ^= static_cast<std::uint64_t>(purpose) * 0x8CB92BA72F3D8DD7ULL;
  return Rng(splitmix64(mixed));
}

}  // namespace dta
