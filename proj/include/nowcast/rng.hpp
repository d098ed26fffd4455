#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace nowcast {

// Deterministic random source. Every stochastic component receives its own
// stream derived from the master seed and a path of ids, so splits, trees and
// bootstrap replicates produce identical numbers regardless of the order in
// which they are evaluated. Distributions are implemented here instead of
// <random> adapters to keep the byte stream independent of the standard
// library in use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Substream addressed by (master, path...). Uses splitmix64 mixing.
  static Rng stream(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = master;
    for (std::uint64_t p : path) s = mix(s ^ mix(p));
    return Rng(s);
  }

  std::uint64_t next_u64() { return engine_(); }

  // uniform on [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive bounds
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(engine_() % span);
  }

  // standard normal via Marsaglia polar
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nowcast
