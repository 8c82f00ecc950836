#pragma once

#include <cstdint>

namespace gsens {

// Splittable counter-style generator (splitmix64). Every simulation stream is
// seeded independently via derive_seed(master, index), so replications can run
// on any thread schedule and still produce identical draws.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool next_bernoulli(double p) { return next_uniform() < p; }

  // Standard normal via Box-Muller; the paired draw is cached.
  double next_normal();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Stream seed for replication `index` under `master_seed` (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

}  // namespace gsens
