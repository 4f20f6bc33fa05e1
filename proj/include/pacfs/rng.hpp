#pragma once

#include <cstdint>
#include <random>

namespace pacfs {

/// splitmix64 finalizer; used to derive independent sub-stream seeds.
std::uint64_t mix_seed(std::uint64_t value);

/// Seed of sub-stream `stream` under `seed`. Pure function, so the same
/// (seed, stream) pair always yields the same generator state.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) from the top 53 bits of one engine draw.
  double uniform();
  double uniform(double lower, double upper) { return lower + (upper - lower) * uniform(); }
  double normal();
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace pacfs
