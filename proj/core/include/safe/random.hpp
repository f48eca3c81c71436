#pragma once

#include <cstdint>
#include <random>

namespace safe {

// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

// Seeded stream of uniform and standard-normal variates.
//
// Built on std::mt19937_64, whose output sequence is fixed by the standard.
// The uniform and Gaussian transforms are done here rather than through
// std::*_distribution so that streams are identical across standard libraries.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  // Standard normal via Box-Muller; pairs are cached.
  double normal();
  double normal(double sigma) { return sigma * normal(); }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// Counter-based standard normal: a pure function of (key, index).
double hashed_normal(std::uint64_t key, std::uint64_t index) noexcept;

}  // namespace safe
