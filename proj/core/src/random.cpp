#include "safe/random.hpp"

#include <cmath>
#include <numbers>

namespace safe {

std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  return mix_seed(mix_seed(base) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

namespace {

double to_unit(std::uint64_t bits) noexcept { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

// Box-Muller on two uniforms; u1 is mapped into (0, 1] so log() is finite.
std::pair<double, double> box_muller(double u1, double u2) noexcept {
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

}  // namespace

double RandomStream::uniform() { return to_unit(engine_()); }

double RandomStream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  auto [a, b] = box_muller(u1, u2);
  cached_ = b;
  has_cached_ = true;
  return a;
}

double hashed_normal(std::uint64_t key, std::uint64_t index) noexcept {
  const std::uint64_t h = mix_seed(key ^ mix_seed(index));
  const double u1 = to_unit(h);
  const double u2 = to_unit(mix_seed(h));
  return box_muller(u1, u2).first;
}

}  // namespace safe
