#include "increlora/rng.hpp"

#include <cmath>
#include <numbers>

namespace increlora {
namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) noexcept : key_(mix(seed ^ mix(stream + kGamma))) {}

Rng Rng::derive(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
  return Rng(mix(seed + kGamma * (index + 1)), stream);
}

std::uint64_t Rng::next_u64() noexcept {
  ++counter_;
  return mix(key_ + kGamma * counter_);
}

double Rng::uniform() noexcept {
  // 53 random mantissa bits, shifted off zero.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

}  // namespace increlora
