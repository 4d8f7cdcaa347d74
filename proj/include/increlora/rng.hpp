#pragma once

#include <cstdint>

namespace increlora {

// Counter-based generator: draw i of a stream is a pure function of
// (seed, stream, i), so sequences are identical across runs and platforms
// and independent streams can be derived without sharing state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  // Sub-stream keyed by an index (e.g. the training step).
  static Rng derive(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept;

  std::uint64_t next_u64() noexcept;
  // Uniform in the open interval (0, 1).
  double uniform() noexcept;
  // Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept;

  std::uint64_t seed() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Named streams so that every random consumer draws from its own sequence.
namespace streams {
inline constexpr std::uint64_t kBackbone = 0x1001;
inline constexpr std::uint64_t kPlanted = 0x1002;
inline constexpr std::uint64_t kAdapter = 0x1003;
inline constexpr std::uint64_t kTrainData = 0x1004;
inline constexpr std::uint64_t kEvalData = 0x1005;
inline constexpr std::uint64_t kGradCheck = 0x1006;
}  // namespace streams

}  // namespace increlora
