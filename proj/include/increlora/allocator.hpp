#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "increlora/adapter.hpp"
#include "increlora/rng.hpp"
#include "increlora/scoring.hpp"

namespace increlora {

enum class Phase { Allocating, Closed };

// A module that gained rank in an event: its reserve became the active
// component `activated` and a fresh reserve `reserve` was appended.
struct Growth {
  std::size_t module = 0;
  std::uint64_t activated = 0;
  std::uint64_t reserve = 0;

  friend bool operator==(const Growth&, const Growth&) = default;
};

struct AllocationEvent {
  std::uint64_t step = 0;
  std::vector<std::size_t> selected;
  std::size_t r_total = 0;          // after the event, reserves counted
  std::vector<std::size_t> ranks;   // per module after the event, reserves counted
  std::vector<double> scores;       // S_hat used for the selection
  std::vector<Growth> growth;
};

struct MaskedReserve {
  std::size_t module = 0;
  std::uint64_t component = 0;
};

struct AllocatorOutcome {
  std::optional<AllocationEvent> event;
  bool closed = false;                 // the phase closed during this call
  std::vector<MaskedReserve> masked;   // reserves dropped at close
};

// Incremental rank allocation: every `nu` steps the `h` highest-scoring
// modules activate their reserve and receive a new one, until the total rank
// (reserves counted) reaches `r_final`; then every reserve is masked.
class Allocator {
 public:
  // Throws ConfigError unless n >= 1, 1 <= h <= n, nu >= 1, r_final >= n and
  // h divides r_final - n.
  Allocator(std::size_t n, std::size_t h, std::uint64_t nu, std::size_t r_final);

  AllocatorOutcome step(std::uint64_t t, const ImportanceState& scores,
                        std::span<SvdAdapter* const> adapters, Rng& rng);

  Phase phase() const noexcept { return phase_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t h() const noexcept { return h_; }
  std::uint64_t nu() const noexcept { return nu_; }
  std::size_t r_final() const noexcept { return r_final_; }
  std::size_t r_total() const noexcept { return r_total_; }
  const std::vector<AllocationEvent>& event_log() const noexcept { return log_; }

  std::size_t total_events() const noexcept { return (r_final_ - n_) / h_; }
  // r_final / h (integer division): the per-module rank bound.
  std::size_t theoretical_rank_cap() const noexcept { return r_final_ / h_; }
  // Rank of a module selected at every event: 1 + total_events().
  std::size_t max_reachable_rank() const noexcept { return 1 + total_events(); }
  // n + h * floor(t / nu), clamped at r_final.
  std::size_t expected_r_total(std::uint64_t t) const noexcept;

 private:
  void close(std::span<SvdAdapter* const> adapters, AllocatorOutcome& out);

  std::size_t n_;
  std::size_t h_;
  std::uint64_t nu_;
  std::size_t r_final_;
  std::size_t r_total_;
  Phase phase_ = Phase::Allocating;
  std::optional<std::uint64_t> last_step_;
  std::vector<AllocationEvent> log_;
};

}  // namespace increlora
