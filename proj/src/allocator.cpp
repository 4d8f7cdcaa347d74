#include "increlora/allocator.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "increlora/errors.hpp"

namespace increlora {

Allocator::Allocator(std::size_t n, std::size_t h, std::uint64_t nu, std::size_t r_final)
    : n_(n), h_(h), nu_(nu), r_final_(r_final), r_total_(n) {
  if (n < 1) throw ConfigError("allocator: need at least one module");
  if (h < 1 || h > n) {
    throw ConfigError("allocator: h=" + std::to_string(h) + " must lie in [1, " +
                      std::to_string(n) + "]");
  }
  if (nu < 1) throw ConfigError("allocator: nu must be at least 1");
  if (r_final < n) {
    throw ConfigError("allocator: r_final=" + std::to_string(r_final) +
                      " is below the initial total rank n=" + std::to_string(n));
  }
  const std::size_t extra = r_final - n;
  if (extra % h != 0) {
    const std::size_t down = r_final - extra % h;
    const std::size_t up = down + h;
    throw ConfigError("allocator: r_final - n = " + std::to_string(extra) +
                      " is not divisible by h=" + std::to_string(h) + "; use r_final=" +
                      std::to_string(down) + " or r_final=" + std::to_string(up));
  }
}

std::size_t Allocator::expected_r_total(std::uint64_t t) const noexcept {
  const std::uint64_t events = std::min<std::uint64_t>(t / nu_, total_events());
  return n_ + h_ * static_cast<std::size_t>(events);
}

void Allocator::close(std::span<SvdAdapter* const> adapters, AllocatorOutcome& out) {
  phase_ = Phase::Closed;
  out.closed = true;
  for (std::size_t k = 0; k < adapters.size(); ++k) {
    if (auto id = adapters[k]->mask_reserve()) out.masked.push_back({k, *id});
  }
}

AllocatorOutcome Allocator::step(std::uint64_t t, const ImportanceState& scores,
                                 std::span<SvdAdapter* const> adapters, Rng& rng) {
  if (last_step_ && t <= *last_step_) {
    throw std::logic_error("Allocator::step: step " + std::to_string(t) +
                           " does not follow step " + std::to_string(*last_step_));
  }
  last_step_ = t;
  AllocatorOutcome out;
  if (phase_ == Phase::Closed) return out;
  if (adapters.size() != n_ || scores.size() != n_) {
    throw std::invalid_argument("Allocator::step: expected " + std::to_string(n_) + " modules");
  }

  if (r_total_ < r_final_ && t % nu_ == 0) {
    AllocationEvent ev;
    ev.step = t;
    ev.scores.assign(scores.scores().begin(), scores.scores().end());
    ev.selected = scores.top_h(h_);
    for (std::size_t k : ev.selected) {
      SvdAdapter& ad = *adapters[k];
      const auto& reserve = ad.reserve();
      if (!reserve) {
        throw std::logic_error("Allocator::step: module " + std::to_string(k) +
                               " has no reserve while allocating");
      }
      const std::uint64_t activated = reserve->id;
      ad.activate_reserve();
      const std::uint64_t fresh = ad.append_reserve(rng);
      ev.growth.push_back({k, activated, fresh});
    }
    r_total_ += h_;
    ev.r_total = r_total_;
    for (const SvdAdapter* ad : adapters) ev.ranks.push_back(ad->rank());
    log_.push_back(ev);
    out.event = std::move(ev);
  }
  if (r_total_ == r_final_) close(adapters, out);
  return out;
}

}  // namespace increlora
