#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "increlora/allocator.hpp"
#include "increlora/config.hpp"

namespace increlora {

struct ReplayReport {
  bool identical = false;
  std::optional<std::size_t> first_divergence;  // index into the logged events
  std::string message;
  std::vector<AllocationEvent> regenerated;
};

// Re-runs the allocator on stand-in adapters, feeding it the scores recorded
// with each logged event, and checks that it regenerates the same log.
ReplayReport replay(const TrainConfig& cfg, const std::vector<AllocationEvent>& logged);

}  // namespace increlora
