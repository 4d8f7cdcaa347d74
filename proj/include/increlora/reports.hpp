#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "increlora/allocator.hpp"
#include "increlora/checkpoint.hpp"

namespace increlora {

// Per-module ranks after the last event. With `deployed`, masked reserves are
// not counted (each module loses one once the phase has closed).
std::vector<std::size_t> final_ranks(std::size_t n, const std::vector<AllocationEvent>& events,
                                     Phase phase, bool deployed);

// Final ranks laid out as layers x module types: module k sits at row
// k / types, column k % types.
struct RankGrid {
  std::vector<std::string> module_types;
  std::vector<std::vector<std::size_t>> rows;

  std::size_t total() const;
  std::string to_csv() const;
};

RankGrid rank_report(const std::vector<std::size_t>& ranks,
                     const std::vector<std::string>& module_types);

// One row per event: step followed by every module's rank (reserves counted).
std::string rank_trajectory_csv(std::size_t n, const std::vector<AllocationEvent>& events);

// Counts of active |lambda| per decade: key d covers [10^d, 10^(d+1)).
struct LambdaHistogram {
  std::size_t zero = 0;
  std::map<int, std::size_t> decades;

  std::size_t total() const;
  std::string to_csv() const;
};

int decade_of(double magnitude);
LambdaHistogram lambda_histogram(const Checkpoint& ckpt);

}  // namespace increlora
