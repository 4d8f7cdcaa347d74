#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "increlora/config.hpp"
#include "increlora/trainer.hpp"

namespace increlora {

struct Summary {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

Summary summarize(const std::vector<double>& values);

struct SeedOutcome {
  std::uint64_t seed = 0;
  double eval_a = 0.0;
  double eval_b = 0.0;
  std::vector<std::size_t> deployed_ranks_a;
  std::vector<std::size_t> deployed_ranks_b;
};

struct CompareReport {
  LossKind loss = LossKind::MeanSquaredError;
  std::vector<SeedOutcome> seeds;
  Summary a;
  Summary b;
  std::size_t wins_a = 0;  // seeds where A's final metric is not worse than B's

  nlohmann::json to_json() const;
};

// Deployed per-module ranks of a finished run (masked reserves excluded).
std::vector<std::size_t> deployed_ranks(const TrainResult& r);

// Trains both configs on seeds base_seed .. base_seed + seeds - 1 and compares
// final eval metrics. Runs are spread over OpenMP threads; each run is
// deterministic, so the report does not depend on the thread count.
CompareReport compare(const TrainConfig& a, const TrainConfig& b, std::size_t seeds,
                      std::uint64_t base_seed);

}  // namespace increlora
