#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "increlora/allocator.hpp"
#include "increlora/checkpoint.hpp"
#include "increlora/config.hpp"
#include "increlora/netgraph.hpp"
#include "increlora/optim.hpp"
#include "increlora/scoring.hpp"
#include "increlora/task.hpp"

namespace increlora {

struct MetricsRecord {
  std::uint64_t step = 0;
  double task_loss = 0.0;
  double regu_loss = 0.0;   // sum over adapters of the orthogonality penalty
  double total_loss = 0.0;  // task_loss + regu_weight * regu_loss
  std::size_t r_total = 0;
  std::vector<std::size_t> ranks;  // filled on allocation events only
  std::optional<double> eval;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

struct GroupRate {
  std::size_t group = 0;
  std::uint64_t birth = 0;
  double lr = 0.0;
};

// Learning rate of every parameter group at an allocation event.
struct ScheduleRecord {
  std::uint64_t step = 0;
  std::vector<GroupRate> groups;
};

struct StepView {
  std::uint64_t step;
  const MetricsRecord& record;
  const Backbone& net;
  const Optimizer& optimizer;
  const Allocator* allocator;        // null in fixed_lora mode
  const ImportanceState* scores;     // null in fixed_lora mode
};

using StepObserver = std::function<void(const StepView&)>;

struct TrainResult {
  TrainConfig config;
  std::uint64_t config_hash = 0;
  Backbone model;
  Phase phase = Phase::Closed;
  std::vector<MetricsRecord> metrics;
  std::vector<AllocationEvent> events;
  std::vector<ScheduleRecord> schedules;
  Checkpoint final_checkpoint;
  Checkpoint best_checkpoint;
  double final_eval = 0.0;
  double best_eval = 0.0;
};

// Adapters for step 0 of a run: reserve-only (increlora) or fixed-rank.
std::vector<SvdAdapter> initial_adapters(const TrainConfig& cfg, const PlantedTask& task);

// Every parameter the optimizer must own: a and b of every present
// component, lambda of every active one.
std::vector<ParamRef> trainable_params(const Backbone& net);

// Runs total_steps steps. Throws DivergenceError when the loss turns non-finite.
TrainResult train(const TrainConfig& cfg, const StepObserver& observer = {});

// Task metric of a checkpoint on the eval split of the config's task. Refuses
// (ConfigError) a checkpoint written under a different config.
double evaluate(const Checkpoint& ckpt, const TrainConfig& cfg);

// Whether metric a is at least as good as b (lower MSE, higher accuracy).
bool metric_not_worse(LossKind loss, double a, double b) noexcept;

}  // namespace increlora
