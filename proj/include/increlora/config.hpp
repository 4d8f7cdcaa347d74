#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "increlora/adapter.hpp"
#include "increlora/netgraph.hpp"
#include "increlora/optim.hpp"

namespace increlora {

enum class Mode { IncreLora, FixedLora };

std::string_view to_string(Mode m) noexcept;

// Synthetic teacher-student task: a frozen random backbone whose layers carry
// planted updates of known rank.
struct TaskSpec {
  std::vector<std::size_t> dims;            // layer widths d0..dL; L = module count
  Activation activation = Activation::Tanh;
  LossKind loss = LossKind::MeanSquaredError;
  bool bias = true;
  double backbone_gain = 1.0;               // W0 entries ~ N(0, gain^2 / in)
  std::vector<std::size_t> planted_ranks;   // one per layer
  double planted_scale = 1.0;               // singular value of every planted term
  std::vector<double> planted_scales;       // optional per-layer override
  double noise = 0.01;
  std::size_t eval_samples = 512;
  std::vector<std::string> module_types = {"linear"};
  std::optional<std::uint64_t> seed;        // defaults to the run seed

  std::size_t modules() const noexcept { return dims.empty() ? 0 : dims.size() - 1; }
  bool operator==(const TaskSpec&) const = default;
};

struct TrainConfig {
  Mode mode = Mode::IncreLora;
  std::uint64_t seed = 0;
  std::uint64_t total_steps = 1000;
  std::uint64_t warmup = 50;
  std::uint64_t nu = 0;                     // 0 resolves to warmup
  double base_lr = 1e-2;
  std::size_t batch_size = 32;
  std::size_t h = 1;
  std::size_t r_final = 0;
  std::size_t fixed_rank = 0;               // 0 resolves to (r_final - n) / n
  std::vector<std::size_t> fixed_ranks;     // per-module ranks for fixed_lora
  double beta1 = 0.85;
  double beta2 = 0.85;
  double regu_weight = 0.1;
  double init_std = kDefaultInitStd;
  double adapter_scale = 1.0;
  bool advance_learning = true;
  bool restart_warmup = true;
  std::uint64_t eval_every = 0;             // 0 resolves to nu
  AdamHyper optimizer;
  TaskSpec task;

  std::size_t modules() const noexcept { return task.modules(); }
  std::uint64_t task_seed() const noexcept { return task.seed.value_or(seed); }
  bool operator==(const TrainConfig&) const = default;
};

// Parses a config document, rejecting unknown keys and invalid values with a
// ConfigError listing every problem found. Defaults are resolved, so the
// result is fully explicit.
TrainConfig parse_config(const nlohmann::json& doc);
TrainConfig load_config(const std::string& path);

// Fills derived defaults (nu, eval_every, fixed ranks) and validates.
TrainConfig resolve(TrainConfig cfg);
// Throws ConfigError listing every problem.
void validate(const TrainConfig& cfg);

// Fully explicit JSON form; parse_config(to_json(c)) == c.
nlohmann::json to_json(const TrainConfig& cfg);

// FNV-1a over the canonical JSON dump of the resolved config.
std::uint64_t config_hash(const TrainConfig& cfg);

}  // namespace increlora
