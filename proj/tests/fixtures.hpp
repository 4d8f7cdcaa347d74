#pragma once

#include "increlora/config.hpp"

namespace increlora::fixtures {

// Three small tanh layers; fast enough to train in well under a second.
inline TrainConfig small_config(Mode mode = Mode::IncreLora) {
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.seed = 3;
  cfg.total_steps = 240;
  cfg.warmup = 20;
  cfg.base_lr = 2e-2;
  cfg.batch_size = 16;
  cfg.h = 1;
  cfg.r_final = 6;
  cfg.task.dims = {5, 6, 6, 4};
  cfg.task.planted_ranks = {1, 2, 3};
  cfg.task.eval_samples = 64;
  return resolve(cfg);
}

}  // namespace increlora::fixtures
