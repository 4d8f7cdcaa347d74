#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "increlora/errors.hpp"

using namespace increlora;
using nlohmann::json;

namespace {

json minimal_doc() {
  return json::parse(R"({
    "mode": "increlora", "r_final": 5, "h": 1, "total_steps": 400,
    "task": {"dims": [4, 4, 3], "planted_ranks": [1, 2]}
  })");
}

std::string error_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, DefaultsAreResolved) {
  const TrainConfig cfg = parse_config(minimal_doc());
  EXPECT_EQ(cfg.nu, cfg.warmup);
  EXPECT_EQ(cfg.eval_every, cfg.nu);
  EXPECT_EQ(cfg.beta1, 0.85);
  EXPECT_EQ(cfg.beta2, 0.85);
  EXPECT_EQ(cfg.batch_size, 32u);
  EXPECT_EQ(cfg.regu_weight, 0.1);
  EXPECT_EQ(cfg.init_std, 0.02);
  EXPECT_EQ(cfg.adapter_scale, 1.0);
  EXPECT_EQ(cfg.task.noise, 0.01);
}

TEST(Config, RejectsUnknownKeysAtEveryLevel) {
  json doc = minimal_doc();
  doc["learning_rate"] = 0.1;
  doc["task"]["depth"] = 3;
  doc["optimizer"] = {{"momentum", 0.9}};
  const std::string msg = error_of(doc);
  EXPECT_NE(msg.find("learning_rate"), std::string::npos) << msg;
  EXPECT_NE(msg.find("depth"), std::string::npos) << msg;
  EXPECT_NE(msg.find("momentum"), std::string::npos) << msg;
}

TEST(Config, ReportsEveryProblemAtOnce) {
  json doc = minimal_doc();
  doc["base_lr"] = -1.0;
  doc["beta1"] = 1.5;
  doc["mode"] = "pruning";
  doc["task"]["activation"] = "gelu";
  const std::string msg = error_of(doc);
  for (const char* key : {"base_lr", "beta1", "mode", "activation"}) {
    EXPECT_NE(msg.find(key), std::string::npos) << key << " missing from: " << msg;
  }
}

TEST(Config, RejectsWrongTypes) {
  json doc = minimal_doc();
  doc["h"] = "two";
  doc["advance_learning"] = 1;
  const std::string msg = error_of(doc);
  EXPECT_NE(msg.find("h"), std::string::npos);
  EXPECT_NE(msg.find("advance_learning"), std::string::npos);
}

TEST(Config, IndivisibleBudgetSuggestsAdjustment) {
  json doc = minimal_doc();
  doc["h"] = 2;
  doc["r_final"] = 5;
  const std::string msg = error_of(doc);
  EXPECT_NE(msg.find("use 4 or 6"), std::string::npos) << msg;
}

TEST(Config, LastEventMustLeaveRoomToTrain) {
  json doc = minimal_doc();
  doc["warmup"] = 100;
  doc["r_final"] = 6;
  doc["total_steps"] = 500;
  EXPECT_NE(error_of(doc).find("leaves no steps"), std::string::npos);
  doc["total_steps"] = 501;
  EXPECT_NO_THROW(parse_config(doc));
}

TEST(Config, FixedRanksDerivedFromTheSameBudget) {
  json doc = minimal_doc();
  doc["mode"] = "fixed_lora";
  doc["r_final"] = 6;
  const TrainConfig cfg = parse_config(doc);
  EXPECT_EQ(cfg.fixed_ranks, (std::vector<std::size_t>{2, 2}));
  doc["fixed_ranks"] = {1, 3};
  EXPECT_EQ(parse_config(doc).fixed_ranks, (std::vector<std::size_t>{1, 3}));
  doc["fixed_ranks"] = {1, 5};
  EXPECT_NE(error_of(doc).find("fixed_ranks[1]"), std::string::npos);
}

TEST(Config, JsonRoundTrip) {
  TrainConfig cfg = fixtures::small_config();
  cfg.optimizer.weight_decay = 0.01;
  cfg.task.seed = 99;
  cfg.task.planted_scales = {0.5, 1.0, 2.0};
  cfg = resolve(cfg);
  EXPECT_EQ(parse_config(to_json(cfg)), cfg);
  EXPECT_EQ(parse_config(to_json(fixtures::small_config(Mode::FixedLora))),
            fixtures::small_config(Mode::FixedLora));
}

TEST(Config, HashTracksContent) {
  const TrainConfig a = fixtures::small_config();
  TrainConfig b = a;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed += 1;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, MissingFileIsAConfigError) {
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}
