#include <filesystem>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "increlora/errors.hpp"
#include "increlora/records.hpp"
#include "increlora/replay.hpp"
#include "increlora/reports.hpp"
#include "increlora/trainer.hpp"

using namespace increlora;
using nlohmann::json;

namespace {

const TrainResult& small_run() {
  static const TrainResult r = train(fixtures::small_config());
  return r;
}

}  // namespace

TEST(MetricsRecord, SchemaRoundTrip) {
  for (const MetricsRecord& m : small_run().metrics) {
    const json j = metrics_json(m);
    ASSERT_EQ(j.size(), 5u);
    for (const char* key : {"step", "task_loss", "regu_loss", "r_total", "eval"}) ASSERT_TRUE(j.contains(key));
    ASSERT_TRUE(j["eval"].is_null() || j["eval"].is_number_float());
    const MetricsRecord back = parse_metrics(json::parse(j.dump()));
    ASSERT_EQ(back.step, m.step);
    ASSERT_EQ(back.task_loss, m.task_loss);
    ASSERT_EQ(back.regu_loss, m.regu_loss);
    ASSERT_EQ(back.r_total, m.r_total);
    ASSERT_EQ(back.eval, m.eval);
  }
}

TEST(MetricsRecord, ParserIsStrict) {
  json good = json::parse(R"({"step":1,"task_loss":0.5,"regu_loss":0.1,"r_total":3,"eval":null})");
  EXPECT_NO_THROW(parse_metrics(good));
  json extra = good;
  extra["lr"] = 0.1;
  EXPECT_THROW(parse_metrics(extra), Error);
  json missing = good;
  missing.erase("r_total");
  EXPECT_THROW(parse_metrics(missing), Error);
  json wrong = good;
  wrong["step"] = "one";
  EXPECT_THROW(parse_metrics(wrong), Error);
  json negative = good;
  negative["r_total"] = -1;
  EXPECT_THROW(parse_metrics(negative), Error);
}

TEST(EventRecord, SchemaRoundTrip) {
  ASSERT_FALSE(small_run().events.empty());
  for (const AllocationEvent& e : small_run().events) {
    const json j = event_json(e);
    ASSERT_EQ(j.size(), 5u);
    const AllocationEvent back = parse_event(json::parse(j.dump()));
    EXPECT_EQ(back.step, e.step);
    EXPECT_EQ(back.selected, e.selected);
    EXPECT_EQ(back.r_total, e.r_total);
    EXPECT_EQ(back.ranks, e.ranks);
    EXPECT_EQ(back.scores, e.scores);
  }
}

TEST(Jsonl, FilesRoundTrip) {
  const auto path = (std::filesystem::temp_directory_path() / "increlora_events_test.jsonl").string();
  std::vector<json> lines;
  for (const auto& e : small_run().events) lines.push_back(event_json(e));
  write_jsonl(path, lines);
  const auto events = read_events(path);
  ASSERT_EQ(events.size(), small_run().events.size());
  EXPECT_EQ(events.back().ranks, small_run().events.back().ranks);
  std::filesystem::remove(path);
}

TEST(Replay, RegeneratesTheLoggedEvents) {
  const ReplayReport rep = replay(small_run().config, small_run().events);
  EXPECT_TRUE(rep.identical) << rep.message;
  EXPECT_EQ(rep.regenerated.size(), small_run().events.size());
}

TEST(Replay, PinpointsTheFirstDivergentEvent) {
  auto events = small_run().events;
  ASSERT_GE(events.size(), 2u);
  // Flip the recorded scores so that a different module wins the second event.
  auto& e = events[1];
  const std::size_t chosen = e.selected[0];
  const std::size_t other = chosen == 0 ? 1 : 0;
  e.scores[other] = e.scores[chosen] * 2 + 1;
  const ReplayReport rep = replay(small_run().config, events);
  EXPECT_FALSE(rep.identical);
  EXPECT_EQ(rep.first_divergence, 1u);
}

TEST(Reports, FinalRanksAndGridAccounting) {
  const TrainResult& r = small_run();
  const TrainConfig& cfg = r.config;
  const auto deployed = final_ranks(cfg.modules(), r.events, r.phase, true);
  const auto counted = final_ranks(cfg.modules(), r.events, r.phase, false);
  const RankGrid grid = rank_report(deployed, {"linear"});
  EXPECT_EQ(grid.total(), cfg.r_final - cfg.modules());
  EXPECT_EQ(rank_report(counted, {"linear"}).total(), cfg.r_final);
  const std::string csv = grid.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "layer,linear");
}

TEST(Reports, EmptyLogGivesZeroDeployedGrid) {
  const auto ranks = final_ranks(4, {}, Phase::Closed, true);
  EXPECT_EQ(ranks, (std::vector<std::size_t>(4, 0)));
  const RankGrid grid = rank_report(ranks, {"q", "v"});
  EXPECT_EQ(grid.rows.size(), 2u);
  EXPECT_EQ(grid.to_csv(), "layer,q,v\n0,0,0\n1,0,0\n");
}

TEST(Reports, RankTrajectoryHasInitialRowAndOneRowPerEvent) {
  const std::string csv = rank_trajectory_csv(3, small_run().events);
  const auto lines = std::count(csv.begin(), csv.end(), '\n');
  EXPECT_EQ(static_cast<std::size_t>(lines), small_run().events.size() + 2);
}

TEST(LambdaHistogram, UntrainedAdapterSitsInTheReserveDecade) {
  Checkpoint ck;
  ModuleRecord m{0, 2, 2, {}, std::nullopt};
  for (int i = 0; i < 3; ++i) m.active.push_back({1e-5, {0, 0}, {0, 0}});
  ck.modules.push_back(m);
  const LambdaHistogram h = lambda_histogram(ck);
  EXPECT_EQ(h.total(), 3u);
  EXPECT_EQ(h.decades.at(-5), 3u);
}

TEST(LambdaHistogram, ZeroBinAndTotals) {
  Checkpoint ck;
  ModuleRecord m{0, 1, 1, {}, ComponentRecord{1e-5, {1}, {1}}};
  for (double l : {0.0, 0.05, -0.5, 3.0, 0.0}) m.active.push_back({l, {1}, {1}});
  ck.modules.push_back(m);
  const LambdaHistogram h = lambda_histogram(ck);
  EXPECT_EQ(h.zero, 2u);
  EXPECT_EQ(h.total(), 5u);  // reserves are not counted
  EXPECT_EQ(h.decades.at(-2), 1u);
  EXPECT_EQ(h.decades.at(-1), 1u);
  EXPECT_EQ(h.decades.at(0), 1u);
  EXPECT_EQ(decade_of(1.0), 0);
  EXPECT_EQ(decade_of(0.999), -1);
  EXPECT_EQ(decade_of(1e-5), -5);
}
