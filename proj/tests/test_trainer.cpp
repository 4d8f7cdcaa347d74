#include <cmath>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "increlora/compare.hpp"
#include "increlora/errors.hpp"
#include "increlora/stats.hpp"
#include "increlora/trainer.hpp"

using namespace increlora;

TEST(Train, DeterministicMetricsStream) {
  const TrainConfig cfg = fixtures::small_config();
  const TrainResult a = train(cfg);
  const TrainResult b = train(cfg);
  EXPECT_EQ(a.metrics, b.metrics);
  EXPECT_EQ(a.final_checkpoint, b.final_checkpoint);
}

TEST(Train, LossDecompositionHoldsEveryStep) {
  const TrainConfig cfg = fixtures::small_config();
  for (const MetricsRecord& m : train(cfg).metrics) {
    ASSERT_NEAR(m.total_loss, m.task_loss + cfg.regu_weight * m.regu_loss, 1e-12 * (1 + m.total_loss));
  }
}

TEST(Train, ClosesWithDeployedRankEqualToBudgetMinusModules) {
  const TrainConfig cfg = fixtures::small_config();
  const TrainResult r = train(cfg);
  EXPECT_EQ(r.phase, Phase::Closed);
  std::size_t active = 0;
  for (std::size_t k = 0; k < r.model.size(); ++k) {
    EXPECT_FALSE(r.model.adapter(k).has_reserve());
    active += r.model.adapter(k).active().size();
  }
  EXPECT_EQ(active, cfg.r_final - cfg.modules());
}

TEST(Train, BackboneStaysFrozen) {
  TrainConfig cfg = fixtures::small_config();
  cfg.total_steps = 100;
  const PlantedTask task(cfg.task, cfg.task_seed());
  const TrainResult r = train(cfg);
  for (std::size_t k = 0; k < r.model.size(); ++k) EXPECT_EQ(r.model.layer(k).w0, task.w0(k));
}

TEST(Train, ReserveLambdaNeverMovesAndGroupsStayDisjoint) {
  TrainConfig cfg = fixtures::small_config();
  std::size_t checked = 0;
  train(cfg, [&](const StepView& v) {
    for (std::size_t k = 0; k < v.net.size(); ++k) {
      if (const auto& res = v.net.adapter(k).reserve()) {
        ASSERT_EQ(res->lambda, kReserveLambda);
        ASSERT_TRUE(res->frozen);
      }
    }
    const auto problems = v.optimizer.audit(trainable_params(v.net));
    ASSERT_TRUE(problems.empty()) << "step " << v.step << ": " << problems.front();
    ++checked;
  });
  EXPECT_EQ(checked, cfg.total_steps);
}

TEST(Train, EventGroupsHoldActivatedLambdaAndNewReserve) {
  const TrainConfig cfg = fixtures::small_config();
  std::size_t events_seen = 0;
  train(cfg, [&](const StepView& v) {
    if (v.allocator == nullptr || v.allocator->event_log().size() == events_seen) return;
    const AllocationEvent& ev = v.allocator->event_log().back();
    events_seen = v.allocator->event_log().size();
    const auto& groups = v.optimizer.groups();
    for (std::size_t i = 0; i < ev.growth.size(); ++i) {
      const Growth& g = ev.growth[i];
      const ParamGroup& group = groups[groups.size() - ev.growth.size() + i];
      EXPECT_EQ(group.birth(), ev.step);
      std::vector<ParamRef> refs;
      for (const auto& s : group.slots()) refs.push_back(s.ref);
      std::vector<ParamRef> expect{{g.module, g.activated, ParamField::Lambda}};
      if (v.net.adapter(g.module).has_reserve()) {
        expect.push_back({g.module, g.reserve, ParamField::A});
        expect.push_back({g.module, g.reserve, ParamField::B});
      }
      std::sort(refs.begin(), refs.end());
      std::sort(expect.begin(), expect.end());
      EXPECT_EQ(refs, expect);
      // The activated component's factors stay in the group they trained in.
      EXPECT_TRUE(v.optimizer.contains({g.module, g.activated, ParamField::A}));
    }
  });
  EXPECT_EQ(events_seen, cfg.r_final - cfg.modules());
}

TEST(Train, ActivatedLambdaStartsAtTheReserveValue) {
  const TrainConfig cfg = fixtures::small_config();
  train(cfg, [&](const StepView& v) {
    if (v.allocator == nullptr || v.allocator->event_log().empty()) return;
    const AllocationEvent& ev = v.allocator->event_log().back();
    if (ev.step != v.step) return;
    for (const Growth& g : ev.growth) {
      EXPECT_EQ(v.net.adapter(g.module).find(g.activated)->lambda, kReserveLambda);
    }
  });
}

TEST(Train, FixedLoraHasNoEventsAndNoReserves) {
  const TrainConfig cfg = fixtures::small_config(Mode::FixedLora);
  const TrainResult r = train(cfg);
  EXPECT_TRUE(r.events.empty());
  for (std::size_t k = 0; k < r.model.size(); ++k) {
    EXPECT_FALSE(r.model.adapter(k).has_reserve());
    EXPECT_EQ(r.model.adapter(k).active().size(), cfg.fixed_ranks[k]);
  }
  EXPECT_EQ(r.metrics.front().r_total, cfg.modules() * cfg.fixed_ranks[0]);
}

TEST(Train, WithoutAdvanceLearningReservesStayOutOfTraining) {
  TrainConfig cfg = fixtures::small_config();
  cfg.advance_learning = false;
  cfg = resolve(cfg);
  const PlantedTask task(cfg.task, cfg.task_seed());
  const auto initial = initial_adapters(cfg, task);
  train(cfg, [&](const StepView& v) {
    if (v.step != cfg.nu - 1) return;
    // Before the first event the dormant reserves are untouched and nothing trains.
    for (std::size_t k = 0; k < v.net.size(); ++k) {
      EXPECT_EQ(v.net.adapter(k).reserve()->a, initial[k].reserve()->a);
    }
    EXPECT_EQ(v.record.regu_loss, 0.0);
  });
}

TEST(Train, SingleLayerQuadraticConvergesToThePlantedUpdate) {
  TrainConfig cfg;
  cfg.mode = Mode::FixedLora;
  cfg.regu_weight = 0.0;
  cfg.total_steps = 5000;
  cfg.warmup = 50;
  cfg.base_lr = 2e-2;
  cfg.fixed_rank = 2;
  cfg.task.dims = {6, 4};
  cfg.task.planted_ranks = {2};
  cfg.task.activation = Activation::Identity;
  cfg.task.bias = false;
  cfg.task.noise = 0.0;
  cfg.task.eval_samples = 256;
  const TrainResult r = train(resolve(cfg));
  EXPECT_LE(r.final_eval, 1e-3);
}

TEST(Train, BestCheckpointIsTheBestEvaluated) {
  const TrainConfig cfg = fixtures::small_config();
  const TrainResult r = train(cfg);
  double best = INFINITY;
  for (const auto& m : r.metrics) {
    if (m.eval) best = std::min(best, *m.eval);
  }
  EXPECT_EQ(r.best_eval, best);
  EXPECT_DOUBLE_EQ(evaluate(r.best_checkpoint, cfg), best);
}

TEST(Train, DivergenceIsReported) {
  TrainConfig cfg = fixtures::small_config(Mode::FixedLora);
  cfg.base_lr = 1e100;
  cfg.regu_weight = 1.0;
  EXPECT_THROW(train(resolve(cfg)), DivergenceError);
}

TEST(Train, GramResidualFallsOverTheFinalThird) {
  TrainConfig cfg = fixtures::small_config();
  cfg.total_steps = 600;
  cfg = resolve(cfg);
  const TrainResult r = train(cfg);
  const std::size_t from = 2 * cfg.total_steps / 3;
  EXPECT_LT(r.metrics.back().regu_loss, r.metrics[from].regu_loss);
}

TEST(Stats, SpearmanWithTies) {
  const std::vector<double> x{1, 1, 2, 2, 6, 12};
  EXPECT_NEAR(spearman(x, x), 1.0, 1e-12);
  const std::vector<double> rev{10, 10, 5, 5, 2, 1};
  EXPECT_NEAR(spearman(x, rev), -1.0, 1e-12);
  // Average ranks: x -> 1.5,1.5,3.5,3.5,5,6; y -> 2,2,2,5,5,5.
  const std::vector<double> y{0, 0, 0, 8, 8, 8};
  EXPECT_NEAR(spearman(x, y), 12.0 / std::sqrt(13.5 * 16.5), 1e-12);
}

TEST(Stats, Quantiles) {
  const std::vector<double> v{5, 1, 3, 2, 4};
  EXPECT_EQ(quantile(v, 0.5), 3.0);
  EXPECT_EQ(quantile(v, 0.0), 1.0);
  EXPECT_EQ(quantile(v, 1.0), 5.0);
  EXPECT_EQ(quantile(v, 0.25), 2.0);
  EXPECT_THROW(quantile(std::vector<double>{}, 0.5), std::invalid_argument);
}

TEST(Compare, ReportCountsWinsAndSummarizes) {
  const TrainConfig a = fixtures::small_config();
  const TrainConfig b = fixtures::small_config(Mode::FixedLora);
  const CompareReport rep = compare(a, b, 2, 10);
  ASSERT_EQ(rep.seeds.size(), 2u);
  std::size_t wins = 0;
  for (const auto& s : rep.seeds) {
    if (s.eval_a <= s.eval_b) ++wins;
    std::size_t da = 0;
    std::size_t db = 0;
    for (auto r : s.deployed_ranks_a) da += r;
    for (auto r : s.deployed_ranks_b) db += r;
    EXPECT_EQ(da, db);
  }
  EXPECT_EQ(rep.wins_a, wins);
  const auto j = rep.to_json();
  EXPECT_TRUE(j.contains("wins_a"));
  // Same seed through train() gives the same number as inside compare().
  TrainConfig one = a;
  one.seed = 10;
  EXPECT_EQ(train(one).final_eval, rep.seeds[0].eval_a);
}
