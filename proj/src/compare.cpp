#include "increlora/compare.hpp"

#include <exception>

#include "increlora/stats.hpp"

namespace increlora {

Summary summarize(const std::vector<double>& values) {
  return {quantile(values, 0.5), quantile(values, 0.25), quantile(values, 0.75)};
}

std::vector<std::size_t> deployed_ranks(const TrainResult& r) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < r.model.size(); ++k) out.push_back(r.model.adapter(k).active().size());
  return out;
}

CompareReport compare(const TrainConfig& a, const TrainConfig& b, std::size_t seeds,
                      std::uint64_t base_seed) {
  CompareReport rep;
  rep.loss = a.task.loss;
  rep.seeds.resize(seeds);
  const auto jobs = static_cast<long long>(2 * seeds);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));

#pragma omp parallel for schedule(dynamic, 1)
  for (long long j = 0; j < jobs; ++j) {
    const auto idx = static_cast<std::size_t>(j / 2);
    const bool first = j % 2 == 0;
    try {
      TrainConfig cfg = first ? a : b;
      cfg.seed = base_seed + idx;
      const TrainResult res = train(cfg);
      SeedOutcome& out = rep.seeds[idx];
      out.seed = cfg.seed;
      (first ? out.eval_a : out.eval_b) = res.final_eval;
      (first ? out.deployed_ranks_a : out.deployed_ranks_b) = deployed_ranks(res);
    } catch (...) {
      errors[static_cast<std::size_t>(j)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<double> ea;
  std::vector<double> eb;
  for (const auto& s : rep.seeds) {
    ea.push_back(s.eval_a);
    eb.push_back(s.eval_b);
    if (metric_not_worse(rep.loss, s.eval_a, s.eval_b)) ++rep.wins_a;
  }
  rep.a = summarize(ea);
  rep.b = summarize(eb);
  return rep;
}

nlohmann::json CompareReport::to_json() const {
  nlohmann::json per_seed = nlohmann::json::array();
  for (const auto& s : seeds) {
    per_seed.push_back({{"seed", s.seed},
                        {"eval_a", s.eval_a},
                        {"eval_b", s.eval_b},
                        {"deployed_ranks_a", s.deployed_ranks_a},
                        {"deployed_ranks_b", s.deployed_ranks_b}});
  }
  return {{"metric", loss == LossKind::MeanSquaredError ? "mse" : "accuracy"},
          {"a", {{"median", a.median}, {"q1", a.q1}, {"q3", a.q3}}},
          {"b", {{"median", b.median}, {"q1", b.q1}, {"q3", b.q3}}},
          {"wins_a", wins_a},
          {"seeds", per_seed}};
}

}  // namespace increlora
