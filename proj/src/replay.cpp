#include "increlora/replay.hpp"

#include <sstream>

namespace increlora {
namespace {

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << ']';
  return os.str();
}

std::optional<std::string> diff(const AllocationEvent& got, const AllocationEvent& want) {
  if (got.step != want.step) {
    return "step " + std::to_string(got.step) + " vs logged " + std::to_string(want.step);
  }
  if (got.selected != want.selected) return "selected " + join(got.selected) + " vs logged " + join(want.selected);
  if (got.r_total != want.r_total) {
    return "r_total " + std::to_string(got.r_total) + " vs logged " + std::to_string(want.r_total);
  }
  if (got.ranks != want.ranks) return "ranks " + join(got.ranks) + " vs logged " + join(want.ranks);
  if (got.scores != want.scores) return "scores differ";
  return std::nullopt;
}

}  // namespace

ReplayReport replay(const TrainConfig& cfg_in, const std::vector<AllocationEvent>& logged) {
  const TrainConfig cfg = resolve(cfg_in);
  ReplayReport rep;
  const std::size_t n = cfg.modules();
  if (cfg.mode == Mode::FixedLora) {
    rep.identical = logged.empty();
    if (!rep.identical) {
      rep.first_divergence = 0;
      rep.message = "fixed_lora runs have no allocation events";
    }
    return rep;
  }

  Allocator alloc(n, cfg.h, cfg.nu, cfg.r_final);
  Rng rng(0);
  std::vector<SvdAdapter> stand_ins;
  for (std::size_t k = 0; k < n; ++k) stand_ins.emplace_back(1, 1, rng);
  std::vector<SvdAdapter*> adapters;
  for (auto& a : stand_ins) adapters.push_back(&a);

  std::size_t next = 0;
  for (std::uint64_t t = 1; t <= cfg.total_steps && alloc.phase() == Phase::Allocating; ++t) {
    ImportanceState::Snapshot snap;
    snap.beta1 = cfg.beta1;
    snap.beta2 = cfg.beta2;
    snap.sensitivity.assign(n, 0.0);
    snap.uncertainty.assign(n, 0.0);
    snap.score.assign(n, 0.0);
    if (next < logged.size() && logged[next].step == t) {
      if (logged[next].scores.size() != n) {
        rep.first_divergence = next;
        rep.message = "logged event " + std::to_string(next) + " has " +
                      std::to_string(logged[next].scores.size()) + " scores, expected " +
                      std::to_string(n);
        return rep;
      }
      snap.score = logged[next].scores;
    }
    const ImportanceState scores = ImportanceState::restore(snap);
    AllocatorOutcome out = alloc.step(t, scores, adapters, rng);
    if (!out.event) continue;
    rep.regenerated.push_back(*out.event);
    const std::size_t idx = rep.regenerated.size() - 1;
    if (idx >= logged.size()) {
      rep.first_divergence = idx;
      rep.message = "allocator produced an event at step " + std::to_string(t) +
                    " that is missing from the log";
      return rep;
    }
    if (auto d = diff(*out.event, logged[idx])) {
      rep.first_divergence = idx;
      rep.message = "event " + std::to_string(idx) + ": " + *d;
      return rep;
    }
    next = idx + 1;
  }
  if (rep.regenerated.size() != logged.size()) {
    rep.first_divergence = rep.regenerated.size();
    rep.message = "log holds " + std::to_string(logged.size()) + " events, replay produced " +
                  std::to_string(rep.regenerated.size());
    return rep;
  }
  rep.identical = true;
  return rep;
}

}  // namespace increlora
