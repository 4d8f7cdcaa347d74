#include "increlora/optim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "increlora/errors.hpp"

namespace increlora {

std::string to_string(const ParamRef& ref) {
  const char* field = ref.field == ParamField::A ? "a" : ref.field == ParamField::B ? "b" : "lambda";
  return "module " + std::to_string(ref.module) + "/component " + std::to_string(ref.component) +
         "/" + field;
}

double lr_at(double base_lr, std::uint64_t birth, const ScheduleSpec& spec, std::uint64_t t) {
  if (t < birth) {
    throw std::invalid_argument("lr_at: step " + std::to_string(t) + " precedes birth " +
                                std::to_string(birth));
  }
  if (t >= spec.total) return 0.0;
  const std::uint64_t since = t - birth;
  if (since < spec.warmup) {
    return base_lr * (static_cast<double>(since) / static_cast<double>(spec.warmup));
  }
  const double decay_len = static_cast<double>(spec.total - birth - spec.warmup);
  // Fraction first, so the peak is exactly base_lr.
  return base_lr * (static_cast<double>(spec.total - t) / decay_len);
}

ParamGroup::ParamGroup(std::size_t id, std::uint64_t birth, ScheduleSpec spec, double base_lr)
    : id_(id), birth_(birth), spec_(spec), base_lr_(base_lr) {
  if (spec.total <= birth + spec.warmup) {
    throw Error("parameter group born at step " + std::to_string(birth) + " with warmup " +
                std::to_string(spec.warmup) + " cannot train before the final step " +
                std::to_string(spec.total));
  }
}

void ParamGroup::add(ParamRef ref, std::size_t length) {
  slots_.push_back({ref, std::vector<double>(length, 0.0), std::vector<double>(length, 0.0)});
}

void ParamGroup::apply_step(std::span<const std::span<double>> params,
                            std::span<const std::span<const double>> grads, std::uint64_t t,
                            const AdamHyper& hyper) {
  if (params.size() != slots_.size() || grads.size() != slots_.size()) {
    throw std::invalid_argument("ParamGroup::apply_step: expected " +
                                std::to_string(slots_.size()) + " parameters");
  }
  const double lr = lr_at(t);
  ++updates_;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(updates_));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(updates_));
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    Slot& slot = slots_[s];
    const auto p = params[s];
    const auto g = grads[s];
    if (p.size() != slot.m.size() || g.size() != slot.m.size()) {
      throw std::invalid_argument("ParamGroup::apply_step: shape mismatch for " +
                                  to_string(slot.ref));
    }
    const bool decay = slot.ref.field != ParamField::Lambda || hyper.decay_lambda;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!std::isfinite(g[i])) throw DivergenceError("non-finite gradient in " + to_string(slot.ref));
      slot.m[i] = hyper.beta1 * slot.m[i] + (1.0 - hyper.beta1) * g[i];
      slot.v[i] = hyper.beta2 * slot.v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
      const double m_hat = slot.m[i] / bc1;
      const double v_hat = slot.v[i] / bc2;
      double update = m_hat / (std::sqrt(v_hat) + hyper.eps);
      if (decay) update += hyper.weight_decay * p[i];
      p[i] -= lr * update;
    }
  }
}

std::size_t Optimizer::register_group(const std::vector<ParamRef>& params, std::uint64_t birth,
                                      ScheduleSpec spec, double base_lr,
                                      const ParamResolver& resolve) {
  for (const auto& ref : params) {
    if (contains(ref)) throw std::logic_error("register_group: " + to_string(ref) + " already registered");
  }
  ParamGroup group(groups_.size(), birth, spec, base_lr);
  for (const auto& ref : params) group.add(ref, resolve(ref).size());
  groups_.push_back(std::move(group));
  return groups_.back().id();
}

void Optimizer::step(std::uint64_t t, const ParamResolver& params, const GradResolver& grads) {
  std::vector<std::span<double>> ps;
  std::vector<std::span<const double>> gs;
  for (auto& group : groups_) {
    if (group.slots().empty()) continue;
    ps.clear();
    gs.clear();
    for (const auto& slot : group.slots()) {
      ps.push_back(params(slot.ref));
      gs.push_back(grads(slot.ref));
    }
    group.apply_step(ps, gs, t, hyper_);
  }
}

void Optimizer::drop(const std::vector<ParamRef>& refs) {
  for (auto& group : groups_) {
    auto& slots = group.slots();
    std::erase_if(slots, [&](const ParamGroup::Slot& s) {
      return std::find(refs.begin(), refs.end(), s.ref) != refs.end();
    });
  }
}

bool Optimizer::contains(const ParamRef& ref) const {
  for (const auto& group : groups_) {
    for (const auto& slot : group.slots()) {
      if (slot.ref == ref) return true;
    }
  }
  return false;
}

std::vector<std::string> Optimizer::audit(const std::vector<ParamRef>& trainable) const {
  std::map<ParamRef, int> seen;
  for (const auto& group : groups_) {
    for (const auto& slot : group.slots()) ++seen[slot.ref];
  }
  std::vector<std::string> problems;
  for (const auto& ref : trainable) {
    auto it = seen.find(ref);
    if (it == seen.end()) {
      problems.push_back(to_string(ref) + " is trainable but in no group");
      continue;
    }
    if (it->second > 1) problems.push_back(to_string(ref) + " is in " + std::to_string(it->second) + " groups");
    seen.erase(it);
  }
  for (const auto& [ref, count] : seen) problems.push_back(to_string(ref) + " is grouped but not trainable");
  return problems;
}

}  // namespace increlora
