#include "increlora/trainer.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "increlora/errors.hpp"

namespace increlora {
namespace {

std::span<double> param_span(Backbone& net, const ParamRef& ref) {
  Component* c = net.adapter(ref.module).find(ref.component);
  if (c == nullptr) throw std::logic_error("unknown parameter " + to_string(ref));
  switch (ref.field) {
    case ParamField::A: return c->a;
    case ParamField::B: return c->b;
    case ParamField::Lambda: return {&c->lambda, 1};
  }
  return {};
}

std::span<const double> grad_span(const std::vector<AdapterGrad>& grads, const ParamRef& ref) {
  const ComponentGrad* g = grads.at(ref.module).find(ref.component);
  if (g == nullptr) throw std::logic_error("no gradient for " + to_string(ref));
  switch (ref.field) {
    case ParamField::A: return g->a;
    case ParamField::B: return g->b;
    case ParamField::Lambda: return {&g->lambda, 1};
  }
  return {};
}

std::string describe_last_event(const std::vector<AllocationEvent>& events) {
  if (events.empty()) return "no allocation events";
  const auto& ev = events.back();
  std::ostringstream os;
  os << "last event at step " << ev.step << " selected [";
  for (std::size_t i = 0; i < ev.selected.size(); ++i) os << (i ? "," : "") << ev.selected[i];
  os << "] r_total=" << ev.r_total;
  return os.str();
}

}  // namespace

bool metric_not_worse(LossKind loss, double a, double b) noexcept {
  return loss == LossKind::MeanSquaredError ? a <= b : a >= b;
}

std::vector<SvdAdapter> initial_adapters(const TrainConfig& cfg, const PlantedTask& task) {
  Rng rng(cfg.seed, streams::kAdapter);
  std::vector<SvdAdapter> out;
  for (std::size_t k = 0; k < task.modules(); ++k) {
    const std::size_t in = task.w0(k).cols();
    const std::size_t outd = task.w0(k).rows();
    if (cfg.mode == Mode::IncreLora) {
      SvdAdapter ad(in, outd, rng, cfg.init_std, cfg.adapter_scale);
      ad.set_advance_learning(cfg.advance_learning);
      out.push_back(std::move(ad));
    } else {
      out.push_back(SvdAdapter::fixed_rank(in, outd, cfg.fixed_ranks.at(k), rng, cfg.init_std,
                                           cfg.adapter_scale));
    }
  }
  return out;
}

std::vector<ParamRef> trainable_params(const Backbone& net) {
  std::vector<ParamRef> out;
  for (std::size_t k = 0; k < net.size(); ++k) {
    for (const Component* c : net.adapter(k).present()) {
      out.push_back({k, c->id, ParamField::A});
      out.push_back({k, c->id, ParamField::B});
      if (!c->frozen) out.push_back({k, c->id, ParamField::Lambda});
    }
  }
  return out;
}

TrainResult train(const TrainConfig& cfg_in, const StepObserver& observer) {
  const TrainConfig cfg = resolve(cfg_in);
  const std::uint64_t hash = config_hash(cfg);
  const PlantedTask task(cfg.task, cfg.task_seed());
  Backbone net = task.make_student(initial_adapters(cfg, task));
  const std::size_t n = net.size();
  const bool incremental = cfg.mode == Mode::IncreLora;
  const ScheduleSpec schedule{cfg.warmup, cfg.total_steps};

  Optimizer opt(cfg.optimizer);
  const ParamResolver params = [&net](const ParamRef& r) { return param_span(net, r); };
  opt.register_group(trainable_params(net), 0, schedule, cfg.base_lr, params);

  std::optional<Allocator> alloc;
  std::optional<ImportanceState> scores;
  if (incremental) {
    alloc.emplace(n, cfg.h, cfg.nu, cfg.r_final);
    scores.emplace(n, cfg.beta1, cfg.beta2);
  }
  Rng growth_rng(cfg.seed ^ 0x9a0d7ULL, streams::kAdapter);
  std::vector<SvdAdapter*> adapters;
  for (std::size_t k = 0; k < n; ++k) adapters.push_back(&net.adapter(k));

  TrainResult result{cfg, hash, net, Phase::Allocating, {}, {}, {}, {}, {}, 0.0, 0.0};
  std::optional<double> best;
  std::vector<double> raw(n, 0.0);

  for (std::uint64_t t = 1; t <= cfg.total_steps; ++t) {
    const Batch batch = task.train_batch(t, cfg.batch_size);
    LossGrad lg = loss_and_grad(net, batch.x, batch.y);

    double regu = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (net.adapter(k).present().empty()) continue;
      RegularizerResult rr = net.adapter(k).regularizer();
      regu += rr.loss;
      lg.grad.adapters[k].accumulate(rr.grad, cfg.regu_weight);
    }
    MetricsRecord rec;
    rec.step = t;
    rec.task_loss = lg.loss;
    rec.regu_loss = regu;
    rec.total_loss = lg.loss + cfg.regu_weight * regu;
    if (!std::isfinite(rec.total_loss)) {
      throw DivergenceError("loss became non-finite at step " + std::to_string(t) + " (" +
                            describe_last_event(alloc ? alloc->event_log() : std::vector<AllocationEvent>{}) +
                            ")");
    }

    if (incremental && alloc->phase() == Phase::Allocating) {
      for (std::size_t k = 0; k < n; ++k) raw[k] = raw_score(lg.cache.delta_w[k], lg.grad.weight[k]);
      scores->update_all(raw);
    }

    const auto& adapter_grads = lg.grad.adapters;
    opt.step(t, params, [&adapter_grads](const ParamRef& r) { return grad_span(adapter_grads, r); });

    if (incremental) {
      AllocatorOutcome outcome = alloc->step(t, *scores, adapters, growth_rng);
      if (outcome.event) {
        const AllocationEvent& ev = *outcome.event;
        const std::uint64_t birth = cfg.restart_warmup ? t : 0;
        for (const Growth& g : ev.growth) {
          std::vector<ParamRef> fresh{{g.module, g.activated, ParamField::Lambda}};
          // The reserve appended by the closing event is masked in the same call.
          const auto& reserve = net.adapter(g.module).reserve();
          if (cfg.advance_learning && reserve && reserve->id == g.reserve) {
            fresh.push_back({g.module, g.reserve, ParamField::A});
            fresh.push_back({g.module, g.reserve, ParamField::B});
          } else if (!cfg.advance_learning) {
            fresh.push_back({g.module, g.activated, ParamField::A});
            fresh.push_back({g.module, g.activated, ParamField::B});
          }
          opt.register_group(fresh, birth, schedule, cfg.base_lr, params);
        }
        rec.ranks = ev.ranks;
        ScheduleRecord sr{t, {}};
        for (const auto& group : opt.groups()) sr.groups.push_back({group.id(), group.birth(), group.lr_at(t)});
        result.schedules.push_back(std::move(sr));
        spdlog::debug("step {}: allocation event, r_total={}", t, ev.r_total);
      }
      if (outcome.closed) {
        std::vector<ParamRef> dropped;
        for (const auto& m : outcome.masked) {
          dropped.push_back({m.module, m.component, ParamField::A});
          dropped.push_back({m.module, m.component, ParamField::B});
        }
        opt.drop(dropped);
        spdlog::debug("step {}: allocation phase closed", t);
      }
      rec.r_total = alloc->r_total();
    } else {
      for (std::size_t r : net.ranks()) rec.r_total += r;
    }

    if (t % cfg.eval_every == 0 || t == cfg.total_steps) {
      const double metric = evaluate_metric(net, task.eval_set());
      rec.eval = metric;
      if (!best || (metric != *best && metric_not_worse(cfg.task.loss, metric, *best))) {
        best = metric;
        result.best_checkpoint = capture(net, hash, t, alloc ? alloc->phase() : Phase::Closed);
      }
      if (t == cfg.total_steps) result.final_eval = metric;
    }

    result.metrics.push_back(rec);
    if (observer) {
      observer(StepView{t, result.metrics.back(), net, opt, alloc ? &*alloc : nullptr,
                        scores ? &*scores : nullptr});
    }
  }

  result.phase = alloc ? alloc->phase() : Phase::Closed;
  if (alloc) result.events = alloc->event_log();
  result.final_checkpoint = capture(net, hash, cfg.total_steps, result.phase);
  result.best_eval = best.value_or(result.final_eval);
  result.model = std::move(net);
  return result;
}

double evaluate(const Checkpoint& ckpt, const TrainConfig& cfg_in) {
  const TrainConfig cfg = resolve(cfg_in);
  if (ckpt.config_hash != config_hash(cfg)) {
    throw ConfigError("checkpoint was written under a different config (hash mismatch)");
  }
  const PlantedTask task(cfg.task, cfg.task_seed());
  Backbone net = task.make_student(initial_adapters(cfg, task));
  restore_adapters(ckpt, net, cfg.adapter_scale);
  return evaluate_metric(net, task.eval_set());
}

}  // namespace increlora
