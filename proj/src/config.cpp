#include "increlora/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "increlora/errors.hpp"

namespace increlora {
namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& obj, std::string path, std::vector<std::string>& problems)
      : obj_(obj), path_(std::move(path)), problems_(problems) {
    if (!obj_.is_object()) problems_.push_back(path_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key) || obj_.at(key).is_null()) return;
    const json& v = obj_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::runtime_error("expected boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0)) {
          throw std::runtime_error("expected a non-negative integer");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw std::runtime_error("expected a number");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      problems_.push_back(path_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key) || obj_.at(key).is_null()) return nullptr;
    return &obj_.at(key);
  }

  void reject_unknown() {
    if (!obj_.is_object()) return;
    for (const auto& [key, _] : obj_.items()) {
      if (!seen_.contains(key)) problems_.push_back(path_ + "." + key + ": unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

template <typename E>
void get_enum(Reader& r, const char* key, E& out, std::initializer_list<std::pair<const char*, E>> names,
              const std::string& path, std::vector<std::string>& problems) {
  std::string s;
  r.get(key, s);
  if (s.empty()) return;
  for (const auto& [name, value] : names) {
    if (s == name) {
      out = value;
      return;
    }
  }
  problems.push_back(path + "." + key + ": unknown value '" + s + "'");
}

void read_task(const json& doc, TaskSpec& task, std::vector<std::string>& problems) {
  Reader r(doc, "task", problems);
  r.get("dims", task.dims);
  get_enum(r, "activation", task.activation,
           {{"identity", Activation::Identity}, {"tanh", Activation::Tanh}, {"relu", Activation::Relu}},
           "task", problems);
  get_enum(r, "loss", task.loss,
           {{"mse", LossKind::MeanSquaredError}, {"cross_entropy", LossKind::SoftmaxCrossEntropy}},
           "task", problems);
  r.get("bias", task.bias);
  r.get("backbone_gain", task.backbone_gain);
  r.get("planted_ranks", task.planted_ranks);
  r.get("planted_scale", task.planted_scale);
  r.get("planted_scales", task.planted_scales);
  r.get("noise", task.noise);
  r.get("eval_samples", task.eval_samples);
  r.get("module_types", task.module_types);
  std::uint64_t seed = 0;
  if (r.child("seed") != nullptr) {
    r.get("seed", seed);
    task.seed = seed;
  }
  r.reject_unknown();
}

void read_optimizer(const json& doc, AdamHyper& h, std::vector<std::string>& problems) {
  Reader r(doc, "optimizer", problems);
  r.get("beta1", h.beta1);
  r.get("beta2", h.beta2);
  r.get("eps", h.eps);
  r.get("weight_decay", h.weight_decay);
  r.get("decay_lambda", h.decay_lambda);
  r.reject_unknown();
}

void fail_if(const std::vector<std::string>& problems) {
  if (problems.empty()) return;
  std::ostringstream os;
  os << "invalid config:";
  for (const auto& p : problems) os << "\n  - " << p;
  throw ConfigError(os.str());
}

std::vector<std::string> problems_of(const TrainConfig& cfg);
TrainConfig fill_defaults(TrainConfig cfg);

}  // namespace

std::string_view to_string(Mode m) noexcept {
  return m == Mode::IncreLora ? "increlora" : "fixed_lora";
}

TrainConfig parse_config(const json& doc) {
  std::vector<std::string> problems;
  TrainConfig cfg;
  Reader r(doc, "config", problems);
  get_enum(r, "mode", cfg.mode, {{"increlora", Mode::IncreLora}, {"fixed_lora", Mode::FixedLora}},
           "config", problems);
  r.get("seed", cfg.seed);
  r.get("total_steps", cfg.total_steps);
  r.get("warmup", cfg.warmup);
  r.get("nu", cfg.nu);
  r.get("base_lr", cfg.base_lr);
  r.get("batch_size", cfg.batch_size);
  r.get("h", cfg.h);
  r.get("r_final", cfg.r_final);
  r.get("fixed_rank", cfg.fixed_rank);
  r.get("fixed_ranks", cfg.fixed_ranks);
  r.get("beta1", cfg.beta1);
  r.get("beta2", cfg.beta2);
  r.get("regu_weight", cfg.regu_weight);
  r.get("init_std", cfg.init_std);
  r.get("adapter_scale", cfg.adapter_scale);
  r.get("advance_learning", cfg.advance_learning);
  r.get("restart_warmup", cfg.restart_warmup);
  r.get("eval_every", cfg.eval_every);
  if (const json* opt = r.child("optimizer")) read_optimizer(*opt, cfg.optimizer, problems);
  if (const json* task = r.child("task")) {
    read_task(*task, cfg.task, problems);
  } else {
    problems.push_back("config.task: required");
  }
  r.reject_unknown();
  // Range problems are reported alongside type problems so one run lists everything.
  if (doc.is_object() && doc.contains("task")) {
    for (auto& p : problems_of(fill_defaults(cfg))) problems.push_back(std::move(p));
  }
  fail_if(problems);
  return fill_defaults(std::move(cfg));
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

namespace {

TrainConfig fill_defaults(TrainConfig cfg) {
  if (cfg.nu == 0) cfg.nu = cfg.warmup;
  if (cfg.eval_every == 0) cfg.eval_every = cfg.nu;
  const std::size_t n = cfg.modules();
  if (cfg.mode == Mode::FixedLora && cfg.fixed_ranks.empty() && n > 0) {
    if (cfg.fixed_rank == 0 && cfg.r_final > n && (cfg.r_final - n) % n == 0) {
      cfg.fixed_rank = (cfg.r_final - n) / n;
    }
    if (cfg.fixed_rank > 0) cfg.fixed_ranks.assign(n, cfg.fixed_rank);
  }
  return cfg;
}

std::vector<std::string> problems_of(const TrainConfig& cfg) {
  std::vector<std::string> p;
  const TaskSpec& t = cfg.task;
  const std::size_t n = cfg.modules();
  if (t.dims.size() < 2) p.push_back("task.dims: need at least two widths (one layer)");
  for (std::size_t d : t.dims) {
    if (d == 0) p.push_back("task.dims: widths must be positive");
  }
  if (t.planted_ranks.size() != n) {
    p.push_back("task.planted_ranks: expected " + std::to_string(n) + " entries, got " +
                std::to_string(t.planted_ranks.size()));
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      if (t.planted_ranks[k] > std::min(t.dims[k], t.dims[k + 1])) {
        p.push_back("task.planted_ranks[" + std::to_string(k) + "]: exceeds layer size");
      }
    }
  }
  if (!t.planted_scales.empty() && t.planted_scales.size() != n) {
    p.push_back("task.planted_scales: expected " + std::to_string(n) + " entries");
  }
  if (t.noise < 0.0) p.push_back("task.noise: must be non-negative");
  if (!(t.backbone_gain > 0.0)) p.push_back("task.backbone_gain: must be positive");
  if (t.eval_samples == 0) p.push_back("task.eval_samples: must be positive");
  if (t.module_types.empty() || (n > 0 && n % t.module_types.size() != 0)) {
    p.push_back("task.module_types: module count must be a multiple of the number of types");
  }
  if (cfg.total_steps == 0) p.push_back("total_steps: must be positive");
  if (cfg.warmup == 0) p.push_back("warmup: must be positive");
  if (cfg.batch_size == 0) p.push_back("batch_size: must be positive");
  if (!(cfg.base_lr > 0.0)) p.push_back("base_lr: must be positive");
  if (!(cfg.beta1 > 0.0 && cfg.beta1 < 1.0)) p.push_back("beta1: must lie in (0, 1)");
  if (!(cfg.beta2 > 0.0 && cfg.beta2 < 1.0)) p.push_back("beta2: must lie in (0, 1)");
  if (cfg.regu_weight < 0.0) p.push_back("regu_weight: must be non-negative");
  if (!(cfg.init_std > 0.0)) p.push_back("init_std: must be positive");
  if (!(cfg.adapter_scale > 0.0)) p.push_back("adapter_scale: must be positive");
  if (!(cfg.optimizer.beta1 >= 0.0 && cfg.optimizer.beta1 < 1.0)) p.push_back("optimizer.beta1: must lie in [0, 1)");
  if (!(cfg.optimizer.beta2 >= 0.0 && cfg.optimizer.beta2 < 1.0)) p.push_back("optimizer.beta2: must lie in [0, 1)");
  if (!(cfg.optimizer.eps > 0.0)) p.push_back("optimizer.eps: must be positive");
  if (cfg.optimizer.weight_decay < 0.0) p.push_back("optimizer.weight_decay: must be non-negative");
  if (cfg.total_steps <= cfg.warmup) p.push_back("total_steps: must exceed warmup");

  if (cfg.mode == Mode::IncreLora && n > 0) {
    if (cfg.h < 1 || cfg.h > n) p.push_back("h: must lie in [1, " + std::to_string(n) + "]");
    if (cfg.r_final < n) {
      p.push_back("r_final: must be at least the module count " + std::to_string(n));
    } else if (cfg.h >= 1 && (cfg.r_final - n) % cfg.h != 0) {
      const std::size_t down = cfg.r_final - (cfg.r_final - n) % cfg.h;
      p.push_back("r_final: r_final - n must be divisible by h; use " + std::to_string(down) +
                  " or " + std::to_string(down + cfg.h));
    } else if (cfg.h >= 1) {
      const std::uint64_t events = (cfg.r_final - n) / cfg.h;
      const std::uint64_t last_birth = cfg.restart_warmup ? events * cfg.nu : 0;
      if (last_birth + cfg.warmup >= cfg.total_steps) {
        p.push_back("total_steps: the last allocation event at step " +
                    std::to_string(events * cfg.nu) + " plus warmup " +
                    std::to_string(cfg.warmup) + " leaves no steps to train");
      }
    }
  }
  if (cfg.mode == Mode::FixedLora && n > 0) {
    if (cfg.fixed_ranks.size() != n) {
      p.push_back("fixed_ranks: expected " + std::to_string(n) +
                  " entries (or set fixed_rank, or an r_final with n | r_final - n)");
    }
    for (std::size_t k = 0; k < cfg.fixed_ranks.size() && k < n; ++k) {
      if (cfg.fixed_ranks[k] > std::min(t.dims[k], t.dims[k + 1])) {
        p.push_back("fixed_ranks[" + std::to_string(k) + "]: exceeds layer size");
      }
    }
  }
  return p;
}

}  // namespace

TrainConfig resolve(TrainConfig cfg) {
  cfg = fill_defaults(std::move(cfg));
  validate(cfg);
  return cfg;
}

void validate(const TrainConfig& cfg) { fail_if(problems_of(cfg)); }

nlohmann::json to_json(const TrainConfig& cfg) {
  json task = {
      {"dims", cfg.task.dims},
      {"activation", std::string(to_string(cfg.task.activation))},
      {"loss", std::string(to_string(cfg.task.loss))},
      {"bias", cfg.task.bias},
      {"backbone_gain", cfg.task.backbone_gain},
      {"planted_ranks", cfg.task.planted_ranks},
      {"planted_scale", cfg.task.planted_scale},
      {"planted_scales", cfg.task.planted_scales},
      {"noise", cfg.task.noise},
      {"eval_samples", cfg.task.eval_samples},
      {"module_types", cfg.task.module_types},
      {"seed", cfg.task.seed ? json(*cfg.task.seed) : json(nullptr)},
  };
  json opt = {
      {"beta1", cfg.optimizer.beta1},
      {"beta2", cfg.optimizer.beta2},
      {"eps", cfg.optimizer.eps},
      {"weight_decay", cfg.optimizer.weight_decay},
      {"decay_lambda", cfg.optimizer.decay_lambda},
  };
  return {
      {"mode", std::string(to_string(cfg.mode))},
      {"seed", cfg.seed},
      {"total_steps", cfg.total_steps},
      {"warmup", cfg.warmup},
      {"nu", cfg.nu},
      {"base_lr", cfg.base_lr},
      {"batch_size", cfg.batch_size},
      {"h", cfg.h},
      {"r_final", cfg.r_final},
      {"fixed_rank", cfg.fixed_rank},
      {"fixed_ranks", cfg.fixed_ranks},
      {"beta1", cfg.beta1},
      {"beta2", cfg.beta2},
      {"regu_weight", cfg.regu_weight},
      {"init_std", cfg.init_std},
      {"adapter_scale", cfg.adapter_scale},
      {"advance_learning", cfg.advance_learning},
      {"restart_warmup", cfg.restart_warmup},
      {"eval_every", cfg.eval_every},
      {"optimizer", opt},
      {"task", task},
  };
}

std::uint64_t config_hash(const TrainConfig& cfg) {
  const std::string canon = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace increlora
