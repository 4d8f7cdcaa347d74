#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace increlora {

enum class ParamField : std::uint8_t { A, B, Lambda };

// Stable address of one trainable array: (module, component id, field).
struct ParamRef {
  std::size_t module = 0;
  std::uint64_t component = 0;
  ParamField field = ParamField::A;

  friend auto operator<=>(const ParamRef&, const ParamRef&) = default;
};

std::string to_string(const ParamRef& ref);

// Linear warmup over `warmup` steps from the group's birth, then linear decay
// to zero at `total`.
struct ScheduleSpec {
  std::uint64_t warmup = 0;
  std::uint64_t total = 0;
};

// Learning rate at step t of a group born at `birth`. Zero at birth and from
// `total` on, `base_lr` at birth + warmup. Requires t >= birth.
double lr_at(double base_lr, std::uint64_t birth, const ScheduleSpec& spec, std::uint64_t t);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  bool decay_lambda = false;  // decoupled decay on lambda as well as a, b
  bool operator==(const AdamHyper&) const = default;
};

class ParamGroup {
 public:
  struct Slot {
    ParamRef ref;
    std::vector<double> m;
    std::vector<double> v;
  };

  ParamGroup(std::size_t id, std::uint64_t birth, ScheduleSpec spec, double base_lr);

  std::size_t id() const noexcept { return id_; }
  std::uint64_t birth() const noexcept { return birth_; }
  const ScheduleSpec& schedule() const noexcept { return spec_; }
  double base_lr() const noexcept { return base_lr_; }
  std::uint64_t updates() const noexcept { return updates_; }
  const std::vector<Slot>& slots() const noexcept { return slots_; }
  std::vector<Slot>& slots() noexcept { return slots_; }
  double lr_at(std::uint64_t t) const { return increlora::lr_at(base_lr_, birth_, spec_, t); }

  void add(ParamRef ref, std::size_t length);

  // One decoupled-weight-decay Adam step over every slot. params[i] and
  // grads[i] correspond to slots()[i]. Throws DivergenceError on a
  // non-finite gradient, naming the parameter.
  void apply_step(std::span<const std::span<double>> params,
                  std::span<const std::span<const double>> grads, std::uint64_t t,
                  const AdamHyper& hyper);

 private:
  std::size_t id_;
  std::uint64_t birth_;
  ScheduleSpec spec_;
  double base_lr_;
  std::uint64_t updates_ = 0;
  std::vector<Slot> slots_;
};

using ParamResolver = std::function<std::span<double>(const ParamRef&)>;
using GradResolver = std::function<std::span<const double>(const ParamRef&)>;

// Parameter groups with individual schedules and per-parameter moments.
class Optimizer {
 public:
  explicit Optimizer(AdamHyper hyper) : hyper_(hyper) {}

  // Throws if any ref already belongs to a group or the schedule leaves no
  // room to train (total <= birth + warmup). Moments start at zero.
  std::size_t register_group(const std::vector<ParamRef>& params, std::uint64_t birth,
                             ScheduleSpec spec, double base_lr, const ParamResolver& resolve);

  void step(std::uint64_t t, const ParamResolver& params, const GradResolver& grads);

  // Discards the slots (and moments) of the given parameters. Empty groups stay.
  void drop(const std::vector<ParamRef>& refs);

  bool contains(const ParamRef& ref) const;
  const std::vector<ParamGroup>& groups() const noexcept { return groups_; }
  const AdamHyper& hyper() const noexcept { return hyper_; }

  // Lists every violation of "each trainable parameter sits in exactly one
  // group and nothing else does". Empty when consistent.
  std::vector<std::string> audit(const std::vector<ParamRef>& trainable) const;

 private:
  AdamHyper hyper_;
  std::vector<ParamGroup> groups_;
};

}  // namespace increlora
