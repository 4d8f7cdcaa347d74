#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "increlora/matrix.hpp"
#include "increlora/rng.hpp"

namespace increlora {

// Frozen scale of a reserve component.
inline constexpr double kReserveLambda = 1e-5;
inline constexpr double kDefaultInitStd = 0.02;

// One rank-1 term lambda * b a^T of an update matrix.
struct Component {
  std::uint64_t id = 0;   // unique within the owning adapter, stable across activation
  std::vector<double> a;  // length in_dim
  std::vector<double> b;  // length out_dim
  double lambda = 0.0;
  bool frozen = false;    // true only for the reserve
};

struct ComponentGrad {
  std::uint64_t id = 0;
  std::vector<double> a;
  std::vector<double> b;
  double lambda = 0.0;
};

// Gradients for the components an adapter exposes to the forward pass, in
// the order returned by SvdAdapter::present().
struct AdapterGrad {
  std::vector<ComponentGrad> components;

  ComponentGrad* find(std::uint64_t id) noexcept;
  const ComponentGrad* find(std::uint64_t id) const noexcept;
  // this += alpha * other, matched by component id.
  void accumulate(const AdapterGrad& other, double alpha);
};

struct RegularizerResult {
  double loss = 0.0;
  AdapterGrad grad;  // lambda entries are always zero
};

// Update matrix Delta W = scale * sum_i lambda_i b_i a_i^T stored as rank-1
// components, plus at most one frozen reserve that trains its factors ahead
// of activation.
class SvdAdapter {
 public:
  // Reserve-only adapter: zero active components, rank 1.
  SvdAdapter(std::size_t in_dim, std::size_t out_dim, Rng& rng, double init_std = kDefaultInitStd,
             double scale = 1.0);

  // Classic fixed-rank adapter: `rank` active components with lambda = 0, no reserve.
  static SvdAdapter fixed_rank(std::size_t in_dim, std::size_t out_dim, std::size_t rank,
                               Rng& rng, double init_std = kDefaultInitStd, double scale = 1.0);
  // Adapter with no components at all (Delta W == 0).
  static SvdAdapter empty(std::size_t in_dim, std::size_t out_dim, double scale = 1.0);
  // Rebuild from stored components; ids are reassigned sequentially.
  static SvdAdapter from_parts(std::size_t in_dim, std::size_t out_dim,
                               std::vector<Component> active, std::optional<Component> reserve,
                               double scale = 1.0);

  std::size_t in_dim() const noexcept { return in_dim_; }
  std::size_t out_dim() const noexcept { return out_dim_; }
  double scale() const noexcept { return scale_; }
  double init_std() const noexcept { return init_std_; }

  // |active| + (1 if a reserve is held).
  std::size_t rank() const noexcept { return active_.size() + (reserve_ ? 1 : 0); }
  const std::vector<Component>& active() const noexcept { return active_; }
  std::vector<Component>& active() noexcept { return active_; }
  bool has_reserve() const noexcept { return reserve_.has_value(); }
  const std::optional<Component>& reserve() const noexcept { return reserve_; }

  Component* find(std::uint64_t id) noexcept;
  const Component* find(std::uint64_t id) const noexcept;

  // With advance learning off, a held reserve is dormant: it is excluded from
  // the forward pass, the regularizer and the optimizer until activation.
  void set_advance_learning(bool enabled) noexcept { advance_learning_ = enabled; }
  bool advance_learning() const noexcept { return advance_learning_; }

  // Components that take part in forward/backward: active, then the reserve
  // when it is held and advance learning is on.
  std::vector<const Component*> present() const;

  DenseMatrix delta_w() const;

  // Orthogonality penalty ||A A^T - I||_F^2 + ||B^T B - I||_F^2 over the r x r
  // Gram matrices of the present components. Requires at least one.
  RegularizerResult regularizer() const;

  // Per-component gradients given dL/dW_eff (out x in). The reserve's lambda
  // gradient is reported as zero.
  AdapterGrad component_grads(const DenseMatrix& grad_w) const;

  void activate_reserve();
  // Returns the id of the new reserve.
  std::uint64_t append_reserve(Rng& rng);
  // Drops the reserve, if any. Returns its id.
  std::optional<std::uint64_t> mask_reserve() noexcept;

 private:
  SvdAdapter(std::size_t in_dim, std::size_t out_dim, double init_std, double scale);
  Component make_component(Rng& rng, double lambda, bool frozen);

  std::size_t in_dim_;
  std::size_t out_dim_;
  double init_std_;
  double scale_;
  bool advance_learning_ = true;
  std::uint64_t next_id_ = 0;
  std::vector<Component> active_;
  std::optional<Component> reserve_;
};

}  // namespace increlora
