#include "increlora/adapter.hpp"

#include <stdexcept>
#include <string>

namespace increlora {

ComponentGrad* AdapterGrad::find(std::uint64_t id) noexcept {
  for (auto& c : components) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

const ComponentGrad* AdapterGrad::find(std::uint64_t id) const noexcept {
  for (const auto& c : components) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

void AdapterGrad::accumulate(const AdapterGrad& other, double alpha) {
  for (const auto& src : other.components) {
    ComponentGrad* dst = find(src.id);
    if (dst == nullptr) {
      throw std::logic_error("AdapterGrad::accumulate: unknown component " +
                             std::to_string(src.id));
    }
    for (std::size_t i = 0; i < dst->a.size(); ++i) dst->a[i] += alpha * src.a[i];
    for (std::size_t i = 0; i < dst->b.size(); ++i) dst->b[i] += alpha * src.b[i];
    dst->lambda += alpha * src.lambda;
  }
}

SvdAdapter::SvdAdapter(std::size_t in_dim, std::size_t out_dim, double init_std, double scale)
    : in_dim_(in_dim), out_dim_(out_dim), init_std_(init_std), scale_(scale) {
  if (in_dim == 0 || out_dim == 0) throw std::invalid_argument("SvdAdapter: dims must be positive");
  if (!(init_std > 0.0)) throw std::invalid_argument("SvdAdapter: init_std must be positive");
}

SvdAdapter::SvdAdapter(std::size_t in_dim, std::size_t out_dim, Rng& rng, double init_std,
                       double scale)
    : SvdAdapter(in_dim, out_dim, init_std, scale) {
  reserve_ = make_component(rng, kReserveLambda, true);
}

SvdAdapter SvdAdapter::fixed_rank(std::size_t in_dim, std::size_t out_dim, std::size_t rank,
                                  Rng& rng, double init_std, double scale) {
  SvdAdapter ad(in_dim, out_dim, init_std, scale);
  for (std::size_t i = 0; i < rank; ++i) ad.active_.push_back(ad.make_component(rng, 0.0, false));
  return ad;
}

SvdAdapter SvdAdapter::empty(std::size_t in_dim, std::size_t out_dim, double scale) {
  return SvdAdapter(in_dim, out_dim, kDefaultInitStd, scale);
}

SvdAdapter SvdAdapter::from_parts(std::size_t in_dim, std::size_t out_dim,
                                  std::vector<Component> active, std::optional<Component> reserve,
                                  double scale) {
  SvdAdapter ad(in_dim, out_dim, kDefaultInitStd, scale);
  auto adopt = [&](Component& c, bool frozen) {
    if (c.a.size() != in_dim || c.b.size() != out_dim) {
      throw std::invalid_argument("SvdAdapter::from_parts: component shape mismatch");
    }
    c.id = ad.next_id_++;
    c.frozen = frozen;
    if (frozen) c.lambda = kReserveLambda;
  };
  for (auto& c : active) adopt(c, false);
  if (reserve) adopt(*reserve, true);
  ad.active_ = std::move(active);
  ad.reserve_ = std::move(reserve);
  return ad;
}

Component SvdAdapter::make_component(Rng& rng, double lambda, bool frozen) {
  Component c;
  c.id = next_id_++;
  c.a = gaussian_vector(rng, in_dim_, init_std_);
  c.b = gaussian_vector(rng, out_dim_, init_std_);
  c.lambda = lambda;
  c.frozen = frozen;
  return c;
}

Component* SvdAdapter::find(std::uint64_t id) noexcept {
  for (auto& c : active_) {
    if (c.id == id) return &c;
  }
  if (reserve_ && reserve_->id == id) return &*reserve_;
  return nullptr;
}

const Component* SvdAdapter::find(std::uint64_t id) const noexcept {
  return const_cast<SvdAdapter*>(this)->find(id);
}

std::vector<const Component*> SvdAdapter::present() const {
  std::vector<const Component*> out;
  out.reserve(active_.size() + 1);
  for (const auto& c : active_) out.push_back(&c);
  if (reserve_ && advance_learning_) out.push_back(&*reserve_);
  return out;
}

DenseMatrix SvdAdapter::delta_w() const {
  DenseMatrix dw(out_dim_, in_dim_);
  for (const Component* c : present()) {
    const double coeff = scale_ * c->lambda;
    for (std::size_t i = 0; i < out_dim_; ++i) {
      const double bi = coeff * c->b[i];
      auto row = dw.row(i);
      for (std::size_t j = 0; j < in_dim_; ++j) row[j] += bi * c->a[j];
    }
  }
  return dw;
}

RegularizerResult SvdAdapter::regularizer() const {
  const auto comps = present();
  const std::size_t r = comps.size();
  if (r == 0) throw std::logic_error("SvdAdapter::regularizer: no components present");

  // Residuals of the r x r Gram matrices.
  DenseMatrix res_a(r, r);
  DenseMatrix res_b(r, r);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < r; ++j) {
      const double id = i == j ? 1.0 : 0.0;
      res_a(i, j) = dot(comps[i]->a, comps[j]->a) - id;
      res_b(i, j) = dot(comps[i]->b, comps[j]->b) - id;
    }
  }

  RegularizerResult out;
  out.loss = frobenius_norm_sq(res_a) + frobenius_norm_sq(res_b);
  out.grad.components.resize(r);
  // d/da_i = 4 sum_j res_a(i,j) a_j, and likewise for b.
  for (std::size_t i = 0; i < r; ++i) {
    ComponentGrad& g = out.grad.components[i];
    g.id = comps[i]->id;
    g.a.assign(in_dim_, 0.0);
    g.b.assign(out_dim_, 0.0);
    for (std::size_t j = 0; j < r; ++j) {
      const double ca = 4.0 * res_a(i, j);
      const double cb = 4.0 * res_b(i, j);
      for (std::size_t p = 0; p < in_dim_; ++p) g.a[p] += ca * comps[j]->a[p];
      for (std::size_t p = 0; p < out_dim_; ++p) g.b[p] += cb * comps[j]->b[p];
    }
  }
  return out;
}

AdapterGrad SvdAdapter::component_grads(const DenseMatrix& grad_w) const {
  if (grad_w.rows() != out_dim_ || grad_w.cols() != in_dim_) {
    throw std::invalid_argument("SvdAdapter::component_grads: expected [" +
                                std::to_string(out_dim_) + "x" + std::to_string(in_dim_) +
                                "], got " + grad_w.shape_string());
  }
  AdapterGrad out;
  const auto comps = present();
  out.components.resize(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const Component& c = *comps[k];
    ComponentGrad& g = out.components[k];
    g.id = c.id;
    // G a (length out) and G^T b (length in).
    std::vector<double> ga(out_dim_, 0.0);
    std::vector<double> gtb(in_dim_, 0.0);
    for (std::size_t i = 0; i < out_dim_; ++i) {
      const auto row = grad_w.row(i);
      double s = 0.0;
      for (std::size_t j = 0; j < in_dim_; ++j) {
        s += row[j] * c.a[j];
        gtb[j] += row[j] * c.b[i];
      }
      ga[i] = s;
    }
    const double coeff = scale_ * c.lambda;
    g.a.resize(in_dim_);
    g.b.resize(out_dim_);
    for (std::size_t j = 0; j < in_dim_; ++j) g.a[j] = coeff * gtb[j];
    for (std::size_t i = 0; i < out_dim_; ++i) g.b[i] = coeff * ga[i];
    g.lambda = c.frozen ? 0.0 : scale_ * dot(c.b, ga);
  }
  return out;
}

void SvdAdapter::activate_reserve() {
  if (!reserve_) throw std::logic_error("activate_reserve: no reserve (allocation phase closed)");
  Component c = std::move(*reserve_);
  reserve_.reset();
  c.frozen = false;
  active_.push_back(std::move(c));
}

std::uint64_t SvdAdapter::append_reserve(Rng& rng) {
  if (reserve_) throw std::logic_error("append_reserve: a reserve is already present");
  reserve_ = make_component(rng, kReserveLambda, true);
  return reserve_->id;
}

std::optional<std::uint64_t> SvdAdapter::mask_reserve() noexcept {
  if (!reserve_) return std::nullopt;
  const auto id = reserve_->id;
  reserve_.reset();
  return id;
}

}  // namespace increlora
