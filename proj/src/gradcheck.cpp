#include "increlora/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include <quadmath.h>

namespace increlora::gradcheck {
namespace {

// Quad precision keeps the oracle's roundoff far below the tolerance even for reserve
// gradients, which are scaled by the frozen 1e-5 and can sit near 1e-9.
using real = __float128;

constexpr double kKinkMargin = 1e-3;
constexpr int kBatchAttempts = 100;

struct RefComponent {
  std::vector<real> a;
  std::vector<real> b;
  real lambda;
};

struct RefLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<real> w0;  // row-major out x in
  std::vector<real> bias;
  real scale = 1;
  std::vector<RefComponent> comps;
};

struct RefNet {
  std::vector<RefLayer> layers;
  Activation act;
  LossKind loss;
};

RefComponent ref_of(const Component& c) {
  return {std::vector<real>(c.a.begin(), c.a.end()), std::vector<real>(c.b.begin(), c.b.end()),
          static_cast<real>(c.lambda)};
}

RefNet ref_of(const Backbone& net) {
  RefNet r{{}, net.activation(), net.loss()};
  for (const auto& l : net.layers()) {
    RefLayer rl;
    rl.in = l.in_dim();
    rl.out = l.out_dim();
    rl.w0.assign(l.w0.data().begin(), l.w0.data().end());
    rl.bias.assign(l.out_dim(), 0);
    if (l.bias) std::copy(l.bias->begin(), l.bias->end(), rl.bias.begin());
    rl.scale = l.adapter.scale();
    for (const Component* c : l.adapter.present()) rl.comps.push_back(ref_of(*c));
    r.layers.push_back(std::move(rl));
  }
  return r;
}

real ref_loss(const RefNet& net, const DenseMatrix& x, const DenseMatrix& y) {
  real total = 0;
  for (std::size_t s = 0; s < x.rows(); ++s) {
    std::vector<real> h(x.row(s).begin(), x.row(s).end());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const RefLayer& L = net.layers[l];
      std::vector<real> z(L.out, 0);
      for (std::size_t i = 0; i < L.out; ++i) {
        real acc = L.bias[i];
        for (std::size_t j = 0; j < L.in; ++j) {
          real w = L.w0[i * L.in + j];
          for (const auto& c : L.comps) w += L.scale * c.lambda * c.b[i] * c.a[j];
          acc += w * h[j];
        }
        z[i] = acc;
      }
      if (l + 1 < net.layers.size()) {
        for (real& v : z) {
          if (net.act == Activation::Tanh) v = tanhq(v);
          if (net.act == Activation::Relu) v = v > 0 ? v : 0;
        }
      }
      h = std::move(z);
    }
    const auto target = y.row(s);
    if (net.loss == LossKind::MeanSquaredError) {
      for (std::size_t i = 0; i < h.size(); ++i) {
        const real d = h[i] - target[i];
        total += d * d / static_cast<real>(h.size());
      }
    } else {
      const real mx = *std::max_element(h.begin(), h.end());
      real z = 0;
      for (real v : h) z += expq(v - mx);
      const real log_norm = mx + logq(z);
      for (std::size_t i = 0; i < h.size(); ++i) total -= target[i] * (h[i] - log_norm);
    }
  }
  return total / static_cast<real>(x.rows());
}

real ref_regularizer(const std::vector<RefComponent>& comps) {
  real total = 0;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    for (std::size_t j = 0; j < comps.size(); ++j) {
      real ga = 0;
      real gb = 0;
      for (std::size_t p = 0; p < comps[i].a.size(); ++p) ga += comps[i].a[p] * comps[j].a[p];
      for (std::size_t p = 0; p < comps[i].b.size(); ++p) gb += comps[i].b[p] * comps[j].b[p];
      const real id = i == j ? 1 : 0;
      total += (ga - id) * (ga - id) + (gb - id) * (gb - id);
    }
  }
  return total;
}

template <typename F>
std::vector<long double> central_difference(std::vector<real>& values, real step, F&& f) {
  std::vector<long double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const real keep = values[i];
    values[i] = keep + step;
    const real up = f();
    values[i] = keep - step;
    const real down = f();
    values[i] = keep;
    out[i] = static_cast<long double>((up - down) / (2 * step));
  }
  return out;
}

void fold(Report& rep, const std::string& row, double err, const std::string& where) {
  for (auto& r : rep.rows) {
    if (r.name != row) continue;
    ++r.arrays;
    if (r.worst.empty() || err > r.max_rel_error) {
      r.max_rel_error = err;
      r.worst = where;
    }
    return;
  }
}

// ReLU is not differentiable at 0; a stencil that straddles a kink measures a one-sided slope.
bool clear_of_kinks(const Backbone& net, const DenseMatrix& x) {
  if (net.activation() != Activation::Relu) return true;
  const ForwardResult fr = forward(net, x);
  for (std::size_t l = 0; l + 1 < fr.cache.pre.size(); ++l) {
    for (double v : fr.cache.pre[l].data()) {
      if (std::abs(v) < kKinkMargin) return false;
    }
  }
  return true;
}

}  // namespace

bool Report::passed() const {
  return std::all_of(rows.begin(), rows.end(),
                     [&](const Row& r) { return r.max_rel_error < tolerance; });
}

double relative_error(const std::vector<double>& analytic, const std::vector<long double>& numeric) {
  long double diff = 0;
  long double scale = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(static_cast<long double>(analytic[i]) - numeric[i]));
    scale = std::max({scale, std::abs(static_cast<long double>(analytic[i])), std::abs(numeric[i])});
  }
  if (scale == 0) return 0.0;
  return static_cast<double>(diff / scale);
}

long double reference_loss(const Backbone& net, const DenseMatrix& x, const DenseMatrix& y) {
  return static_cast<long double>(ref_loss(ref_of(net), x, y));
}

long double reference_regularizer(const SvdAdapter& ad) {
  std::vector<RefComponent> comps;
  for (const Component* c : ad.present()) comps.push_back(ref_of(*c));
  return static_cast<long double>(ref_regularizer(comps));
}

Backbone random_network(Rng& rng, const std::vector<std::size_t>& dims, Activation act,
                        LossKind loss) {
  std::vector<LinearLayer> layers;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const std::size_t in = dims[k];
    const std::size_t out = dims[k + 1];
    LinearLayer layer{gaussian_fill(rng, out, in, 1.0 / std::sqrt(static_cast<double>(in))),
                      gaussian_vector(rng, out, 0.3), SvdAdapter(in, out, rng, 0.5)};
    const std::size_t active = static_cast<std::size_t>(rng.next_u64() % 4);
    for (std::size_t i = 0; i < active; ++i) {
      layer.adapter.activate_reserve();
      layer.adapter.active().back().lambda = rng.normal();
      layer.adapter.append_reserve(rng);
    }
    layers.push_back(std::move(layer));
  }
  return Backbone(std::move(layers), act, loss);
}

void random_batch(Rng& rng, const Backbone& net, std::size_t rows, DenseMatrix& x, DenseMatrix& y) {
  x = gaussian_fill(rng, rows, net.in_dim(), 1.0);
  if (net.loss() == LossKind::MeanSquaredError) {
    y = gaussian_fill(rng, rows, net.out_dim(), 1.0);
    return;
  }
  y = DenseMatrix(rows, net.out_dim());
  for (std::size_t r = 0; r < rows; ++r) y(r, rng.next_u64() % net.out_dim()) = 1.0;
}

void check_network(const Backbone& net, const DenseMatrix& x, const DenseMatrix& y, const std::string& label,
                   Report& report) {
  const LossGrad lg = loss_and_grad(net, x, y);
  RefNet ref = ref_of(net);
  const real h = report.step;
  auto loss = [&] { return ref_loss(ref, x, y); };

  for (std::size_t l = 0; l < net.size(); ++l) {
    const SvdAdapter& ad = net.adapter(l);
    const auto present = ad.present();
    const AdapterGrad& g = lg.grad.adapters[l];
    for (std::size_t c = 0; c < present.size(); ++c) {
      const Component& comp = *present[c];
      const ComponentGrad& cg = g.components[c];
      const std::string where = label + " layer " + std::to_string(l) + " component " +
                                std::to_string(c) + (comp.frozen ? " (reserve)" : "");
      RefComponent& rc = ref.layers[l].comps[c];
      fold(report, "a", relative_error(cg.a, central_difference(rc.a, h, loss)), where);
      fold(report, "b", relative_error(cg.b, central_difference(rc.b, h, loss)), where);
      if (!comp.frozen) {
        std::vector<real> lam{rc.lambda};
        const auto fd = central_difference(lam, h, [&] {
          rc.lambda = lam[0];
          return loss();
        });
        rc.lambda = static_cast<real>(comp.lambda);
        fold(report, "lambda", relative_error({cg.lambda}, fd), where);
      }
    }

    if (present.empty()) continue;
    const RegularizerResult rr = ad.regularizer();
    std::vector<RefComponent> rcomps;
    for (const Component* c : present) rcomps.push_back(ref_of(*c));
    auto reg = [&] { return ref_regularizer(rcomps); };
    for (std::size_t c = 0; c < present.size(); ++c) {
      const std::string where = label + " layer " + std::to_string(l) + " component " + std::to_string(c);
      fold(report, "regularizer-a",
           relative_error(rr.grad.components[c].a, central_difference(rcomps[c].a, h, reg)), where);
      fold(report, "regularizer-b",
           relative_error(rr.grad.components[c].b, central_difference(rcomps[c].b, h, reg)), where);
    }
  }
}

Report run(std::uint64_t seed, std::size_t seeds, double step, double tolerance) {
  Report rep;
  rep.step = step;
  rep.tolerance = tolerance;
  for (const char* name : {"a", "b", "lambda", "regularizer-a", "regularizer-b"}) rep.rows.push_back(Row{name, 0.0, 0, {}});

  for (std::size_t s = 0; s < seeds; ++s) {
    Rng rng(seed + s, streams::kGradCheck);
    for (Activation act : {Activation::Identity, Activation::Tanh, Activation::Relu}) {
      for (LossKind loss : {LossKind::MeanSquaredError, LossKind::SoftmaxCrossEntropy}) {
        std::vector<std::size_t> dims(4);
        for (auto& d : dims) d = 1 + rng.next_u64() % 5;
        if (loss == LossKind::SoftmaxCrossEntropy) dims.back() = std::max<std::size_t>(dims.back(), 2);
        Backbone net = random_network(rng, dims, act, loss);
        DenseMatrix x;
        DenseMatrix y;
        random_batch(rng, net, 3, x, y);
        for (int attempt = 0; attempt < kBatchAttempts && !clear_of_kinks(net, x); ++attempt) {
          random_batch(rng, net, 3, x, y);
        }
        const std::string label = "seed " + std::to_string(seed + s) + " " +
                                  std::string(to_string(act)) + "/" + std::string(to_string(loss));
        check_network(net, x, y, label, rep);
      }
    }
    Backbone tiny = random_network(rng, {1, 1}, Activation::Identity, LossKind::MeanSquaredError);
    DenseMatrix x;
    DenseMatrix y;
    random_batch(rng, tiny, 1, x, y);
    check_network(tiny, x, y, "seed " + std::to_string(seed + s) + " 1x1", rep);
  }
  return rep;
}

}  // namespace increlora::gradcheck
