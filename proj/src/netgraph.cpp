#include "increlora/netgraph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace increlora {
namespace {

void apply_activation(Activation act, DenseMatrix& m) {
  switch (act) {
    case Activation::Identity:
      return;
    case Activation::Tanh:
      for (double& v : m.data()) v = std::tanh(v);
      return;
    case Activation::Relu:
      for (double& v : m.data()) v = v > 0.0 ? v : 0.0;
      return;
  }
}

// grad *= act'(pre), in place.
void apply_activation_grad(Activation act, const DenseMatrix& pre, DenseMatrix& grad) {
  auto g = grad.data();
  auto p = pre.data();
  switch (act) {
    case Activation::Identity:
      return;
    case Activation::Tanh:
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = std::tanh(p[i]);
        g[i] *= 1.0 - t * t;
      }
      return;
    case Activation::Relu:
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(p[i] > 0.0)) g[i] = 0.0;
      }
      return;
  }
}

// y = x W^T + bias
DenseMatrix linear(const DenseMatrix& x, const DenseMatrix& w,
                   const std::optional<std::vector<double>>& bias) {
  DenseMatrix y = matmul(x, transpose(w));
  if (bias) {
    for (std::size_t r = 0; r < y.rows(); ++r) {
      auto row = y.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += (*bias)[c];
    }
  }
  return y;
}

void check_input(const Backbone& net, const DenseMatrix& x) {
  if (x.cols() != net.in_dim()) {
    throw std::invalid_argument("forward: input " + x.shape_string() + " does not match in_dim " +
                                std::to_string(net.in_dim()));
  }
}

}  // namespace

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
  }
  return "?";
}

std::string_view to_string(LossKind l) noexcept {
  switch (l) {
    case LossKind::MeanSquaredError: return "mse";
    case LossKind::SoftmaxCrossEntropy: return "cross_entropy";
  }
  return "?";
}

Backbone::Backbone(std::vector<LinearLayer> layers, Activation activation, LossKind loss)
    : layers_(std::move(layers)), activation_(activation), loss_(loss) {
  if (layers_.empty()) throw std::invalid_argument("Backbone: no layers");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.adapter.in_dim() != l.in_dim() || l.adapter.out_dim() != l.out_dim()) {
      throw std::invalid_argument("Backbone: adapter shape mismatch at layer " + std::to_string(i));
    }
    if (l.bias && l.bias->size() != l.out_dim()) {
      throw std::invalid_argument("Backbone: bias length mismatch at layer " + std::to_string(i));
    }
    if (i > 0 && layers_[i - 1].out_dim() != l.in_dim()) {
      throw std::invalid_argument("Backbone: layer " + std::to_string(i - 1) + " output " +
                                  std::to_string(layers_[i - 1].out_dim()) +
                                  " does not feed layer " + std::to_string(i) + " input " +
                                  std::to_string(l.in_dim()));
    }
  }
}

std::vector<std::size_t> Backbone::ranks() const {
  std::vector<std::size_t> out;
  out.reserve(layers_.size());
  for (const auto& l : layers_) out.push_back(l.adapter.rank());
  return out;
}

ForwardResult forward(const Backbone& net, const DenseMatrix& x) {
  check_input(net, x);
  ForwardResult res;
  ForwardCache& cache = res.cache;
  cache.owner = &net;
  cache.batch = x.rows();
  DenseMatrix h = x;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const LinearLayer& layer = net.layer(i);
    DenseMatrix dw = layer.adapter.delta_w();
    DenseMatrix w = add(layer.w0, dw);
    DenseMatrix pre = linear(h, w, layer.bias);
    cache.inputs.push_back(std::move(h));
    cache.delta_w.push_back(std::move(dw));
    cache.w_eff.push_back(std::move(w));
    h = pre;
    if (i + 1 < net.size()) apply_activation(net.activation(), h);
    cache.pre.push_back(std::move(pre));
  }
  res.output = std::move(h);
  return res;
}

DenseMatrix forward_frozen(const Backbone& net, const DenseMatrix& x) {
  check_input(net, x);
  DenseMatrix h = x;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const LinearLayer& layer = net.layer(i);
    h = linear(h, layer.w0, layer.bias);
    if (i + 1 < net.size()) apply_activation(net.activation(), h);
  }
  return h;
}

BatchGrad backward(const Backbone& net, const ForwardCache& cache, const DenseMatrix& grad_output) {
  if (cache.owner != &net || cache.pre.size() != net.size()) {
    throw std::logic_error("backward: cache does not belong to this network");
  }
  if (grad_output.rows() != cache.batch || grad_output.cols() != net.out_dim()) {
    throw std::invalid_argument("backward: upstream gradient " + grad_output.shape_string() +
                                " does not match output [" + std::to_string(cache.batch) + "x" +
                                std::to_string(net.out_dim()) + "]");
  }
  BatchGrad grads;
  grads.weight.resize(net.size());
  grads.adapters.resize(net.size());
  DenseMatrix g = grad_output;  // dL/dpre of the current layer
  for (std::size_t idx = net.size(); idx-- > 0;) {
    const LinearLayer& layer = net.layer(idx);
    // dL/dW_eff = g^T x
    grads.weight[idx] = matmul(transpose(g), cache.inputs[idx]);
    grads.adapters[idx] = layer.adapter.component_grads(grads.weight[idx]);
    if (idx > 0) {
      DenseMatrix gx = matmul(g, cache.w_eff[idx]);
      apply_activation_grad(net.activation(), cache.pre[idx - 1], gx);
      g = std::move(gx);
    }
  }
  return grads;
}

namespace {

void check_target(const DenseMatrix& output, const DenseMatrix& target) {
  if (output.rows() != target.rows() || output.cols() != target.cols()) {
    throw std::invalid_argument("loss: target " + target.shape_string() +
                                " does not match output " + output.shape_string());
  }
}

// Row-wise softmax, numerically stabilized.
DenseMatrix softmax_rows(const DenseMatrix& z) {
  DenseMatrix p = z;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    auto row = p.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      s += v;
    }
    for (double& v : row) v /= s;
  }
  return p;
}

}  // namespace

double task_loss(LossKind kind, const DenseMatrix& output, const DenseMatrix& target) {
  check_target(output, target);
  const auto o = output.data();
  const auto t = target.data();
  if (kind == LossKind::MeanSquaredError) {
    double s = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) {
      const double d = o[i] - t[i];
      s += d * d;
    }
    return s / static_cast<double>(o.size());
  }
  double s = 0.0;
  for (std::size_t r = 0; r < output.rows(); ++r) {
    const auto row = output.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    const double log_norm = mx + std::log(z);
    const auto trow = target.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) s -= trow[c] * (row[c] - log_norm);
  }
  return s / static_cast<double>(output.rows());
}

DenseMatrix task_loss_grad(LossKind kind, const DenseMatrix& output, const DenseMatrix& target) {
  check_target(output, target);
  if (kind == LossKind::MeanSquaredError) {
    DenseMatrix g = subtract(output, target);
    const double c = 2.0 / static_cast<double>(output.size());
    for (double& v : g.data()) v *= c;
    return g;
  }
  DenseMatrix g = softmax_rows(output);
  const double inv_b = 1.0 / static_cast<double>(output.rows());
  for (std::size_t r = 0; r < g.rows(); ++r) {
    auto row = g.row(r);
    const auto trow = target.row(r);
    double mass = 0.0;
    for (double v : trow) mass += v;
    // d/dz of -sum_c t_c log softmax(z)_c = mass * p - t
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (mass * row[c] - trow[c]) * inv_b;
  }
  return g;
}

LossGrad loss_and_grad(const Backbone& net, const DenseMatrix& x, const DenseMatrix& y) {
  if (y.rows() != x.rows() || y.cols() != net.out_dim()) {
    throw std::invalid_argument("loss_and_grad: labels " + y.shape_string() +
                                " do not match batch of " + std::to_string(x.rows()) +
                                " samples with " + std::to_string(net.out_dim()) + " outputs");
  }
  ForwardResult fwd = forward(net, x);
  LossGrad out;
  out.loss = task_loss(net.loss(), fwd.output, y);
  out.grad = backward(net, fwd.cache, task_loss_grad(net.loss(), fwd.output, y));
  out.cache = std::move(fwd.cache);
  return out;
}

}  // namespace increlora
