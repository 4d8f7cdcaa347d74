#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "increlora/adapter.hpp"
#include "increlora/matrix.hpp"

namespace increlora {

enum class Activation { Identity, Tanh, Relu };
enum class LossKind { MeanSquaredError, SoftmaxCrossEntropy };

std::string_view to_string(Activation a) noexcept;
std::string_view to_string(LossKind l) noexcept;

// Frozen weight W0 (out x in), optional frozen bias, and the adapter on top.
struct LinearLayer {
  DenseMatrix w0;
  std::optional<std::vector<double>> bias;
  SvdAdapter adapter;

  std::size_t in_dim() const noexcept { return w0.cols(); }
  std::size_t out_dim() const noexcept { return w0.rows(); }
};

// Stack of linear layers with a fixed activation between consecutive layers
// (none after the last one). Samples are rows.
class Backbone {
 public:
  Backbone(std::vector<LinearLayer> layers, Activation activation, LossKind loss);

  std::size_t size() const noexcept { return layers_.size(); }
  const LinearLayer& layer(std::size_t i) const { return layers_.at(i); }
  SvdAdapter& adapter(std::size_t i) { return layers_.at(i).adapter; }
  const SvdAdapter& adapter(std::size_t i) const { return layers_.at(i).adapter; }
  const std::vector<LinearLayer>& layers() const noexcept { return layers_; }
  Activation activation() const noexcept { return activation_; }
  LossKind loss() const noexcept { return loss_; }
  std::size_t in_dim() const noexcept { return layers_.front().in_dim(); }
  std::size_t out_dim() const noexcept { return layers_.back().out_dim(); }

  std::vector<std::size_t> ranks() const;

 private:
  std::vector<LinearLayer> layers_;
  Activation activation_;
  LossKind loss_;
};

struct ForwardCache {
  const Backbone* owner = nullptr;
  std::size_t batch = 0;
  std::vector<DenseMatrix> inputs;   // input to each layer, batch x in
  std::vector<DenseMatrix> pre;      // layer outputs before activation, batch x out
  std::vector<DenseMatrix> delta_w;  // per-layer update matrix used in this pass
  std::vector<DenseMatrix> w_eff;    // W0 + Delta W
};

struct ForwardResult {
  DenseMatrix output;
  ForwardCache cache;
};

struct BatchGrad {
  std::vector<DenseMatrix> weight;    // dL/dW_eff per layer, out x in
  std::vector<AdapterGrad> adapters;  // per-component gradients per layer
};

struct LossGrad {
  double loss = 0.0;
  BatchGrad grad;
  ForwardCache cache;
};

ForwardResult forward(const Backbone& net, const DenseMatrix& x);
// Output of the frozen backbone alone (adapters ignored).
DenseMatrix forward_frozen(const Backbone& net, const DenseMatrix& x);

BatchGrad backward(const Backbone& net, const ForwardCache& cache, const DenseMatrix& grad_output);

// Mean-reduced task loss. For MSE the mean runs over every output entry; for
// softmax cross-entropy over samples, with `target` holding class
// probabilities (one-hot rows for hard labels).
double task_loss(LossKind kind, const DenseMatrix& output, const DenseMatrix& target);
DenseMatrix task_loss_grad(LossKind kind, const DenseMatrix& output, const DenseMatrix& target);

LossGrad loss_and_grad(const Backbone& net, const DenseMatrix& x, const DenseMatrix& y);

}  // namespace increlora
