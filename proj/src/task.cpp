#include "increlora/task.hpp"

#include <cmath>
#include <stdexcept>

namespace increlora {

DenseMatrix orthonormal_columns(const DenseMatrix& m) {
  if (m.cols() > m.rows()) throw std::invalid_argument("orthonormal_columns: more columns than rows");
  DenseMatrix q = m;
  const std::size_t rows = q.rows();
  for (std::size_t j = 0; j < q.cols(); ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t p = 0; p < j; ++p) {
        double proj = 0.0;
        for (std::size_t i = 0; i < rows; ++i) proj += q(i, p) * q(i, j);
        for (std::size_t i = 0; i < rows; ++i) q(i, j) -= proj * q(i, p);
      }
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < rows; ++i) norm += q(i, j) * q(i, j);
    norm = std::sqrt(norm);
    if (norm < 1e-12) throw std::runtime_error("orthonormal_columns: rank-deficient input");
    for (std::size_t i = 0; i < rows; ++i) q(i, j) /= norm;
  }
  return q;
}

namespace {

std::vector<LinearLayer> build_layers(const std::vector<DenseMatrix>& weights,
                                      const std::vector<std::optional<std::vector<double>>>& bias,
                                      std::vector<SvdAdapter> adapters) {
  std::vector<LinearLayer> layers;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    layers.push_back({weights[k], bias[k], std::move(adapters[k])});
  }
  return layers;
}

Backbone make_teacher(const TaskSpec& spec, const std::vector<DenseMatrix>& w0,
                      const std::vector<std::optional<std::vector<double>>>& bias,
                      const std::vector<DenseMatrix>& planted) {
  std::vector<DenseMatrix> weights;
  std::vector<SvdAdapter> none;
  for (std::size_t k = 0; k < w0.size(); ++k) {
    weights.push_back(add(w0[k], planted[k]));
    none.push_back(SvdAdapter::empty(w0[k].cols(), w0[k].rows()));
  }
  return Backbone(build_layers(weights, bias, std::move(none)), spec.activation, spec.loss);
}

std::vector<DenseMatrix> random_w0(const TaskSpec& spec, std::uint64_t seed) {
  Rng rng(seed, streams::kBackbone);
  std::vector<DenseMatrix> out;
  for (std::size_t k = 0; k + 1 < spec.dims.size(); ++k) {
    const std::size_t in = spec.dims[k];
    const std::size_t outd = spec.dims[k + 1];
    out.push_back(gaussian_fill(rng, outd, in, spec.backbone_gain / std::sqrt(static_cast<double>(in))));
  }
  return out;
}

std::vector<std::optional<std::vector<double>>> random_bias(const TaskSpec& spec, std::uint64_t seed) {
  Rng rng(seed ^ 0xb1a5ULL, streams::kBackbone);
  std::vector<std::optional<std::vector<double>>> out;
  for (std::size_t k = 0; k + 1 < spec.dims.size(); ++k) {
    if (spec.bias) {
      out.emplace_back(gaussian_vector(rng, spec.dims[k + 1], 0.1));
    } else {
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

std::vector<DenseMatrix> planted_deltas(const TaskSpec& spec, std::uint64_t seed) {
  Rng rng(seed, streams::kPlanted);
  std::vector<DenseMatrix> out;
  for (std::size_t k = 0; k + 1 < spec.dims.size(); ++k) {
    const std::size_t in = spec.dims[k];
    const std::size_t outd = spec.dims[k + 1];
    const std::size_t rho = spec.planted_ranks.at(k);
    DenseMatrix delta(outd, in);
    if (rho > 0) {
      const double s = spec.planted_scales.empty() ? spec.planted_scale : spec.planted_scales[k];
      const DenseMatrix u = orthonormal_columns(gaussian_fill(rng, outd, rho, 1.0));
      const DenseMatrix v = orthonormal_columns(gaussian_fill(rng, in, rho, 1.0));
      for (std::size_t j = 0; j < rho; ++j) {
        for (std::size_t r = 0; r < outd; ++r) {
          for (std::size_t c = 0; c < in; ++c) delta(r, c) += s * u(r, j) * v(c, j);
        }
      }
    }
    out.push_back(std::move(delta));
  }
  return out;
}

}  // namespace

PlantedTask::PlantedTask(const TaskSpec& spec, std::uint64_t seed)
    : spec_(spec),
      seed_(seed),
      w0_(random_w0(spec, seed)),
      bias_(random_bias(spec, seed)),
      planted_(planted_deltas(spec, seed)),
      teacher_(make_teacher(spec, w0_, bias_, planted_)) {
  Rng eval_rng(seed, streams::kEvalData);
  eval_ = sample(eval_rng, spec.eval_samples);
}

Backbone PlantedTask::make_student(std::vector<SvdAdapter> adapters) const {
  if (adapters.size() != w0_.size()) throw std::invalid_argument("make_student: adapter count");
  return Backbone(build_layers(w0_, bias_, std::move(adapters)), spec_.activation, spec_.loss);
}

Batch PlantedTask::sample(Rng& rng, std::size_t count) const {
  Batch b;
  b.x = gaussian_fill(rng, count, spec_.dims.front(), 1.0);
  DenseMatrix out = forward_frozen(teacher_, b.x);
  if (spec_.noise > 0.0) {
    for (double& v : out.data()) v += spec_.noise * rng.normal();
  }
  if (spec_.loss == LossKind::MeanSquaredError) {
    b.y = std::move(out);
    return b;
  }
  b.y = DenseMatrix(out.rows(), out.cols());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    const auto row = out.row(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] > row[best]) best = c;
    }
    b.y(r, best) = 1.0;
  }
  return b;
}

Batch PlantedTask::train_batch(std::uint64_t step, std::size_t count) const {
  Rng rng = Rng::derive(seed_, streams::kTrainData, step);
  return sample(rng, count);
}

double evaluate_metric(const Backbone& net, const Batch& data) {
  const DenseMatrix out = forward(net, data.x).output;
  if (net.loss() == LossKind::MeanSquaredError) return task_loss(net.loss(), out, data.y);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    const auto row = out.row(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] > row[best]) best = c;
    }
    if (data.y(r, best) > 0.5) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(out.rows());
}

}  // namespace increlora
