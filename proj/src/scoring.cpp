#include "increlora/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace increlora {

double raw_score(const DenseMatrix& delta_w, const DenseMatrix& grad) {
  if (delta_w.rows() != grad.rows() || delta_w.cols() != grad.cols()) {
    throw std::invalid_argument("raw_score: shape mismatch " + delta_w.shape_string() + " vs " +
                                grad.shape_string());
  }
  const auto w = delta_w.data();
  const auto g = grad.data();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += std::abs(w[i] * g[i]);
  return s / static_cast<double>(w.size());
}

std::vector<std::size_t> top_h(std::span<const double> scores, std::size_t h) {
  if (h < 1 || h > scores.size()) {
    throw std::invalid_argument("top_h: h=" + std::to_string(h) + " outside [1, " +
                                std::to_string(scores.size()) + "]");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });
  order.resize(h);
  std::sort(order.begin(), order.end());
  return order;
}

ImportanceState::ImportanceState(std::size_t modules, double beta1, double beta2)
    : beta1_(beta1),
      beta2_(beta2),
      sensitivity_(modules, 0.0),
      uncertainty_(modules, 0.0),
      score_(modules, 0.0) {
  if (modules == 0) throw std::invalid_argument("ImportanceState: no modules");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("ImportanceState: betas must lie in (0, 1)");
  }
}

void ImportanceState::update(std::size_t module, double raw) {
  if (module >= size()) throw std::out_of_range("ImportanceState::update: module index");
  if (!(raw >= 0.0)) {
    throw std::invalid_argument("ImportanceState::update: raw score must be non-negative, got " +
                                std::to_string(raw));
  }
  double& i = sensitivity_[module];
  double& u = uncertainty_[module];
  i = beta1_ * i + (1.0 - beta1_) * raw;
  u = beta2_ * u + (1.0 - beta2_) * std::abs(i - raw);
  score_[module] = i * u;
}

void ImportanceState::update_all(std::span<const double> raw) {
  if (raw.size() != size()) throw std::invalid_argument("ImportanceState::update_all: length");
  for (std::size_t k = 0; k < raw.size(); ++k) update(k, raw[k]);
  ++step_;
}

std::vector<std::size_t> ImportanceState::top_h(std::size_t h) const {
  return increlora::top_h(score_, h);
}

ImportanceState::Snapshot ImportanceState::snapshot() const {
  return {sensitivity_, uncertainty_, score_, step_, beta1_, beta2_};
}

ImportanceState ImportanceState::restore(const Snapshot& s) {
  ImportanceState st(s.score.size(), s.beta1, s.beta2);
  if (s.sensitivity.size() != s.score.size() || s.uncertainty.size() != s.score.size()) {
    throw std::invalid_argument("ImportanceState::restore: ragged snapshot");
  }
  st.sensitivity_ = s.sensitivity;
  st.uncertainty_ = s.uncertainty;
  st.score_ = s.score;
  st.step_ = s.step;
  return st;
}

}  // namespace increlora
