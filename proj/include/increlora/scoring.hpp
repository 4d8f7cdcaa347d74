#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "increlora/matrix.hpp"

namespace increlora {

// Sensitivity of one update matrix: mean over entries of |Delta W (*) dL/dDelta W|.
double raw_score(const DenseMatrix& delta_w, const DenseMatrix& grad);

// Indices of the h largest scores, returned in ascending index order. Ties
// are broken in favour of the lower index.
std::vector<std::size_t> top_h(std::span<const double> scores, std::size_t h);

// Per-module smoothed sensitivity I, uncertainty U and composite score
// S_hat = I * U, all starting at zero.
class ImportanceState {
 public:
  struct Snapshot {
    std::vector<double> sensitivity;
    std::vector<double> uncertainty;
    std::vector<double> score;
    std::uint64_t step = 0;
    double beta1 = 0.0;
    double beta2 = 0.0;

    friend bool operator==(const Snapshot&, const Snapshot&) = default;
  };

  ImportanceState(std::size_t modules, double beta1, double beta2);

  // I <- b1 I + (1-b1) s;  U <- b2 U + (1-b2) |I - s| (with the new I);  S_hat <- I U.
  void update(std::size_t module, double raw);
  // One update per module, then advances the step counter.
  void update_all(std::span<const double> raw);

  std::vector<std::size_t> top_h(std::size_t h) const;

  std::size_t size() const noexcept { return sensitivity_.size(); }
  std::uint64_t step() const noexcept { return step_; }
  double beta1() const noexcept { return beta1_; }
  double beta2() const noexcept { return beta2_; }
  std::span<const double> sensitivity() const noexcept { return sensitivity_; }
  std::span<const double> uncertainty() const noexcept { return uncertainty_; }
  std::span<const double> scores() const noexcept { return score_; }

  Snapshot snapshot() const;
  static ImportanceState restore(const Snapshot& s);

 private:
  double beta1_;
  double beta2_;
  std::uint64_t step_ = 0;
  std::vector<double> sensitivity_;
  std::vector<double> uncertainty_;
  std::vector<double> score_;
};

}  // namespace increlora
