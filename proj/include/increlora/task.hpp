#pragma once

#include <cstdint>
#include <vector>

#include "increlora/config.hpp"
#include "increlora/matrix.hpp"
#include "increlora/netgraph.hpp"

namespace increlora {

struct Batch {
  DenseMatrix x;
  DenseMatrix y;  // regression targets, or one-hot labels for cross-entropy
};

// Teacher network W0 + Delta*_k with planted ranks; the student shares W0
// and must recover the planted updates through its adapters.
class PlantedTask {
 public:
  PlantedTask(const TaskSpec& spec, std::uint64_t seed);

  const TaskSpec& spec() const noexcept { return spec_; }
  std::size_t modules() const noexcept { return w0_.size(); }
  const DenseMatrix& w0(std::size_t k) const { return w0_.at(k); }
  const DenseMatrix& planted_delta(std::size_t k) const { return planted_.at(k); }
  const Backbone& teacher() const noexcept { return teacher_; }

  // Student backbone with the given adapters (one per layer).
  Backbone make_student(std::vector<SvdAdapter> adapters) const;

  Batch sample(Rng& rng, std::size_t count) const;
  // Deterministic in (seed, step).
  Batch train_batch(std::uint64_t step, std::size_t count) const;
  const Batch& eval_set() const noexcept { return eval_; }

 private:
  TaskSpec spec_;
  std::uint64_t seed_;
  std::vector<DenseMatrix> w0_;
  std::vector<std::optional<std::vector<double>>> bias_;
  std::vector<DenseMatrix> planted_;
  Backbone teacher_;
  Batch eval_;
};

// Columns with orthonormal directions, by modified Gram-Schmidt with one
// re-orthogonalization pass. Input is rows x cols with cols <= rows.
DenseMatrix orthonormal_columns(const DenseMatrix& m);

// MSE for regression tasks, accuracy for classification.
double evaluate_metric(const Backbone& net, const Batch& data);

}  // namespace increlora
