#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "increlora/netgraph.hpp"

// Central finite-difference verification of the analytic gradients. The
// reference loss is evaluated by a separate extended-precision forward pass
// that rebuilds every weight entry from the rank-1 terms, so it shares no
// code path with netgraph/adapter.
namespace increlora::gradcheck {

struct Row {
  std::string name;           // a, b, lambda, regularizer-a, regularizer-b
  double max_rel_error = 0.0; // over all checked arrays
  std::size_t arrays = 0;
  std::string worst;          // where the maximum occurred
};

struct Report {
  std::vector<Row> rows;
  double tolerance = 1e-5;
  double step = 1e-6;

  bool passed() const;
};

// ||g - fd||_inf / max(||g||_inf, ||fd||_inf); 0 when both are zero.
double relative_error(const std::vector<double>& analytic, const std::vector<long double>& numeric);

// Task loss recomputed in long double.
long double reference_loss(const Backbone& net, const DenseMatrix& x, const DenseMatrix& y);
// Orthogonality penalty of one adapter recomputed in long double.
long double reference_regularizer(const SvdAdapter& ad);

// Random small network: layer widths `dims`, each adapter with 0..3 active
// components and a reserve, all with O(1) factors.
Backbone random_network(Rng& rng, const std::vector<std::size_t>& dims, Activation act,
                        LossKind loss);
// Random inputs and matching targets for `net`.
void random_batch(Rng& rng, const Backbone& net, std::size_t rows, DenseMatrix& x, DenseMatrix& y);

// Checks one network/batch pair, folding the errors into `report`.
void check_network(const Backbone& net, const DenseMatrix& x, const DenseMatrix& y, const std::string& label,
                   Report& report);

// Every activation x loss combination on random 3-layer nets, plus a 1x1
// single-layer net, for `seeds` consecutive seeds starting at `seed`.
Report run(std::uint64_t seed, std::size_t seeds = 10, double step = 1e-6, double tolerance = 1e-5);

}  // namespace increlora::gradcheck
