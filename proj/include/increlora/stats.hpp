#pragma once

#include <span>

namespace increlora {

// Spearman rank correlation; ties receive averaged ranks.
double spearman(std::span<const double> x, std::span<const double> y);

// Linearly interpolated quantile of unsorted data, q in [0, 1].
double quantile(std::span<const double> data, double q);

}  // namespace increlora
