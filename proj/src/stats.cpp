#include "increlora/stats.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include <gsl/gsl_statistics_double.h>

namespace increlora {

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman: need two equal-length samples");
  std::vector<double> xs(x.begin(), x.end());
  std::vector<double> ys(y.begin(), y.end());
  std::vector<double> work(2 * x.size());
  return gsl_stats_spearman(xs.data(), 1, ys.data(), 1, xs.size(), work.data());
}

double quantile(std::span<const double> data, double q) {
  if (data.empty()) throw std::invalid_argument("quantile: empty sample");
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  return gsl_stats_quantile_from_sorted_data(sorted.data(), 1, sorted.size(), q);
}

}  // namespace increlora
