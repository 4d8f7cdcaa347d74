#include "increlora/reports.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace increlora {

std::vector<std::size_t> final_ranks(std::size_t n, const std::vector<AllocationEvent>& events,
                                     Phase phase, bool deployed) {
  std::vector<std::size_t> ranks(n, 1);
  if (!events.empty()) {
    if (events.back().ranks.size() != n) throw std::invalid_argument("final_ranks: module count");
    ranks = events.back().ranks;
  }
  if (deployed && phase == Phase::Closed) {
    for (auto& r : ranks) r -= 1;
  }
  return ranks;
}

std::size_t RankGrid::total() const {
  std::size_t s = 0;
  for (const auto& row : rows) {
    for (std::size_t v : row) s += v;
  }
  return s;
}

std::string RankGrid::to_csv() const {
  std::ostringstream os;
  os << "layer";
  for (const auto& t : module_types) os << ',' << t;
  os << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    os << r;
    for (std::size_t v : rows[r]) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

RankGrid rank_report(const std::vector<std::size_t>& ranks,
                     const std::vector<std::string>& module_types) {
  if (module_types.empty() || ranks.size() % module_types.size() != 0) {
    throw std::invalid_argument("rank_report: module count is not a multiple of the type count");
  }
  RankGrid grid;
  grid.module_types = module_types;
  const std::size_t types = module_types.size();
  for (std::size_t k = 0; k < ranks.size(); ++k) {
    if (k % types == 0) grid.rows.emplace_back();
    grid.rows.back().push_back(ranks[k]);
  }
  return grid;
}

std::string rank_trajectory_csv(std::size_t n, const std::vector<AllocationEvent>& events) {
  std::ostringstream os;
  os << "step";
  for (std::size_t k = 0; k < n; ++k) os << ",m" << k;
  os << '\n';
  os << 0;
  for (std::size_t k = 0; k < n; ++k) os << ",1";
  os << '\n';
  for (const auto& ev : events) {
    os << ev.step;
    for (std::size_t r : ev.ranks) os << ',' << r;
    os << '\n';
  }
  return os.str();
}

std::size_t LambdaHistogram::total() const {
  std::size_t s = zero;
  for (const auto& [_, c] : decades) s += c;
  return s;
}

std::string LambdaHistogram::to_csv() const {
  std::ostringstream os;
  os << "decade,lower,count\n";
  os << "zero,0," << zero << '\n';
  for (const auto& [d, c] : decades) os << d << ",1e" << d << ',' << c << '\n';
  return os.str();
}

int decade_of(double magnitude) {
  int d = static_cast<int>(std::floor(std::log10(magnitude)));
  // log10 can land one ulp on the wrong side of an exact power of ten.
  if (std::pow(10.0, d) > magnitude) --d;
  if (std::pow(10.0, d + 1) <= magnitude) ++d;
  return d;
}

LambdaHistogram lambda_histogram(const Checkpoint& ckpt) {
  LambdaHistogram h;
  for (const auto& m : ckpt.modules) {
    for (const auto& c : m.active) {
      const double mag = std::abs(c.lambda);
      if (mag == 0.0) {
        ++h.zero;
      } else {
        ++h.decades[decade_of(mag)];
      }
    }
  }
  return h;
}

}  // namespace increlora
