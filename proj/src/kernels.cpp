#include "increlora/kernels.hpp"

namespace increlora::kernels {
namespace {

inline void matmul_row(const double* a_row, const double* b, double* c_row, std::size_t k,
                       std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) c_row[j] = 0.0;
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a_row[p];
    const double* b_row = b + p * n;
    for (std::size_t j = 0; j < n; ++j) c_row[j] += av * b_row[j];
  }
}

}  // namespace

void matmul_serial(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) matmul_row(a.data() + i * k, b.data(), c.data() + i * n, k, n);
}

void matmul_parallel(std::span<const double> a, std::span<const double> b, std::span<double> c,
                     std::size_t m, std::size_t k, std::size_t n) {
  const bool big = m * k * n >= kParallelThreshold;
  const auto rows = static_cast<long long>(m);
#pragma omp parallel for schedule(static) if (big)
  for (long long i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    matmul_row(a.data() + r * k, b.data(), c.data() + r * n, k, n);
  }
}

void axpby_serial(std::span<const double> x, double alpha, std::span<const double> y, double beta,
                  std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * alpha + y[i] * beta;
}

void axpby_parallel(std::span<const double> x, double alpha, std::span<const double> y,
                    double beta, std::span<double> out) {
  const auto len = static_cast<long long>(out.size());
#pragma omp parallel for schedule(static) if (out.size() >= kParallelThreshold)
  for (long long i = 0; i < len; ++i) out[i] = x[i] * alpha + y[i] * beta;
}

void hadamard_serial(std::span<const double> x, std::span<const double> y, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
}

void hadamard_parallel(std::span<const double> x, std::span<const double> y,
                       std::span<double> out) {
  const auto len = static_cast<long long>(out.size());
#pragma omp parallel for schedule(static) if (out.size() >= kParallelThreshold)
  for (long long i = 0; i < len; ++i) out[i] = x[i] * y[i];
}

}  // namespace increlora::kernels
