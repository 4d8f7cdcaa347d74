#pragma once

#include <cstddef>
#include <span>

// Raw kernels behind the DenseMatrix operations. The parallel versions split
// work by output row only, so every output element is accumulated in the same
// order as the serial reference and results are bit-identical for any thread
// count. The serial versions are kept as the reference for tests and benches.
namespace increlora::kernels {

// c[m x n] = a[m x k] * b[k x n]
void matmul_serial(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t m, std::size_t k, std::size_t n);
void matmul_parallel(std::span<const double> a, std::span<const double> b, std::span<double> c,
                     std::size_t m, std::size_t k, std::size_t n);

// out[i] = x[i] * alpha + y[i] * beta
void axpby_serial(std::span<const double> x, double alpha, std::span<const double> y, double beta,
                  std::span<double> out);
void axpby_parallel(std::span<const double> x, double alpha, std::span<const double> y,
                    double beta, std::span<double> out);

void hadamard_serial(std::span<const double> x, std::span<const double> y, std::span<double> out);
void hadamard_parallel(std::span<const double> x, std::span<const double> y,
                       std::span<double> out);

// Work (multiply-adds) below which the parallel entry points run serially.
inline constexpr std::size_t kParallelThreshold = 1 << 16;

}  // namespace increlora::kernels
