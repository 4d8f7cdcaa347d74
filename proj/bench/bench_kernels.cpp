// Serial reference kernels against their OpenMP counterparts.

#include <cstddef>
#include <vector>

#include <benchmark/benchmark.h>

#include "increlora/kernels.hpp"
#include "increlora/rng.hpp"

namespace {

using namespace increlora;

std::vector<double> random_vector(std::size_t size, std::uint64_t stream) {
  Rng rng(42, stream);
  std::vector<double> v(size);
  for (double& x : v) x = rng.normal();
  return v;
}

template <auto Kernel>
void matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vector(n * n, 1);
  const auto b = random_vector(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    Kernel(a, b, c, n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n * n));
}

template <auto Kernel>
void axpby(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_vector(n, 1);
  const auto y = random_vector(n, 2);
  std::vector<double> out(n);
  for (auto _ : state) {
    Kernel(x, 0.5, y, -1.5, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(state.iterations() * static_cast<long>(3 * n * sizeof(double)));
}

template <auto Kernel>
void hadamard(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_vector(n, 1);
  const auto y = random_vector(n, 2);
  std::vector<double> out(n);
  for (auto _ : state) {
    Kernel(x, y, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(state.iterations() * static_cast<long>(3 * n * sizeof(double)));
}

}  // namespace

BENCHMARK(matmul<kernels::matmul_serial>)->Name("matmul/serial")->RangeMultiplier(2)->Range(32, 512)->UseRealTime();
BENCHMARK(matmul<kernels::matmul_parallel>)->Name("matmul/parallel")->RangeMultiplier(2)->Range(32, 512)->UseRealTime();
BENCHMARK(axpby<kernels::axpby_serial>)->Name("axpby/serial")->Range(1 << 12, 1 << 22)->UseRealTime();
BENCHMARK(axpby<kernels::axpby_parallel>)->Name("axpby/parallel")->Range(1 << 12, 1 << 22)->UseRealTime();
BENCHMARK(hadamard<kernels::hadamard_serial>)->Name("hadamard/serial")->Range(1 << 12, 1 << 22)->UseRealTime();
BENCHMARK(hadamard<kernels::hadamard_parallel>)->Name("hadamard/parallel")->Range(1 << 12, 1 << 22)->UseRealTime();

BENCHMARK_MAIN();
