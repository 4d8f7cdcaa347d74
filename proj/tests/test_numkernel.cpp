#include <cmath>
#include <numeric>

#include <gtest/gtest.h>
#include <omp.h>

#include "increlora/kernels.hpp"
#include "increlora/matrix.hpp"
#include "increlora/rng.hpp"

using namespace increlora;

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const DenseMatrix m{{1.5, -2.0}, {0.25, 7.0}};
  EXPECT_EQ(matmul(DenseMatrix::identity(2), m), m);
}

TEST(Matmul, HandExample) {
  const DenseMatrix a{{1, 2}, {3, 4}};
  const DenseMatrix b{{0}, {1}};
  EXPECT_EQ(matmul(a, b), (DenseMatrix{{2}, {4}}));
}

TEST(Matmul, DimensionMismatchNamesBothShapes) {
  const DenseMatrix a(2, 3);
  const DenseMatrix b(2, 2);
  try {
    matmul(a, b);
    FAIL() << "expected a dimension error";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("2x2"), std::string::npos) << msg;
  }
}

TEST(Matmul, AssociativeOnRandomTriples) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + rng.next_u64() % 6;
    const std::size_t k = 1 + rng.next_u64() % 6;
    const std::size_t l = 1 + rng.next_u64() % 6;
    const std::size_t n = 1 + rng.next_u64() % 6;
    const DenseMatrix a = gaussian_fill(rng, m, k, 1.0);
    const DenseMatrix b = gaussian_fill(rng, k, l, 1.0);
    const DenseMatrix c = gaussian_fill(rng, l, n, 1.0);
    const DenseMatrix left = matmul(matmul(a, b), c);
    const DenseMatrix right = matmul(a, matmul(b, c));
    const double scale = std::sqrt(frobenius_norm_sq(left));
    EXPECT_LE(std::sqrt(frobenius_norm_sq(subtract(left, right))), 1e-9 * scale);
  }
}

TEST(Matrix, RejectsEmptyShapes) {
  EXPECT_THROW(DenseMatrix(0, 3), std::invalid_argument);
  EXPECT_THROW(DenseMatrix(2, 0), std::invalid_argument);
  EXPECT_THROW(DenseMatrix(2, 2, std::vector<double>(3)), std::invalid_argument);
  EXPECT_THROW((DenseMatrix{{1, 2}, {3}}), std::invalid_argument);
}

TEST(FrobeniusNormSq, Examples) {
  EXPECT_EQ(frobenius_norm_sq(DenseMatrix(3, 4)), 0.0);
  EXPECT_EQ(frobenius_norm_sq(DenseMatrix::identity(3)), 3.0);
  EXPECT_EQ(frobenius_norm_sq(DenseMatrix{{1, -2}, {0, 3}}), 14.0);
}

TEST(FrobeniusNormSq, EqualsSumOfHadamardSquare) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const DenseMatrix m = gaussian_fill(rng, 1 + trial % 5, 1 + trial % 7, 2.0);
    const DenseMatrix sq = hadamard(m, m);
    const double sum = std::accumulate(sq.data().begin(), sq.data().end(), 0.0);
    EXPECT_NEAR(frobenius_norm_sq(m), sum, 1e-12 * sum);
  }
}

TEST(ElementwiseOps, StandardDefinitions) {
  const DenseMatrix a{{1, 2}, {3, 4}};
  const DenseMatrix b{{5, -1}, {0, 2}};
  EXPECT_EQ(add(a, b), (DenseMatrix{{6, 1}, {3, 6}}));
  EXPECT_EQ(subtract(a, b), (DenseMatrix{{-4, 3}, {3, 2}}));
  EXPECT_EQ(scale(a, -2), (DenseMatrix{{-2, -4}, {-6, -8}}));
  EXPECT_EQ(hadamard(a, b), (DenseMatrix{{5, -2}, {0, 8}}));
  EXPECT_EQ(transpose(DenseMatrix{{1, 2, 3}}), (DenseMatrix{{1}, {2}, {3}}));
  EXPECT_THROW(add(a, DenseMatrix(2, 3)), std::invalid_argument);
}

TEST(OuterProduct, ColumnTimesRow) {
  const std::vector<double> b{1, 0};
  const std::vector<double> a{3, 4};
  EXPECT_EQ(outer_product(b, a), (DenseMatrix{{3, 4}, {0, 0}}));
}

TEST(GaussianFill, DeterministicForSeedAndShape) {
  Rng r1(42, streams::kAdapter);
  Rng r2(42, streams::kAdapter);
  EXPECT_EQ(gaussian_fill(r1, 5, 3, 0.7), gaussian_fill(r2, 5, 3, 0.7));
  Rng r3(43, streams::kAdapter);
  Rng r4(42, streams::kAdapter);
  EXPECT_NE(gaussian_fill(r3, 5, 3, 0.7), gaussian_fill(r4, 5, 3, 0.7));
}

TEST(GaussianFill, RejectsNonPositiveStd) {
  Rng rng(1);
  EXPECT_THROW(gaussian_fill(rng, 2, 2, 0.0), std::invalid_argument);
  EXPECT_THROW(gaussian_fill(rng, 2, 2, -1.0), std::invalid_argument);
}

TEST(GaussianFill, MomentsOfAMillionDraws) {
  Rng rng(2024);
  const double std = 0.5;
  const DenseMatrix m = gaussian_fill(rng, 1000, 1000, std);
  double mean = 0.0;
  for (double v : m.data()) mean += v;
  mean /= static_cast<double>(m.size());
  double var = 0.0;
  for (double v : m.data()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(m.size() - 1);
  EXPECT_LE(std::abs(mean), 5 * std / 1e3);
  EXPECT_LE(std::abs(var - std * std), 0.02 * std * std);
}

TEST(Rng, DeriveIsAPureFunctionOfItsKey) {
  Rng a = Rng::derive(5, streams::kTrainData, 17);
  Rng b = Rng::derive(5, streams::kTrainData, 17);
  Rng c = Rng::derive(5, streams::kTrainData, 18);
  const auto x = a.next_u64();
  EXPECT_EQ(x, b.next_u64());
  EXPECT_NE(x, c.next_u64());
}

TEST(Rng, UniformStaysInsideOpenInterval) {
  Rng rng(3);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

// The parallel kernels must reproduce the serial reference bit for bit.
class KernelParity : public ::testing::TestWithParam<int> {};

TEST_P(KernelParity, ParallelMatchesSerialExactly) {
  const int threads = GetParam();
  const int saved = omp_get_max_threads();
  omp_set_num_threads(threads);
  Rng rng(99);
  for (std::size_t size : {3, 17, 96, 160}) {
    const DenseMatrix a = gaussian_fill(rng, size, size + 1, 1.0);
    const DenseMatrix b = gaussian_fill(rng, size + 1, size, 1.0);
    std::vector<double> serial(size * size);
    std::vector<double> parallel(size * size);
    kernels::matmul_serial(a.data(), b.data(), serial, size, size + 1, size);
    kernels::matmul_parallel(a.data(), b.data(), parallel, size, size + 1, size);
    EXPECT_EQ(serial, parallel);

    const DenseMatrix x = gaussian_fill(rng, size, size, 1.0);
    const DenseMatrix y = gaussian_fill(rng, size, size, 1.0);
    std::vector<double> s2(x.size());
    std::vector<double> p2(x.size());
    kernels::axpby_serial(x.data(), 0.3, y.data(), -1.7, s2);
    kernels::axpby_parallel(x.data(), 0.3, y.data(), -1.7, p2);
    EXPECT_EQ(s2, p2);
    kernels::hadamard_serial(x.data(), y.data(), s2);
    kernels::hadamard_parallel(x.data(), y.data(), p2);
    EXPECT_EQ(s2, p2);
  }
  omp_set_num_threads(saved);
}

INSTANTIATE_TEST_SUITE_P(Threads, KernelParity, ::testing::Values(1, 2, 4));
