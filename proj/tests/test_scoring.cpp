#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "increlora/rng.hpp"
#include "increlora/scoring.hpp"

using namespace increlora;

TEST(RawScore, Examples) {
  EXPECT_EQ(raw_score(DenseMatrix{{1, 2}}, DenseMatrix(1, 2)), 0.0);
  EXPECT_DOUBLE_EQ(raw_score(DenseMatrix{{1, -2}, {0, 3}}, DenseMatrix{{2, 1}, {4, -1}}), 1.75);
  EXPECT_THROW(raw_score(DenseMatrix(2, 2), DenseMatrix(2, 3)), std::invalid_argument);
}

TEST(RawScore, Homogeneous) {
  Rng rng(5);
  const DenseMatrix d = gaussian_fill(rng, 3, 4, 1.0);
  const DenseMatrix g = gaussian_fill(rng, 3, 4, 1.0);
  const double base = raw_score(d, g);
  EXPECT_NEAR(raw_score(scale(d, -3.0), scale(g, 0.5)), 1.5 * base, 1e-14 * base);
}

TEST(ImportanceState, ColdStartWorkedValue) {
  ImportanceState s(1, 0.85, 0.85);
  s.update_all(std::vector<double>{1.0});
  EXPECT_NEAR(s.sensitivity()[0], 0.15, 1e-15);
  EXPECT_NEAR(s.uncertainty()[0], 0.1275, 1e-15);
  EXPECT_NEAR(s.scores()[0], 0.019125, 1e-15);
  EXPECT_EQ(s.step(), 1u);
}

TEST(ImportanceState, ConstantStreamLosesUncertainty) {
  ImportanceState s(1, 0.85, 0.85);
  for (int t = 0; t < 10000; ++t) s.update_all(std::vector<double>{2.5});
  EXPECT_NEAR(s.sensitivity()[0], 2.5, 1e-12);
  EXPECT_LT(s.uncertainty()[0], 1e-12);
  EXPECT_LT(s.scores()[0], 1e-11);
}

TEST(ImportanceState, ZeroStreamStaysZero) {
  ImportanceState s(3, 0.85, 0.85);
  for (int t = 0; t < 100; ++t) s.update_all(std::vector<double>(3, 0.0));
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(s.sensitivity()[k], 0.0);
    EXPECT_EQ(s.uncertainty()[k], 0.0);
    EXPECT_EQ(s.scores()[k], 0.0);
  }
}

TEST(ImportanceState, RejectsNegativeScoresAndBadBetas) {
  ImportanceState s(2, 0.85, 0.85);
  EXPECT_THROW(s.update(0, -1e-9), std::invalid_argument);
  EXPECT_THROW(s.update(2, 1.0), std::out_of_range);
  EXPECT_THROW(ImportanceState(2, 1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(ImportanceState(2, 0.5, 0.0), std::invalid_argument);
}

TEST(ImportanceState, StaysNonNegative) {
  Rng rng(8);
  ImportanceState s(4, 0.7, 0.95);
  std::vector<double> raw(4);
  for (int t = 0; t < 1000; ++t) {
    for (double& r : raw) r = rng.uniform() * (rng.uniform() < 0.1 ? 100.0 : 1.0);
    s.update_all(raw);
    for (std::size_t k = 0; k < 4; ++k) {
      ASSERT_GE(s.sensitivity()[k], 0.0);
      ASSERT_GE(s.uncertainty()[k], 0.0);
      ASSERT_GE(s.scores()[k], 0.0);
    }
  }
}

TEST(ImportanceState, SnapshotRestoreRoundTripsExactly) {
  Rng rng(9);
  ImportanceState s(3, 0.85, 0.85);
  for (int t = 0; t < 37; ++t) s.update_all(std::vector<double>{rng.uniform(), rng.uniform(), rng.uniform()});
  const auto snap = s.snapshot();
  ImportanceState r = ImportanceState::restore(snap);
  EXPECT_EQ(r.snapshot(), snap);
  const std::vector<double> next{0.3, 0.1, 0.7};
  s.update_all(next);
  r.update_all(next);
  EXPECT_EQ(r.snapshot(), s.snapshot());
}

TEST(TopH, Examples) {
  EXPECT_EQ(top_h(std::vector<double>{0.3, 0.1, 0.3, 0.2}, 2), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(top_h(std::vector<double>{0.5, 0.9, 0.1}, 3), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(top_h(std::vector<double>(5, 1.0), 1), (std::vector<std::size_t>{0}));
  EXPECT_THROW(top_h(std::vector<double>{1, 2}, 0), std::invalid_argument);
  EXPECT_THROW(top_h(std::vector<double>{1, 2}, 3), std::invalid_argument);
}

TEST(TopH, NestedInH) {
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(8);
    // Coarse values so ties are common.
    for (double& v : s) v = static_cast<double>(rng.next_u64() % 4);
    for (std::size_t h = 1; h < s.size(); ++h) {
      const auto small = top_h(s, h);
      const auto big = top_h(s, h + 1);
      ASSERT_TRUE(std::includes(big.begin(), big.end(), small.begin(), small.end()));
    }
  }
}
