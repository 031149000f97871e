#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

#include "tla/matrix.hpp"
#include "tla/prior.hpp"
#include "tla/random.hpp"

namespace tla {
namespace {

TEST(Prior, RejectsInvalidEntries) {
  EXPECT_THROW(Prior({0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(Prior({-0.1, 1.1}), std::invalid_argument);
  EXPECT_THROW(Prior({std::nan(""), 1.0}), std::invalid_argument);
  EXPECT_THROW(Prior(std::vector<double>{}), std::invalid_argument);
  EXPECT_NO_THROW(Prior({0.25, 0.75}));
}

TEST(Prior, Constructors) {
  EXPECT_EQ(Prior::uniform(4).values()[3], 0.25);
  const Prior h = Prior::one_hot(3, 2);
  EXPECT_EQ(h[2], 1.0);
  EXPECT_EQ(h[0], 0.0);
  const std::vector<std::size_t> counts{90, 10};
  const Prior c = Prior::from_counts(counts);
  EXPECT_DOUBLE_EQ(c[0], 0.9);
  EXPECT_DOUBLE_EQ(c[1], 0.1);
  EXPECT_DOUBLE_EQ(Prior::normalized({2.0, 6.0})[1], 0.75);
  EXPECT_THROW(Prior::normalized({0.0, 0.0}), std::invalid_argument);
}

TEST(Prior, ArgmaxPrefersSmallestIndex) {
  EXPECT_EQ(Prior({0.4, 0.4, 0.2}).argmax(), 0u);
  EXPECT_EQ(Prior({0.2, 0.4, 0.4}).argmax(), 1u);
  EXPECT_FALSE(Prior({0.0, 1.0}).strictly_positive());
}

TEST(Matrix, SliceGatherStack) {
  Matrix m(3, 2, std::vector<double>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(m.slice_rows(1, 2), Matrix(2, 2, std::vector<double>{3, 4, 5, 6}));
  const std::vector<std::size_t> idx{2, 0};
  EXPECT_EQ(m.gather_rows(idx), Matrix(2, 2, std::vector<double>{5, 6, 1, 2}));
  EXPECT_EQ(vstack(m.slice_rows(0, 1), m.slice_rows(1, 2)), m);
  Matrix grow(0, 2);
  const std::vector<double> row{7, 8};
  grow.append_row(row);
  EXPECT_EQ(grow.rows(), 1u);
  EXPECT_THROW(vstack(m, Matrix(1, 3)), std::invalid_argument);
}

TEST(Matrix, FiniteCheck) {
  Matrix m(1, 2);
  EXPECT_TRUE(m.all_finite());
  m(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(m.all_finite());
}

TEST(Random, StreamsAreDistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(42, s));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 1));
}

TEST(Random, UnitUniformRange) {
  Rng rng = make_rng(7, 0);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = unit_uniform(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  // Mean of 1e5 uniforms has standard error ~9.1e-4.
  EXPECT_NEAR(sum / 100000.0, 0.5, 4e-3);
}

}  // namespace
}  // namespace tla
