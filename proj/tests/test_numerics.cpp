#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <vector>

#include "bbridge/numerics.hpp"

using namespace bbridge;

TEST(Philox, KnownAnswerZero) {
  const PhiloxBlock out = philox4x32_10({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (PhiloxBlock{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerAllOnes) {
  const PhiloxBlock out =
      philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (PhiloxBlock{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
  const PhiloxBlock out =
      philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out, (PhiloxBlock{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RngStream, SameSeedSameDraws) {
  RngStream a(0), b(0);
  EXPECT_EQ(gaussian(a, {2}), gaussian(b, {2}));
  EXPECT_EQ(a.counter(), b.counter());
}

TEST(RngStream, DerivedStreamsAreReproducibleAndDistinct) {
  const RngStream base(42, 3);
  RngStream c1 = base.derive(5), c2 = base.derive(5), c3 = base.derive(6);
  const double x1 = c1.normal(), x2 = c2.normal(), x3 = c3.normal();
  EXPECT_EQ(x1, x2);
  EXPECT_NE(x1, x3);
}

TEST(RngStream, EmptyShapeConsumesNothing) {
  RngStream rng(0);
  const Tensor t = gaussian(rng, {0});
  EXPECT_EQ(t.size(), 0);
  EXPECT_EQ(rng.counter(), 0u);
}

TEST(RngStream, CounterAdvancesPerPairOfNormals) {
  RngStream rng(1);
  gaussian(rng, {5});
  EXPECT_EQ(rng.counter(), 3u);
}

TEST(RngStream, UniformsInHalfOpenUnitInterval) {
  RngStream rng(9);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LE(u, 1.0);
  }
}

TEST(Gaussian, MillionDrawMoments) {
  RngStream rng(2024);
  const Tensor x = gaussian(rng, {1000000});
  RunningMoments m;
  for (double v : x.values()) m.add(v);
  EXPECT_NEAR(m.mean(), 0.0, 0.01);
  EXPECT_GE(m.variance(), 0.99);
  EXPECT_LE(m.variance(), 1.01);
}

TEST(Gaussian, ChiSquareAgainstNormalQuantiles) {
  const int bins = 20;
  const std::size_t draws = 100000;
  boost::math::normal_distribution<double> normal;
  std::vector<double> edges;
  for (int k = 1; k < bins; ++k) edges.push_back(boost::math::quantile(normal, static_cast<double>(k) / bins));
  std::vector<double> counts(bins, 0.0);
  RngStream rng(77);
  const Tensor x = gaussian(rng, {static_cast<Index>(draws)});
  for (double v : x.values()) {
    counts[static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin())] += 1.0;
  }
  const double expected = static_cast<double>(draws) / bins;
  double stat = 0;
  for (double c : counts) stat += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared_distribution<double> chi2(bins - 1);
  EXPECT_LT(stat, boost::math::quantile(chi2, 0.999));
}

TEST(SquaredNorm, Pythagorean) { EXPECT_EQ(squared_norm(Tensor::from({3.0, 4.0})), 25.0); }

TEST(SquaredNorm, EmptyIsZero) { EXPECT_EQ(squared_norm(Tensor({0})), 0.0); }

TEST(SquaredNorm, CompensatedOverMillionSmallTerms) {
  const Tensor x = Tensor::from_vector(Vector<double>::Constant(1000000, 1e-3));
  EXPECT_NEAR(squared_norm(x), 1.0, 1e-9);
}

TEST(CompensatedSum, RecoversCancelledTerms) {
  const Vector<double> v = (Vector<double>(4) << 1.0, 1e100, 1.0, -1e100).finished();
  EXPECT_EQ(compensated_sum(v), 2.0);
}

TEST(RunningMoments, MatchesTwoPassValues) {
  RunningMoments m;
  for (double v : {2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0}) m.add(v);
  EXPECT_DOUBLE_EQ(m.mean(), 5.0);
  EXPECT_DOUBLE_EQ(m.variance(), 32.0 / 7.0);
  EXPECT_EQ(m.count(), 8u);
}

TEST(Tensor, RejectsMismatchedData) {
  EXPECT_THROW(Tensor({3}, Vector<double>::Zero(2)), std::invalid_argument);
}

TEST(Tensor, ShapeAndFiniteness) {
  Tensor t({2, 3});
  EXPECT_EQ(t.size(), 6);
  EXPECT_TRUE(t.all_finite());
  t[4] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(t.all_finite());
  EXPECT_EQ(shape_string(t.shape()), "[2,3]");
}
