#include <gtest/gtest.h>

#include <vector>

#include "bbridge/schedules.hpp"
#include "bbridge/verify.hpp"

using namespace bbridge;

namespace {

std::vector<double> points(const Schedule& s) { return {s.points().begin(), s.points().end()}; }

}  // namespace

TEST(Uniform, FourSteps) { EXPECT_EQ(points(uniform_schedule(4)), (std::vector<double>{0, 0.25, 0.5, 0.75, 1})); }

TEST(Uniform, SingleStep) { EXPECT_EQ(points(uniform_schedule(1)), (std::vector<double>{0, 1})); }

TEST(Uniform, RejectsZeroSteps) { EXPECT_THROW(uniform_schedule(0), std::invalid_argument); }

TEST(Shifted, GammaOneIsUniform) {
  for (std::size_t n : {1u, 3u, 4u, 17u, 100u, 1000u}) {
    EXPECT_EQ(points(shifted_schedule(n, 1.0)), points(uniform_schedule(n))) << n;
  }
}

TEST(Shifted, GammaFiveFourSteps) {
  const Schedule s = shifted_schedule(4, 5.0);
  const std::vector<double> expected{0.0, 1.0 / 16.0, 1.0 / 6.0, 3.0 / 8.0, 1.0};
  ASSERT_EQ(s.steps(), 4u);
  for (std::size_t i = 0; i <= 4; ++i) EXPECT_NEAR(s[i], expected[i], 1e-15) << i;
}

TEST(Shifted, EndsAtOneExactly) {
  for (double gamma : {1.0, 1.7, 5.0, 100.0}) {
    for (std::size_t n : {1u, 2u, 9u, 10000u}) EXPECT_EQ(shifted_schedule(n, gamma)[n], 1.0);
  }
}

TEST(Shifted, StepsGrowForGammaAboveOne) {
  const Schedule s = shifted_schedule(64, 3.0);
  for (std::size_t k = 0; k + 1 < s.steps(); ++k) {
    EXPECT_GT(s.step_size(k), 0.0);
    EXPECT_LE(s.step_size(k), s.step_size(k + 1));
  }
  EXPECT_LT(s[1], 1.0 / 64.0);
}

TEST(Shifted, RejectsGammaBelowOne) { EXPECT_THROW(shifted_schedule(4, 0.5), std::domain_error); }

TEST(Shifted, VerifySuitePasses) {
  const VerifyReport r = verify_schedules(VerifyOptions{});
  for (const Check& c : r.checks) EXPECT_TRUE(c.passed) << c.name << " " << c.measured;
}
