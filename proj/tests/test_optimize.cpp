#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "tsinv/optimize.hpp"

using namespace tsinv;

TEST(NelderMead, InteriorQuadratic) {
  auto f = [](const Eigen::VectorXd& x) { return std::pow(x[0] - 0.3, 2) + 2 * std::pow(x[1] + 0.2, 2); };
  NelderMeadOptions o;
  o.max_evaluations = 2000;
  const MinimizeResult r = nelder_mead_box(f, Eigen::Vector2d(0.9, 0.9), Eigen::Vector2d(-1, -1),
                                           Eigen::Vector2d(1, 1), o);
  EXPECT_NEAR(r.x[0], 0.3, 1e-4);
  EXPECT_NEAR(r.x[1], -0.2, 1e-4);
  EXPECT_LE(r.evaluations, 2000);
}

TEST(NelderMead, OptimumOnTheBoundary) {
  auto f = [](const Eigen::VectorXd& x) { return -x[0] + std::pow(x[1] - 0.5, 2); };
  const MinimizeResult r =
      nelder_mead_box(f, Eigen::Vector2d(0.2, 0.2), Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1));
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
  EXPECT_NEAR(r.x[1], 0.5, 1e-3);
  EXPECT_LE(r.x[0], 1.0);
}

TEST(NelderMead, NonFiniteValuesAreAvoided) {
  auto f = [](const Eigen::VectorXd& x) {
    return x[0] > 0.7 ? std::numeric_limits<double>::quiet_NaN() : std::pow(x[0] - 0.6, 2);
  };
  const MinimizeResult r =
      nelder_mead_box(f, Eigen::VectorXd::Constant(1, 0.1), Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
  EXPECT_NEAR(r.x[0], 0.6, 1e-4);
  EXPECT_TRUE(std::isfinite(r.value));
}

TEST(NelderMead, RespectsEvaluationBudget) {
  int calls = 0;
  auto f = [&](const Eigen::VectorXd& x) {
    ++calls;
    return std::sin(20 * x[0]) + std::cos(13 * x[1]);
  };
  NelderMeadOptions o;
  o.max_evaluations = 37;
  const MinimizeResult r =
      nelder_mead_box(f, Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1), o);
  EXPECT_LE(calls, 37);
  EXPECT_EQ(r.evaluations, calls);
}
