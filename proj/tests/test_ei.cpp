#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "tsinv/design.hpp"
#include "tsinv/ei.hpp"
#include "tsinv/errors.hpp"

using namespace tsinv;

namespace {

struct McEstimate {
  double mean;
  double se;
};

McEstimate mc_improvement(double yhat, double s, double ymin, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(yhat, s);
  double sum = 0.0;
  double sum2 = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double v = std::max(ymin - n(rng), 0.0);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / samples;
  const double var = (sum2 - samples * mean * mean) / (samples - 1);
  return {mean, std::sqrt(var / samples)};
}

// Surrogate whose (ei, yhat) is an explicit function of x.
class TableSurrogate final : public FittedSurrogate {
 public:
  explicit TableSurrogate(std::function<AcquisitionValue(const Eigen::VectorXd&)> f, Eigen::Index d = 1)
      : f_(std::move(f)), d_(d) {}
  Eigen::Index dim() const override { return d_; }
  std::vector<AcquisitionValue> evaluate(const Eigen::MatrixXd& points, double) const override {
    std::vector<AcquisitionValue> out;
    for (Eigen::Index i = 0; i < points.rows(); ++i) out.push_back(f_(points.row(i).transpose()));
    return out;
  }

 private:
  std::function<AcquisitionValue(const Eigen::VectorXd&)> f_;
  Eigen::Index d_;
};

double truth(double x) { return std::sin(8 * x) + 0.5 * x; }

}  // namespace

TEST(ExpectedImprovement, AtTheCurrentMinimum) {
  EXPECT_NEAR(expected_improvement(0.7, 1.0, 0.7), 0.3989422804014327, 1e-15);
}

TEST(ExpectedImprovement, DeterministicLimit) {
  EXPECT_EQ(expected_improvement(-1.0, 0.0, 0.0), 1.0);
  EXPECT_EQ(expected_improvement(2.0, 0.0, 0.0), 0.0);
}

TEST(ExpectedImprovement, MonteCarloOracle) {
  const double ei = expected_improvement(0.5, 0.3, 0.0);
  const McEstimate mc = mc_improvement(0.5, 0.3, 0.0, 1000000, 1);
  EXPECT_LE(std::abs(ei - mc.mean), 3 * mc.se) << ei << " vs " << mc.mean;
}

TEST(ExpectedImprovement, NonnegativeFarInTheTail) {
  for (double gain : {-50.0, -10.0, -1e-3, 0.0, 1e-3, 10.0})
    for (double s : {1e-8, 1e-3, 1.0, 100.0}) EXPECT_GE(expected_improvement(-gain, s, 0.0), 0.0);
  EXPECT_THROW(expected_improvement(0.0, -1.0, 0.0), DomainError);
}

TEST(ExpectedImprovement, IncreasesWithGainAndSpread) {
  double prev = 0.0;
  for (double gain = -2.0; gain <= 2.0; gain += 0.1) {
    const double v = expected_improvement(-gain, 0.5, 0.0);
    EXPECT_GT(v, prev);
    prev = v;
  }
  EXPECT_LT(expected_improvement(0.0, 0.5, 0.0), expected_improvement(0.0, 0.6, 0.0));
}

TEST(EiFromDraws, TrivialCases) {
  const std::vector<double> flat(10, 2.0);
  EXPECT_EQ(ei_from_draws(flat, 2.0), 0.0);
  const std::vector<double> two{1.0, 3.0};
  EXPECT_EQ(ei_from_draws(two, 2.0), 0.5);
  EXPECT_THROW(ei_from_draws(std::vector<double>{}, 0.0), DomainError);
}

TEST(EiFromDraws, ZeroIffEveryDrawAtOrAboveMinimum) {
  std::vector<double> d{0.1, 0.5, 0.2};
  EXPECT_EQ(ei_from_draws(d, 0.1), 0.0);
  EXPECT_GT(ei_from_draws(d, 0.1000001), 0.0);
}

TEST(EiFromDraws, ConsistentWithClosedForm) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(-0.2, 0.5);
  std::vector<double> draws(10000);
  for (auto& v : draws) v = n(rng);
  double sum2 = 0.0;
  const double est = ei_from_draws(draws, 0.0);
  for (double v : draws) sum2 += std::pow(std::max(-v, 0.0) - est, 2);
  const double se = std::sqrt(sum2 / (draws.size() - 1) / draws.size());
  EXPECT_LE(std::abs(est - expected_improvement(-0.2, 0.5, 0.0)), 3 * se);
}

TEST(Argmax, SingleCandidate) {
  const TableSurrogate s([](const Eigen::VectorXd& x) { return AcquisitionValue{x[0], 0.0}; });
  Eigen::MatrixXd c(1, 1);
  c << 0.42;
  const ArgmaxResult r = argmax_ei_over(s, 0.0, c);
  EXPECT_EQ(r.x[0], 0.42);
  EXPECT_EQ(r.ei, 0.42);
  ArgmaxOptions o;
  o.candidate_count = 1;
  o.multistart_count = 0;
  EXPECT_NO_THROW(argmax_ei(s, 0.0, o));
}

TEST(Argmax, ZeroEiFallsBackToSmallestPrediction) {
  const TableSurrogate s([](const Eigen::VectorXd& x) { return AcquisitionValue{0.0, std::abs(x[0] - 0.63)}; });
  Eigen::MatrixXd c(5, 1);
  c << 0.1, 0.9, 0.6, 0.65, 0.3;
  EXPECT_EQ(argmax_ei_over(s, 0.0, c).x[0], 0.65);
}

TEST(Argmax, FullTieGoesToLexicographicallySmallestPoint) {
  const TableSurrogate s([](const Eigen::VectorXd&) { return AcquisitionValue{0.25, 1.0}; }, 2);
  Eigen::MatrixXd c(4, 2);
  c << 0.5, 0.1, 0.2, 0.9, 0.2, 0.3, 0.7, 0.0;
  const ArgmaxResult r = argmax_ei_over(s, 0.0, c);
  EXPECT_EQ(r.x[0], 0.2);
  EXPECT_EQ(r.x[1], 0.3);
}

TEST(Argmax, SkipsDuplicatesOfExistingPoints) {
  const TableSurrogate s([](const Eigen::VectorXd& x) { return AcquisitionValue{x[0], 0.0}; });
  Eigen::MatrixXd c(3, 1);
  c << 0.9, 0.5, 0.1;
  Eigen::MatrixXd avoid(1, 1);
  avoid << 0.9 + 5e-10;
  EXPECT_EQ(argmax_ei_over(s, 0.0, c, &avoid).x[0], 0.5);
  avoid << 0.9 + 5e-9;
  EXPECT_EQ(argmax_ei_over(s, 0.0, c, &avoid).x[0], 0.9);
  // Nothing else available: the duplicate is returned.
  avoid.resize(3, 1);
  avoid << 0.9, 0.5, 0.1;
  EXPECT_EQ(argmax_ei_over(s, 0.0, c, &avoid).x[0], 0.9);
}

TEST(Argmax, GpBeatsDenseGridOracle) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const Design D = lhd(5, 1, seed);
    Eigen::VectorXd y(5);
    for (int i = 0; i < 5; ++i) y[i] = truth(D.points(i, 0));
    GpOptions go;
    go.seed = seed;
    const GpSurrogate s(fit_gp(D.points, y, go));
    const double ymin = y.minCoeff();
    double grid_best = 0.0;
    for (int j = 0; j < 10000; ++j) {
      const GpPrediction p = gp_predict(s.fit(), Eigen::VectorXd::Constant(1, j / 9999.0));
      grid_best = std::max(grid_best, expected_improvement(p.yhat, std::sqrt(p.s2), ymin));
    }
    ArgmaxOptions o;
    o.seed = seed;
    const ArgmaxResult r = argmax_ei(s, ymin, o, &D.points);
    EXPECT_GE(r.ei, grid_best - 1e-6) << "seed " << seed;
    const GpPrediction at = gp_predict(s.fit(), r.x);
    EXPECT_NEAR(r.ei, expected_improvement(at.yhat, std::sqrt(at.s2), ymin), 1e-15);
  }
}

TEST(Argmax, BartUsesCandidatesOnly) {
  const Design D = lhd(8, 1, 6);
  Eigen::VectorXd y(8);
  for (int i = 0; i < 8; ++i) y[i] = truth(D.points(i, 0));
  BartOptions bo;
  bo.trees = 20;
  bo.iterations = 200;
  bo.burn_in = 100;
  const BartSurrogate s(fit_bart(D.points, y, bo));
  EXPECT_FALSE(s.supports_local_search());
  ArgmaxOptions o;
  o.candidate_count = 50;
  o.seed = 9;
  const ArgmaxResult r = argmax_ei(s, y.minCoeff(), o);
  const Design cands = lhd(50, 1, 9, {LhdVariant::random, 1, false});
  bool found = false;
  for (Eigen::Index i = 0; i < 50; ++i) found |= cands.points(i, 0) == r.x[0];
  EXPECT_TRUE(found);
  const auto all = s.evaluate(cands.points, y.minCoeff());
  for (const auto& v : all) {
    EXPECT_GE(v.ei, 0.0);
    EXPECT_LE(v.ei, r.ei);
  }
}

TEST(Argmax, EiNonnegativeOnGpCandidates) {
  const Design D = lhd(6, 2, 7);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) y[i] = truth(D.points(i, 0)) * D.points(i, 1);
  const GpSurrogate s(fit_gp(D.points, y));
  const Design cands = lhd(500, 2, 8);
  for (const auto& v : s.evaluate(cands.points, y.minCoeff())) EXPECT_GE(v.ei, 0.0);
}
