#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tsinv/simulators.hpp"

namespace tsinv {

// Sum-of-trees regression y = sum_j h(x; T_j, M_j) + eps, eps ~ N(0, sigma^2),
// sampled by Bayesian backfitting MCMC. Priors follow the usual BART setup with
// the deterministic-simulator adjustments: leaf means mu ~ N(0, 1/(4 k^2 m)) on the
// transformed scale, and sigma^2 ~ nu*lambda / chi2_nu with lambda chosen so that
// P(sigma <= anchor_fraction * sd(y)) = quantile.

struct BartOptions {
  int trees = 200;
  int iterations = 2000;  // N
  int burn_in = 500;      // B
  int thin = 1;           // tau
  double k = 1.0;
  double nu = 3.0;
  double quantile = 0.90;
  double anchor_fraction = 0.20;
  double alpha = 0.95;  // tree depth prior alpha (1 + depth)^-beta
  double beta = 2.0;
  int cutpoints = 100;  // equally spaced per dimension, strictly inside (0,1)
  int min_leaf_size = 1;
  double p_grow = 0.25;
  double p_prune = 0.25;
  double p_change = 0.40;
  double p_swap = 0.10;
  std::uint64_t seed = 0;
};

/// y_transformed = (y - shift) / scale.
struct AffineTransform {
  double shift = 0.0;
  double scale = 1.0;
  double forward(double y) const { return (y - shift) / scale; }
  double inverse(double z) const { return shift + scale * z; }
};

struct BartHyper {
  double k = 1.0;
  double nu = 3.0;
  double quantile = 0.90;
  double lambda = 0.0;      // sigma^2 prior scale, transformed units
  double sigma_anchor = 0.0;  // anchor_fraction * sd(y), transformed units
  double mu_sd = 0.0;       // sqrt(1 / (4 k^2 m))
};

/// Flattened decision tree. Internal nodes send x to `left` when x[var] < threshold,
/// otherwise to `left + 1`; leaves carry the terminal mean in `value`.
struct TreeNode {
  std::int32_t var = -1;  // -1 marks a leaf
  std::int32_t left = -1;
  double value = 0.0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::int32_t leaf_of(const double* x) const {
    std::int32_t i = 0;
    while (nodes[static_cast<std::size_t>(i)].var >= 0) {
      const TreeNode& n = nodes[static_cast<std::size_t>(i)];
      i = n.left + static_cast<std::int32_t>(!(x[n.var] < n.value));
    }
    return i;
  }
  double evaluate(const double* x) const { return nodes[static_cast<std::size_t>(leaf_of(x))].value; }
  std::size_t leaf_count() const;
};

/// One retained posterior state. Root-only trees are folded into `offset`.
struct PosteriorDraw {
  double offset = 0.0;
  std::vector<DecisionTree> trees;
  std::vector<std::int32_t> slots;  // ensemble position j of each entry of `trees`
  double sigma = 0.0;  // transformed units

  double evaluate(const double* x) const {
    double s = offset;
    for (const auto& t : trees) s += t.evaluate(x);
    return s;
  }
};

struct TreeEnsembleFit {
  int dim = 0;
  int m = 0;
  BartOptions options;
  BartHyper hyper;
  AffineTransform transform;
  std::vector<PosteriorDraw> draws;  // K = (N - B) / tau
  double acceptance_rate = 0.0;
};

struct BartPrediction {
  double mean = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
  std::vector<double> draws;  // original y scale
};

/// Throws DomainError for n < 2, non-finite y, or inconsistent chain settings.
TreeEnsembleFit fit_bart(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const BartOptions& options = {});

BartPrediction bart_predict(const TreeEnsembleFit& fit, const Eigen::Ref<const Eigen::VectorXd>& x);
BartPrediction bart_predict(const TreeEnsembleFit& fit, const InputPoint& x);

/// K x n matrix of per-draw predictions (original scale) at the rows of `points`.
Eigen::MatrixXd bart_draw_matrix(const TreeEnsembleFit& fit, const Eigen::MatrixXd& points);

/// Summary of a draw vector: arithmetic mean and linearly interpolated 5%/95% quantiles.
BartPrediction summarize_draws(std::vector<double> draws);

/// Linear-interpolation sample quantile (R type 7) of unsorted data.
double sample_quantile(std::vector<double> values, double prob);

/// lambda with P(sigma <= anchor) = quantile under sigma^2 ~ nu*lambda/chi2_nu.
double solve_sigma_prior_scale(double nu, double anchor, double quantile);

/// Chain settings and per-draw sigma (original units).
nlohmann::json to_json(const TreeEnsembleFit& fit);

}  // namespace tsinv
