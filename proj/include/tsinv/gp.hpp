#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tsinv/simulators.hpp"

namespace tsinv {

// Stationary Gaussian process y(x) = mu + Z(x), Cov(Z(xi), Z(xj)) = sigma2 * R(xi, xj),
// with power-exponential correlation R = exp(-sum_k theta_k |xik - xjk|^p_k).
// Hyperparameters are fitted by profile maximum likelihood: mu and sigma2 have closed
// forms given theta, so only theta is searched numerically.

struct GpOptions {
  std::vector<double> p;  // smoothness per dimension; empty means 2 (Gaussian) everywhere
  int starts = 20;
  double theta_min = 1e-3;
  double theta_max = 1e3;
  double nugget_start = 1e-8;
  double nugget_max = 1e-4;
  std::uint64_t seed = 0;
};

struct GpFit {
  double mu = 0.0;
  double sigma2 = 0.0;
  Eigen::VectorXd theta;
  Eigen::VectorXd p;
  double nugget = 0.0;
  Eigen::MatrixXd chol;   // lower factor L with L L^T = R + nugget I
  Eigen::MatrixXd X;      // training inputs, one row per point
  Eigen::VectorXd y;
  Eigen::VectorXd alpha;  // (R + nugget I)^{-1} (y - mu 1)
  double neg_log_likelihood = 0.0;
};

struct GpPrediction {
  double yhat = 0.0;
  double s2 = 0.0;
};

/// Throws DomainError for negative theta or p outside (0, 2].
Eigen::MatrixXd corr_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& p);

/// Correlations between x and every row of X.
Eigen::VectorXd corr_vector(const Eigen::MatrixXd& X, const Eigen::Ref<const Eigen::VectorXd>& x,
                            const Eigen::VectorXd& theta, const Eigen::VectorXd& p);

/// n ln(sigma2_hat) + ln det(R + nugget I) at fixed theta, via Cholesky.
/// Throws FactorizationError if R + nugget I is not numerically positive definite.
double neg_profile_loglik(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& y, const Eigen::VectorXd& p, double nugget);

/// Builds the fit at a fixed theta. The nugget starts at nugget_start and grows by 10x
/// on factorization failure up to nugget_max; FactorizationError past that.
GpFit fit_gp_fixed(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                   const Eigen::VectorXd& p, double nugget_start = 1e-8, double nugget_max = 1e-4);

/// Profile-likelihood fit: multistart Nelder-Mead over log10(theta) in
/// [log10 theta_min, log10 theta_max]^d. Deterministic given options.seed.
GpFit fit_gp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpOptions& options = {});

/// BLUP mean and mean squared error; s2 is clamped at zero.
GpPrediction gp_predict(const GpFit& fit, const Eigen::Ref<const Eigen::VectorXd>& x);
GpPrediction gp_predict(const GpFit& fit, const InputPoint& x);

/// Audit record: mu, sigma2, theta, p, nugget, design and responses.
nlohmann::json to_json(const GpFit& fit);

}  // namespace tsinv
