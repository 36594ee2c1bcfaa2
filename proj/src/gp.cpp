#include "tsinv/gp.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "tsinv/design.hpp"
#include "tsinv/errors.hpp"
#include "tsinv/optimize.hpp"

namespace tsinv {

namespace {

void check_corr_params(const Eigen::VectorXd& theta, const Eigen::VectorXd& p, Eigen::Index d) {
  if (theta.size() != d || p.size() != d)
    throw DomainError("correlation parameters do not match the input dimension");
  for (Eigen::Index k = 0; k < d; ++k) {
    if (!(theta[k] >= 0.0) || !std::isfinite(theta[k]))
      throw DomainError("correlation length theta must be nonnegative");
    if (!(p[k] > 0.0 && p[k] <= 2.0)) throw DomainError("smoothness p must lie in (0, 2]");
  }
}

inline double power_term(double diff, double p) {
  const double a = std::abs(diff);
  return p == 2.0 ? a * a : std::pow(a, p);
}

double sample_variance(const Eigen::VectorXd& y) {
  if (y.size() < 2) return 0.0;
  const double mean = y.mean();
  return (y.array() - mean).square().sum() / static_cast<double>(y.size() - 1);
}

struct Factored {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double nugget = 0.0;
};

Factored factor_with_nugget(const Eigen::MatrixXd& R, double nugget_start, double nugget_max) {
  const Eigen::Index n = R.rows();
  for (double nugget = nugget_start; nugget <= nugget_max * (1.0 + 1e-12); nugget *= 10.0) {
    Factored f;
    f.nugget = nugget;
    f.llt.compute(R + nugget * Eigen::MatrixXd::Identity(n, n));
    if (f.llt.info() == Eigen::Success && f.llt.matrixLLT().diagonal().minCoeff() > 0.0) return f;
    if (nugget_start <= 0.0) break;
  }
  throw FactorizationError("correlation matrix is not positive definite up to nugget " +
                           std::to_string(nugget_max));
}

struct Profile {
  double mu = 0.0;
  double sigma2 = 0.0;
  Eigen::VectorXd alpha;
  double objective = 0.0;
};

Profile profile(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd r_inv_one = llt.solve(ones);
  const Eigen::VectorXd r_inv_y = llt.solve(y);
  Profile out;
  out.mu = ones.dot(r_inv_y) / ones.dot(r_inv_one);
  const Eigen::VectorXd resid = y - out.mu * ones;
  out.alpha = llt.solve(resid);
  const double var = sample_variance(y);
  const double floor = 1e-12 * (var > 0.0 ? var : 1.0);
  out.sigma2 = std::max(resid.dot(out.alpha) / static_cast<double>(n), floor);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  out.objective = static_cast<double>(n) * std::log(out.sigma2) + log_det;
  return out;
}

void check_training_data(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() < 2) throw DomainError("GP fit needs at least two points");
  if (X.rows() != y.size()) throw DomainError("design and response sizes differ");
  if (!y.allFinite()) throw DomainError("responses must be finite");
}

Eigen::VectorXd resolve_p(const std::vector<double>& p, Eigen::Index d) {
  if (p.empty()) return Eigen::VectorXd::Constant(d, 2.0);
  if (static_cast<Eigen::Index>(p.size()) != d) throw DomainError("p has the wrong dimension");
  return Eigen::Map<const Eigen::VectorXd>(p.data(), d);
}

}  // namespace

Eigen::MatrixXd corr_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& p) {
  check_corr_params(theta, p, X.cols());
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd R(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    R(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < X.cols(); ++k) s += theta[k] * power_term(X(i, k) - X(j, k), p[k]);
      R(i, j) = R(j, i) = std::exp(-s);
    }
  }
  return R;
}

Eigen::VectorXd corr_vector(const Eigen::MatrixXd& X, const Eigen::Ref<const Eigen::VectorXd>& x,
                            const Eigen::VectorXd& theta, const Eigen::VectorXd& p) {
  Eigen::VectorXd r(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < X.cols(); ++k) s += theta[k] * power_term(x[k] - X(i, k), p[k]);
    r[i] = std::exp(-s);
  }
  return r;
}

double neg_profile_loglik(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& y, const Eigen::VectorXd& p, double nugget) {
  check_training_data(X, y);
  const Eigen::MatrixXd R = corr_matrix(X, theta, p);
  const Factored f = factor_with_nugget(R, nugget, nugget);
  return profile(f.llt, y).objective;
}

GpFit fit_gp_fixed(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                   const Eigen::VectorXd& p, double nugget_start, double nugget_max) {
  check_training_data(X, y);
  const Eigen::MatrixXd R = corr_matrix(X, theta, p);
  Factored f = factor_with_nugget(R, nugget_start, nugget_max);
  Profile prof = profile(f.llt, y);
  GpFit fit;
  fit.mu = prof.mu;
  fit.sigma2 = prof.sigma2;
  fit.theta = theta;
  fit.p = p;
  fit.nugget = f.nugget;
  fit.chol = f.llt.matrixL();
  fit.X = X;
  fit.y = y;
  fit.alpha = std::move(prof.alpha);
  fit.neg_log_likelihood = prof.objective;
  return fit;
}

GpFit fit_gp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpOptions& options) {
  check_training_data(X, y);
  const Eigen::Index d = X.cols();
  const Eigen::VectorXd p = resolve_p(options.p, d);
  if (!(options.theta_min > 0.0 && options.theta_max >= options.theta_min))
    throw DomainError("invalid theta search box");

  const Eigen::VectorXd lower = Eigen::VectorXd::Constant(d, std::log10(options.theta_min));
  const Eigen::VectorXd upper = Eigen::VectorXd::Constant(d, std::log10(options.theta_max));

  auto objective = [&](const Eigen::VectorXd& log_theta) {
    const Eigen::VectorXd theta = log_theta.unaryExpr([](double u) { return std::pow(10.0, u); });
    try {
      const Eigen::MatrixXd R = corr_matrix(X, theta, p);
      const Factored f = factor_with_nugget(R, options.nugget_start, options.nugget_max);
      return profile(f.llt, y).objective;
    } catch (const FactorizationError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const int starts = std::max(1, options.starts);
  const Design start_design =
      lhd(starts, static_cast<int>(d), options.seed, {LhdVariant::random, 1, false});
  NelderMeadOptions nm;
  nm.initial_step = 0.1;
  nm.max_evaluations = 150 * static_cast<int>(d) + 100;
  nm.f_tolerance = 1e-9;
  nm.x_tolerance = 1e-6;

  Eigen::VectorXd best_x;
  double best_value = std::numeric_limits<double>::infinity();
  for (int s = 0; s < starts; ++s) {
    const Eigen::VectorXd start =
        lower.array() + start_design.points.row(s).transpose().array() * (upper - lower).array();
    const MinimizeResult r = nelder_mead_box(objective, start, lower, upper, nm);
    if (r.value < best_value) {
      best_value = r.value;
      best_x = r.x;
    }
  }
  if (!std::isfinite(best_value))
    throw FactorizationError("GP likelihood was not finite at any start");

  const Eigen::VectorXd theta = best_x.unaryExpr([](double u) { return std::pow(10.0, u); });
  return fit_gp_fixed(X, y, theta, p, options.nugget_start, options.nugget_max);
}

GpPrediction gp_predict(const GpFit& fit, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::VectorXd r = corr_vector(fit.X, x, fit.theta, fit.p);
  GpPrediction out;
  out.yhat = fit.mu + r.dot(fit.alpha);
  const Eigen::VectorXd v = fit.chol.triangularView<Eigen::Lower>().solve(r);
  out.s2 = std::max(0.0, fit.sigma2 * (1.0 - v.squaredNorm()));
  return out;
}

GpPrediction gp_predict(const GpFit& fit, const InputPoint& x) {
  const Eigen::Map<const Eigen::VectorXd> v(x.coords().data(), static_cast<Eigen::Index>(x.dim()));
  if (v.size() != fit.X.cols()) throw DomainError("prediction point has the wrong dimension");
  return gp_predict(fit, Eigen::VectorXd(v));
}

nlohmann::json to_json(const GpFit& fit) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json design = nlohmann::json::array();
  for (Eigen::Index i = 0; i < fit.X.rows(); ++i) design.push_back(vec(fit.X.row(i).transpose()));
  return {{"mu", fit.mu},         {"sigma2", fit.sigma2}, {"theta", vec(fit.theta)},
          {"p", vec(fit.p)},      {"nugget", fit.nugget}, {"design", design},
          {"responses", vec(fit.y)}, {"neg_log_likelihood", fit.neg_log_likelihood}};
}

}  // namespace tsinv
