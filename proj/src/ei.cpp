#include "tsinv/ei.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tsinv/design.hpp"
#include "tsinv/errors.hpp"
#include "tsinv/optimize.hpp"

namespace tsinv {

double expected_improvement(double yhat, double s, double ymin) {
  if (!(s >= 0.0)) throw DomainError("predictive standard deviation must be nonnegative");
  const double gain = ymin - yhat;
  if (s == 0.0) return std::max(gain, 0.0);
  const double u = gain / s;
  const double cdf = 0.5 * std::erfc(-u / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, gain * cdf + s * pdf);
}

double ei_from_draws(std::span<const double> draws, double ymin) {
  if (draws.empty()) throw DomainError("EI needs at least one posterior draw");
  double sum = 0.0;
  for (double v : draws) sum += std::max(ymin - v, 0.0);
  return sum / static_cast<double>(draws.size());
}

std::vector<AcquisitionValue> GpSurrogate::evaluate(const Eigen::MatrixXd& points, double ymin) const {
  std::vector<AcquisitionValue> out(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const GpPrediction p = gp_predict(fit_, points.row(i).transpose());
    out[static_cast<std::size_t>(i)] = {expected_improvement(p.yhat, std::sqrt(p.s2), ymin), p.yhat};
  }
  return out;
}

std::vector<AcquisitionValue> BartSurrogate::evaluate(const Eigen::MatrixXd& points, double ymin) const {
  const Eigen::MatrixXd draws = bart_draw_matrix(fit_, points);
  std::vector<AcquisitionValue> out(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const std::span<const double> col(draws.col(i).data(), static_cast<std::size_t>(draws.rows()));
    out[static_cast<std::size_t>(i)] = {ei_from_draws(col, ymin), draws.col(i).mean()};
  }
  return out;
}

namespace {

struct Scored {
  Eigen::VectorXd x;
  AcquisitionValue value;
};

bool better(const Scored& a, const Scored& b) {
  if (a.value.ei != b.value.ei) return a.value.ei > b.value.ei;
  if (a.value.yhat != b.value.yhat) return a.value.yhat < b.value.yhat;
  return std::lexicographical_compare(a.x.data(), a.x.data() + a.x.size(), b.x.data(),
                                      b.x.data() + b.x.size());
}

bool duplicates(const Eigen::VectorXd& x, const Eigen::MatrixXd* avoid, double tol) {
  if (!avoid) return false;
  for (Eigen::Index i = 0; i < avoid->rows(); ++i)
    if ((avoid->row(i).transpose() - x).lpNorm<Eigen::Infinity>() <= tol) return true;
  return false;
}

std::vector<Scored> score(const FittedSurrogate& s, const Eigen::MatrixXd& pts, double ymin) {
  const auto values = s.evaluate(pts, ymin);
  std::vector<Scored> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = {pts.row(static_cast<Eigen::Index>(i)).transpose(), values[i]};
  return out;
}

ArgmaxResult pick_best(std::vector<Scored>& pool, const Eigen::MatrixXd* avoid, double tol) {
  if (pool.empty()) throw DomainError("no EI candidates");
  std::sort(pool.begin(), pool.end(), better);
  const Scored* chosen = &pool.front();
  for (const auto& s : pool) {
    if (!duplicates(s.x, avoid, tol)) {
      chosen = &s;
      break;
    }
  }
  return {InputPoint(std::vector<double>(chosen->x.data(), chosen->x.data() + chosen->x.size())),
          chosen->value.ei, chosen->value.yhat};
}

}  // namespace

ArgmaxResult argmax_ei_over(const FittedSurrogate& surrogate, double ymin, const Eigen::MatrixXd& candidates,
                            const Eigen::MatrixXd* avoid, double duplicate_tolerance) {
  if (candidates.cols() != surrogate.dim()) throw DomainError("candidates have the wrong dimension");
  std::vector<Scored> pool = score(surrogate, candidates, ymin);
  return pick_best(pool, avoid, duplicate_tolerance);
}

ArgmaxResult argmax_ei(const FittedSurrogate& surrogate, double ymin, const ArgmaxOptions& options,
                       const Eigen::MatrixXd* avoid) {
  const auto d = static_cast<int>(surrogate.dim());
  const int count = options.candidate_count.value_or(1000 * d);
  if (count < 1) throw DomainError("candidate_count must be positive");
  const Design candidates = lhd(count, d, options.seed, {LhdVariant::random, 1, false});
  std::vector<Scored> pool = score(surrogate, candidates.points, ymin);

  if (surrogate.supports_local_search() && options.multistart_count > 0) {
    std::vector<Scored> ranked = pool;
    std::sort(ranked.begin(), ranked.end(), better);
    const auto starts = std::min<std::size_t>(static_cast<std::size_t>(options.multistart_count), ranked.size());
    const Eigen::VectorXd lower = Eigen::VectorXd::Zero(d);
    const Eigen::VectorXd upper = Eigen::VectorXd::Ones(d);
    NelderMeadOptions nm;
    nm.initial_step = 0.02;
    nm.max_evaluations = 200 * d;
    nm.f_tolerance = 1e-12;
    nm.x_tolerance = 1e-9;
    Eigen::MatrixXd one(1, d);
    auto neg_ei = [&](const Eigen::VectorXd& x) {
      one.row(0) = x.transpose();
      return -surrogate.evaluate(one, ymin)[0].ei;
    };
    for (std::size_t s = 0; s < starts; ++s) {
      const MinimizeResult r = nelder_mead_box(neg_ei, ranked[s].x, lower, upper, nm);
      one.row(0) = r.x.transpose();
      pool.push_back({r.x, surrogate.evaluate(one, ymin)[0]});
    }
  }
  return pick_best(pool, avoid, options.duplicate_tolerance);
}

}  // namespace tsinv
