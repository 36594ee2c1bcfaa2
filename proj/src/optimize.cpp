#include "tsinv/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace tsinv {

MinimizeResult nelder_mead_box(const std::function<double(const Eigen::VectorXd&)>& f,
                               const Eigen::VectorXd& start, const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper, const NelderMeadOptions& options) {
  const Eigen::Index d = start.size();
  int evals = 0;
  auto project = [&](Eigen::VectorXd x) { return x.cwiseMax(lower).cwiseMin(upper).eval(); };
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(d + 1));
  std::vector<double> values(static_cast<std::size_t>(d + 1));
  simplex[0] = project(start);
  for (Eigen::Index k = 0; k < d; ++k) {
    Eigen::VectorXd v = simplex[0];
    const double step = options.initial_step * (upper[k] - lower[k]);
    // Step inward when the start sits on the upper face.
    v[k] = (v[k] + step <= upper[k]) ? v[k] + step : v[k] - step;
    simplex[static_cast<std::size_t>(k + 1)] = project(v);
  }
  for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(simplex.size());
  while (evals < options.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];

    double x_spread = 0.0;
    for (const auto& p : simplex) x_spread = std::max(x_spread, (p - simplex[best]).lpNorm<Eigen::Infinity>());
    const double f_spread = values[worst] - values[best];
    if (x_spread < options.x_tolerance ||
        (std::isfinite(f_spread) && f_spread <= options.f_tolerance * (1.0 + std::abs(values[best]))))
      break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < simplex.size(); ++i)
      if (i != worst) centroid += simplex[i];
    centroid /= static_cast<double>(d);

    const Eigen::VectorXd reflected = project(centroid + (centroid - simplex[worst]));
    const double fr = eval(reflected);
    if (fr < values[best]) {
      const Eigen::VectorXd expanded = project(centroid + 2.0 * (centroid - simplex[worst]));
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const Eigen::VectorXd contracted =
        outside ? project(centroid + 0.5 * (reflected - centroid))
                : project(centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = eval(contracted);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best) continue;
      simplex[i] = project(simplex[best] + 0.5 * (simplex[i] - simplex[best]));
      values[i] = eval(simplex[i]);
    }
  }

  const auto it = std::min_element(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(it - values.begin());
  return {simplex[idx], *it, evals};
}

}  // namespace tsinv
