#include "tsinv/scalarize.hpp"

#include <algorithm>
#include <cmath>

#include "tsinv/errors.hpp"

namespace tsinv {

double rms_distance(const TimeSeries& g, const TimeSeries& g0) {
  if (!same_grid(g.grid(), g0.grid()) || g.size() != g0.size())
    throw DomainError("series and target live on different time grids");
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double diff = g[i] - g0[i];
    sum += diff * diff;
  }
  return std::sqrt(sum / static_cast<double>(g.size()));
}

double rms_distance(const TimeSeries& g, const TargetSeries& g0) {
  return rms_distance(g, g0.series);
}

double log_objective(double w, double floor) {
  if (!(floor > 0.0)) throw DomainError("log floor must be positive");
  if (!(w >= 0.0)) throw DomainError("objective must be nonnegative");
  return std::log(std::max(w, floor));
}

ScalarObjectiveValue scalarize(const TimeSeries& g, const TargetSeries& g0, double floor) {
  ScalarObjectiveValue v;
  v.w = rms_distance(g, g0);
  v.y = log_objective(v.w, floor);
  return v;
}

}  // namespace tsinv
