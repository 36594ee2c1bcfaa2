#pragma once

#include "tsinv/simulators.hpp"

namespace tsinv {

inline constexpr double kDefaultLogFloor = 1e-12;

struct ScalarObjectiveValue {
  double w = 0.0;  // RMS discrepancy, >= 0
  double y = 0.0;  // ln(max(w, floor))
};

/// sqrt((1/L) * sum_t (g(t) - g0(t))^2). Throws DomainError on grid mismatch.
double rms_distance(const TimeSeries& g, const TimeSeries& g0);
double rms_distance(const TimeSeries& g, const TargetSeries& g0);

/// ln(max(w, floor)); the floor keeps exact hits finite.
double log_objective(double w, double floor = kDefaultLogFloor);

ScalarObjectiveValue scalarize(const TimeSeries& g, const TargetSeries& g0,
                               double floor = kDefaultLogFloor);

}  // namespace tsinv
