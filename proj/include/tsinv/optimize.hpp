#pragma once

#include <functional>

#include <Eigen/Dense>

namespace tsinv {

struct NelderMeadOptions {
  double initial_step = 0.1;  // simplex edge, in units of the box width
  int max_evaluations = 400;
  double f_tolerance = 1e-10;
  double x_tolerance = 1e-8;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
};

/// Nelder-Mead on the box [lower, upper]; trial points are projected onto the box.
/// Non-finite objective values are treated as +inf.
MinimizeResult nelder_mead_box(const std::function<double(const Eigen::VectorXd&)>& f,
                               const Eigen::VectorXd& start, const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper, const NelderMeadOptions& options = {});

}  // namespace tsinv
