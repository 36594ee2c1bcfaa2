#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "tsinv/simulators.hpp"

namespace tsinv {

/// n x d matrix of points in [0,1]^d, one point per row.
struct Design {
  Eigen::MatrixXd points;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
  InputPoint row(Eigen::Index i) const;
  void append(const InputPoint& x);
};

enum class LhdVariant { random, maximin };

struct LhdOptions {
  LhdVariant variant = LhdVariant::maximin;
  int restarts = 100;     // maximin only
  bool midpoint = false;  // place points at stratum centres instead of uniformly
};

/// Latin hypercube design: every column has exactly one point in each
/// stratum [k/n, (k+1)/n). The maximin variant keeps the best of `restarts`
/// random LHDs; restart 0 is the random variant's design for the same seed.
Design lhd(int n, int d, std::uint64_t seed, const LhdOptions& options = {});

/// Smallest Euclidean distance between two rows; +inf for n < 2.
double min_pairwise_distance(const Eigen::MatrixXd& points);

}  // namespace tsinv
