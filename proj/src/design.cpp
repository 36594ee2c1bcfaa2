#include "tsinv/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "tsinv/errors.hpp"
#include "tsinv/random.hpp"

namespace tsinv {

InputPoint Design::row(Eigen::Index i) const {
  std::vector<double> x(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index k = 0; k < points.cols(); ++k) x[static_cast<std::size_t>(k)] = points(i, k);
  return InputPoint(std::move(x));
}

void Design::append(const InputPoint& x) {
  if (points.size() == 0) points.resize(0, static_cast<Eigen::Index>(x.dim()));
  if (static_cast<Eigen::Index>(x.dim()) != points.cols())
    throw DomainError("appended point has the wrong dimension");
  points.conservativeResize(points.rows() + 1, Eigen::NoChange);
  for (Eigen::Index k = 0; k < points.cols(); ++k)
    points(points.rows() - 1, k) = x[static_cast<std::size_t>(k)];
}

namespace {

// fma gives the exact sign of v*n - k, so the returned value lies in [k/n, (k+1)/n) exactly.
double place_in_stratum(double v, int k, int n) {
  const double dn = n;
  while (std::fma(v, dn, -(k + 1.0)) >= 0.0) v = std::nextafter(v, 0.0);
  while (std::fma(v, dn, -static_cast<double>(k)) < 0.0) v = std::nextafter(v, 1.0);
  return v;
}

Eigen::MatrixXd random_lhd(int n, int d, Rng& rng, bool midpoint) {
  Eigen::MatrixXd pts(n, d);
  std::vector<int> perm(static_cast<std::size_t>(n));
  const double width = 1.0 / n;
  for (int k = 0; k < d; ++k) {
    std::iota(perm.begin(), perm.end(), 0);
    // Fisher-Yates with our own uniform draw keeps designs identical across standard libraries.
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    for (int i = 0; i < n; ++i) {
      const int k_stratum = perm[static_cast<std::size_t>(i)];
      const double offset = midpoint ? 0.5 : uniform01(rng);
      pts(i, k) = place_in_stratum((k_stratum + offset) * width, k_stratum, n);
    }
  }
  return pts;
}

}  // namespace

double min_pairwise_distance(const Eigen::MatrixXd& points) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index j = i + 1; j < points.rows(); ++j)
      best = std::min(best, (points.row(i) - points.row(j)).squaredNorm());
  return std::sqrt(best);
}

Design lhd(int n, int d, std::uint64_t seed, const LhdOptions& options) {
  if (n < 1 || d < 1) throw DomainError("LHD requires n >= 1 and d >= 1");
  const int restarts = options.variant == LhdVariant::maximin ? std::max(1, options.restarts) : 1;
  Design best;
  double best_dist = -1.0;
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    Eigen::MatrixXd pts = random_lhd(n, d, rng, options.midpoint);
    const double dist = restarts > 1 ? min_pairwise_distance(pts) : 0.0;
    // Strict improvement only: ties keep the lowest restart index.
    if (dist > best_dist) {
      best_dist = dist;
      best.points = std::move(pts);
    }
  }
  return best;
}

}  // namespace tsinv
