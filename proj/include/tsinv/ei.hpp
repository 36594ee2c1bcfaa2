#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tsinv/bart.hpp"
#include "tsinv/gp.hpp"
#include "tsinv/simulators.hpp"

namespace tsinv {

/// E[max(ymin - Y, 0)] for Y ~ N(yhat, s^2). For s = 0 this is max(ymin - yhat, 0).
double expected_improvement(double yhat, double s, double ymin);

/// (1/K) sum_k max(ymin - draw_k, 0). Throws DomainError on an empty vector.
double ei_from_draws(std::span<const double> draws, double ymin);

struct AcquisitionValue {
  double ei = 0.0;
  double yhat = 0.0;
};

/// A fitted surrogate seen through the acquisition function.
class FittedSurrogate {
 public:
  virtual ~FittedSurrogate() = default;
  virtual Eigen::Index dim() const = 0;
  /// EI and predicted mean at every row of `points`.
  virtual std::vector<AcquisitionValue> evaluate(const Eigen::MatrixXd& points, double ymin) const = 0;
  /// Whether EI is smooth enough in x for local ascent.
  virtual bool supports_local_search() const { return false; }
};

class GpSurrogate final : public FittedSurrogate {
 public:
  explicit GpSurrogate(GpFit fit) : fit_(std::move(fit)) {}
  Eigen::Index dim() const override { return fit_.X.cols(); }
  std::vector<AcquisitionValue> evaluate(const Eigen::MatrixXd& points, double ymin) const override;
  bool supports_local_search() const override { return true; }
  const GpFit& fit() const { return fit_; }

 private:
  GpFit fit_;
};

class BartSurrogate final : public FittedSurrogate {
 public:
  explicit BartSurrogate(TreeEnsembleFit fit) : fit_(std::move(fit)) {}
  Eigen::Index dim() const override { return fit_.dim; }
  std::vector<AcquisitionValue> evaluate(const Eigen::MatrixXd& points, double ymin) const override;
  const TreeEnsembleFit& fit() const { return fit_; }

 private:
  TreeEnsembleFit fit_;
};

struct ArgmaxOptions {
  std::optional<int> candidate_count;  // default 1000 * d
  int multistart_count = 10;
  std::uint64_t seed = 0;
  double duplicate_tolerance = 1e-9;
};

struct ArgmaxResult {
  InputPoint x;
  double ei = 0.0;
  double yhat = 0.0;
};

/// Maximizes EI over [0,1]^d using a random LHD of candidates, refined by
/// Nelder-Mead ascents from the best candidates when the surrogate allows it.
/// Ties go to the smaller predicted mean, then to the lexicographically smaller x.
/// Points within duplicate_tolerance (max-norm) of a row of `avoid` are skipped
/// unless nothing else is available.
ArgmaxResult argmax_ei(const FittedSurrogate& surrogate, double ymin, const ArgmaxOptions& options,
                       const Eigen::MatrixXd* avoid = nullptr);

/// Same search over an explicit candidate set (no local refinement).
ArgmaxResult argmax_ei_over(const FittedSurrogate& surrogate, double ymin,
                            const Eigen::MatrixXd& candidates, const Eigen::MatrixXd* avoid = nullptr,
                            double duplicate_tolerance = 1e-9);

}  // namespace tsinv
