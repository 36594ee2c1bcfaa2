#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "tsinv/bart.hpp"
#include "tsinv/design.hpp"
#include "tsinv/ei.hpp"
#include "tsinv/errors.hpp"
#include "tsinv/gp.hpp"
#include "tsinv/scalarize.hpp"
#include "tsinv/simulators.hpp"

namespace tsinv {

enum class SurrogateKind { gp_on_w, bart_on_logw, gp_on_logw };

std::string_view to_string(SurrogateKind kind);
std::optional<SurrogateKind> parse_surrogate(std::string_view name);

struct SequentialConfig {
  int n0 = 5;
  int n_new = 15;
  SurrogateKind surrogate = SurrogateKind::gp_on_w;
  std::optional<int> candidate_count;  // default 1000 * d
  int multistart_count = 10;
  std::uint64_t seed = 0;
  double log_floor = kDefaultLogFloor;
  LhdOptions initial_design;
  GpOptions gp;      // seed is overridden per refit
  BartOptions bart;  // seed is overridden per refit

  /// Throws DomainError unless n0 >= 2, n_new >= 0 and candidate_count >= 1.
  void validate() const;
};

struct TraceRecord {
  int iter = 0;
  InputPoint x;
  double w = 0.0;
  double y = 0.0;
  double running_min_w = 0.0;
  double ei_at_chosen = 0.0;  // NaN for initial-design points
};

struct RunTrace {
  int d = 0;
  int n0 = 0;
  std::vector<TraceRecord> records;
  InputPoint x_opt;
  double w_opt = 0.0;
};

/// Raised when the simulator fails mid-run; carries everything evaluated so far.
class SequentialAborted : public SimulatorError {
 public:
  SequentialAborted(const std::string& what, RunTrace partial)
      : SimulatorError(what), partial_(std::move(partial)) {}
  const RunTrace& partial() const { return partial_; }

 private:
  RunTrace partial_;
};

/// Initial design used when none is supplied: maximin LHD of size n0.
Design initial_design(const SequentialConfig& config, int d);

/// Fits the configured surrogate to (X, objective).
std::unique_ptr<FittedSurrogate> fit_surrogate(SurrogateKind kind, const Eigen::MatrixXd& X,
                                               const Eigen::VectorXd& objective,
                                               const SequentialConfig& config, int iteration);

/// EI sequential design: evaluate an initial design, then n_new times refit the
/// surrogate, maximize EI against the best observed objective and evaluate the
/// maximizer. The simulator is called exactly n0 + n_new times.
RunTrace run_sequential(const Simulator& sim, const TargetSeries& target, const SequentialConfig& config,
                        const Design* initial = nullptr);

}  // namespace tsinv
