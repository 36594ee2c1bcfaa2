#include "tsinv/sequential.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "tsinv/random.hpp"

namespace tsinv {

std::string_view to_string(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::gp_on_w: return "gp_on_w";
    case SurrogateKind::bart_on_logw: return "bart_on_logw";
    case SurrogateKind::gp_on_logw: return "gp_on_logw";
  }
  return "unknown";
}

std::optional<SurrogateKind> parse_surrogate(std::string_view name) {
  if (name == "gp_on_w") return SurrogateKind::gp_on_w;
  if (name == "bart_on_logw") return SurrogateKind::bart_on_logw;
  if (name == "gp_on_logw") return SurrogateKind::gp_on_logw;
  return std::nullopt;
}

void SequentialConfig::validate() const {
  if (n0 < 2) throw DomainError("n0 must be at least 2");
  if (n_new < 0) throw DomainError("n_new must be nonnegative");
  if (candidate_count && *candidate_count < 1) throw DomainError("candidate_count must be positive");
  if (multistart_count < 0) throw DomainError("multistart_count must be nonnegative");
  if (!(log_floor > 0.0)) throw DomainError("log floor must be positive");
}

Design initial_design(const SequentialConfig& config, int d) {
  return lhd(config.n0, d, derive_seed(config.seed, {0x1d}), config.initial_design);
}

std::unique_ptr<FittedSurrogate> fit_surrogate(SurrogateKind kind, const Eigen::MatrixXd& X,
                                               const Eigen::VectorXd& objective,
                                               const SequentialConfig& config, int iteration) {
  const auto it = static_cast<std::uint64_t>(iteration);
  switch (kind) {
    case SurrogateKind::gp_on_w:
    case SurrogateKind::gp_on_logw: {
      GpOptions opt = config.gp;
      opt.seed = derive_seed(config.seed, {0x9b, it});
      return std::make_unique<GpSurrogate>(fit_gp(X, objective, opt));
    }
    case SurrogateKind::bart_on_logw: {
      BartOptions opt = config.bart;
      opt.seed = derive_seed(config.seed, {0xba, it});
      return std::make_unique<BartSurrogate>(fit_bart(X, objective, opt));
    }
  }
  throw DomainError("unknown surrogate");
}

namespace {

bool works_on_log(SurrogateKind kind) { return kind != SurrogateKind::gp_on_w; }

void finish(RunTrace& trace) {
  if (trace.records.empty()) return;
  std::size_t best = 0;
  for (std::size_t i = 1; i < trace.records.size(); ++i)
    if (trace.records[i].w < trace.records[best].w) best = i;
  trace.x_opt = trace.records[best].x;
  trace.w_opt = trace.records[best].w;
}

}  // namespace

RunTrace run_sequential(const Simulator& sim, const TargetSeries& target, const SequentialConfig& config,
                        const Design* initial) {
  config.validate();
  if (!same_grid(sim.grid(), target.series.grid()))
    throw DomainError("simulator and target use different time grids");
  const auto d = static_cast<int>(sim.dimension());

  Design design = initial ? *initial : initial_design(config, d);
  if (design.size() != config.n0 || design.dim() != d)
    throw DomainError("initial design does not match n0 x d");

  RunTrace trace;
  trace.d = d;
  trace.n0 = config.n0;
  Eigen::VectorXd w(0);
  Eigen::VectorXd y(0);
  double running_min = std::numeric_limits<double>::infinity();

  auto evaluate = [&](const InputPoint& x, double ei) {
    TimeSeries g;
    try {
      g = sim.evaluate(x);
    } catch (const std::exception& e) {
      finish(trace);
      throw SequentialAborted(std::string("simulator failed: ") + e.what(), trace);
    }
    const ScalarObjectiveValue v = scalarize(g, target, config.log_floor);
    running_min = std::min(running_min, v.w);
    const auto n = w.size();
    w.conservativeResize(n + 1);
    y.conservativeResize(n + 1);
    w[n] = v.w;
    y[n] = v.y;
    trace.records.push_back({static_cast<int>(trace.records.size()), x, v.w, v.y, running_min, ei});
  };

  Design evaluated;
  evaluated.points.resize(0, d);
  for (Eigen::Index i = 0; i < design.size(); ++i) {
    const InputPoint x = design.row(i);
    evaluate(x, std::numeric_limits<double>::quiet_NaN());
    evaluated.append(x);
  }

  const bool log_scale = works_on_log(config.surrogate);
  ArgmaxOptions argmax;
  argmax.candidate_count = config.candidate_count;
  argmax.multistart_count = config.multistart_count;
  for (int step = 0; step < config.n_new; ++step) {
    const Eigen::VectorXd& objective = log_scale ? y : w;
    const auto surrogate = fit_surrogate(config.surrogate, evaluated.points, objective, config, step);
    argmax.seed = derive_seed(config.seed, {0xca, static_cast<std::uint64_t>(step)});
    const ArgmaxResult next = argmax_ei(*surrogate, objective.minCoeff(), argmax, &evaluated.points);
    evaluate(next.x, next.ei);
    evaluated.append(next.x);
  }
  finish(trace);
  return trace;
}

}  // namespace tsinv
