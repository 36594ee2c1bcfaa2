#include "tsinv/simulators.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "tsinv/errors.hpp"

namespace tsinv {

std::vector<double> TimeGrid::times() const {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = time(i);
  return out;
}

void TimeGrid::validate() const {
  if (count < 2) throw DomainError("time grid needs at least two points");
  if (!(t_step > 0.0) || !std::isfinite(t_step)) throw DomainError("time grid step must be positive");
  if (!std::isfinite(t_start)) throw DomainError("time grid start must be finite");
}

bool same_grid(const TimeGrid& a, const TimeGrid& b) {
  auto close = [](double u, double v) {
    return std::abs(u - v) <= 1e-9 * std::max({1.0, std::abs(u), std::abs(v)});
  };
  return a.count == b.count && close(a.t_start, b.t_start) && close(a.t_step, b.t_step);
}

InputPoint::InputPoint(std::vector<double> coords) : coords_(std::move(coords)) {
  for (double c : coords_) {
    if (!std::isfinite(c) || c < 0.0 || c > 1.0)
      throw DomainError("input coordinate " + std::to_string(c) + " outside [0,1]");
  }
}

TimeSeries::TimeSeries(TimeGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  grid_.validate();
  if (values_.size() != grid_.count)
    throw DomainError("series length " + std::to_string(values_.size()) +
                      " does not match grid length " + std::to_string(grid_.count));
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("series contains a non-finite value");
  }
}

std::string_view to_string(BuiltinId id) {
  switch (id) {
    case BuiltinId::test1: return "test1";
    case BuiltinId::test2: return "test2";
    case BuiltinId::test3: return "test3";
  }
  return "unknown";
}

std::optional<BuiltinId> parse_builtin(std::string_view name) {
  if (name == "test1") return BuiltinId::test1;
  if (name == "test2") return BuiltinId::test2;
  if (name == "test3") return BuiltinId::test3;
  return std::nullopt;
}

std::size_t builtin_dimension(BuiltinId id) {
  switch (id) {
    case BuiltinId::test1: return 1;
    case BuiltinId::test2: return 2;
    case BuiltinId::test3: return 3;
  }
  return 0;
}

namespace {

void check_inputs(const InputPoint& x, std::size_t d, const TimeGrid& grid) {
  if (x.dim() != d)
    throw DomainError("simulator expects " + std::to_string(d) + " inputs, got " +
                      std::to_string(x.dim()));
  grid.validate();
  if (!(grid.t_start > 0.0)) throw DomainError("time grid must exclude t <= 0");
}

template <class F>
TimeSeries tabulate(const TimeGrid& grid, F&& g) {
  std::vector<double> values(grid.count);
  for (std::size_t i = 0; i < grid.count; ++i) values[i] = g(grid.time(i));
  return TimeSeries(grid, std::move(values));
}

constexpr double kTenPi = 10.0 * std::numbers::pi;

}  // namespace

TimeSeries eval_test1(const InputPoint& x, const TimeGrid& grid) {
  check_inputs(x, 1, grid);
  const double e = 2.0 + 4.0 * x[0];
  return tabulate(grid, [&](double t) {
    return std::sin(kTenPi * t) / (2.0 * t) + std::pow(std::abs(t - 1.0), e);
  });
}

TimeSeries eval_test2(const InputPoint& x, const TimeGrid& grid) {
  check_inputs(x, 2, grid);
  const double a = 1.0 + 2.0 * x[0];
  const double e = 2.0 + 4.0 * x[1];
  return tabulate(grid, [&](double t) {
    return std::sin(kTenPi * t) / (a * t) + std::pow(std::abs(t - 1.0), e);
  });
}

TimeSeries eval_test3(const InputPoint& x, const TimeGrid& grid) {
  check_inputs(x, 3, grid);
  const double a = 1.0 + 2.0 * x[1];
  const double e = 2.0 + 4.0 * x[2];
  const double s = 2.0 * x[2];
  return tabulate(grid, [&](double t) {
    return std::sin(kTenPi * std::pow(t, s)) / (a * t) + std::pow(std::abs(t - 1.0), e);
  });
}

TimeSeries eval_builtin(BuiltinId id, const InputPoint& x, const TimeGrid& grid) {
  switch (id) {
    case BuiltinId::test1: return eval_test1(x, grid);
    case BuiltinId::test2: return eval_test2(x, grid);
    case BuiltinId::test3: return eval_test3(x, grid);
  }
  throw DomainError("unknown simulator");
}

TargetSeries make_target(BuiltinId id, const InputPoint& x0, const TimeGrid& grid) {
  TargetSeries target;
  target.series = eval_builtin(id, x0, grid);
  target.provenance.kind = TargetProvenance::Kind::synthetic;
  target.provenance.x0.assign(x0.coords().begin(), x0.coords().end());
  return target;
}

BuiltinSimulator::BuiltinSimulator(BuiltinId id, TimeGrid grid) : id_(id), grid_(grid) {
  grid_.validate();
}

}  // namespace tsinv
