#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tsinv {

/// Uniform time grid t_i = t_start + i * t_step, i = 0..count-1 (both ends included).
struct TimeGrid {
  double t_start = 0.5;
  double t_step = 0.02;
  std::size_t count = 101;

  /// 0.5, 0.52, ..., 2.50 (101 points).
  static TimeGrid standard() { return {}; }

  double time(std::size_t i) const { return t_start + static_cast<double>(i) * t_step; }
  double t_end() const { return time(count - 1); }
  std::vector<double> times() const;

  /// Throws DomainError unless count >= 2 and t_step > 0.
  void validate() const;
};

/// Grids agree in count and (to relative 1e-9) in start and step.
bool same_grid(const TimeGrid& a, const TimeGrid& b);

/// A point of the unit hypercube.
class InputPoint {
 public:
  InputPoint() = default;
  /// Throws DomainError if any coordinate is outside [0,1] or not finite.
  explicit InputPoint(std::vector<double> coords);

  std::size_t dim() const { return coords_.size(); }
  double operator[](std::size_t k) const { return coords_[k]; }
  std::span<const double> coords() const { return coords_; }

  friend bool operator==(const InputPoint&, const InputPoint&) = default;

 private:
  std::vector<double> coords_;
};

class TimeSeries {
 public:
  TimeSeries() = default;
  /// Throws DomainError on length mismatch or non-finite values.
  TimeSeries(TimeGrid grid, std::vector<double> values);

  const TimeGrid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  TimeGrid grid_;
  std::vector<double> values_;
};

struct TargetProvenance {
  enum class Kind { synthetic, file };
  Kind kind = Kind::synthetic;
  std::vector<double> x0;  // synthetic only
  std::string path;        // file only
};

struct TargetSeries {
  TimeSeries series;
  TargetProvenance provenance;
};

enum class BuiltinId { test1, test2, test3 };

std::string_view to_string(BuiltinId id);
std::optional<BuiltinId> parse_builtin(std::string_view name);
std::size_t builtin_dimension(BuiltinId id);

// g(x,t) = sin(10 pi t) / (2t) + |t-1|^(2+4x)
TimeSeries eval_test1(const InputPoint& x, const TimeGrid& grid = TimeGrid::standard());
// g(x,t) = sin(10 pi t) / ((1+2 x1) t) + |t-1|^(2+4 x2)
TimeSeries eval_test2(const InputPoint& x, const TimeGrid& grid = TimeGrid::standard());
// g(x,t) = sin(10 pi t^(2 x3)) / ((1+2 x2) t) + |t-1|^(2+4 x3); x1 does not enter.
TimeSeries eval_test3(const InputPoint& x, const TimeGrid& grid = TimeGrid::standard());

TimeSeries eval_builtin(BuiltinId id, const InputPoint& x, const TimeGrid& grid);

/// Series of a built-in simulator at x0, tagged as a synthetic target.
TargetSeries make_target(BuiltinId id, const InputPoint& x0,
                         const TimeGrid& grid = TimeGrid::standard());

/// An executable speaking the line protocol: one line of d reals on stdin,
/// L whitespace-separated reals on stdout, one evaluation per process.
struct ExternalSimSpec {
  std::string path;
  std::size_t d = 1;
  std::size_t L = 101;
  double timeout_seconds = 60.0;
  bool reentrant = false;
};

TimeSeries eval_external(const InputPoint& x, const ExternalSimSpec& spec,
                         const TimeGrid& grid);

/// Common interface for anything that maps [0,1]^d to a series on a fixed grid.
class Simulator {
 public:
  virtual ~Simulator() = default;
  virtual std::size_t dimension() const = 0;
  virtual const TimeGrid& grid() const = 0;
  virtual std::string name() const = 0;
  /// Throws DomainError on a bad input and SimulatorError on evaluation failure.
  virtual TimeSeries evaluate(const InputPoint& x) const = 0;
};

class BuiltinSimulator final : public Simulator {
 public:
  explicit BuiltinSimulator(BuiltinId id, TimeGrid grid = TimeGrid::standard());

  std::size_t dimension() const override { return builtin_dimension(id_); }
  const TimeGrid& grid() const override { return grid_; }
  std::string name() const override { return std::string(to_string(id_)); }
  TimeSeries evaluate(const InputPoint& x) const override { return eval_builtin(id_, x, grid_); }
  BuiltinId id() const { return id_; }

 private:
  BuiltinId id_;
  TimeGrid grid_;
};

/// Calls are serialized unless the spec declares the executable reentrant.
class ExternalSimulator final : public Simulator {
 public:
  ExternalSimulator(ExternalSimSpec spec, TimeGrid grid);

  std::size_t dimension() const override { return spec_.d; }
  const TimeGrid& grid() const override { return grid_; }
  std::string name() const override { return spec_.path; }
  TimeSeries evaluate(const InputPoint& x) const override;
  const ExternalSimSpec& spec() const { return spec_; }

 private:
  ExternalSimSpec spec_;
  TimeGrid grid_;
  mutable std::mutex mutex_;
};

}  // namespace tsinv
