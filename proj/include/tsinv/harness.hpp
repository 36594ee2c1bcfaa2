#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tsinv/sequential.hpp"
#include "tsinv/simulators.hpp"

namespace tsinv {

using SimulatorChoice = std::variant<BuiltinId, ExternalSimSpec>;

/// One experiment: a simulator, a target, a list of methods and replications.
/// Parsed from a JSON document; see README for the schema.
struct ExperimentConfig {
  SimulatorChoice simulator = BuiltinId::test1;
  std::optional<std::vector<double>> x0;
  std::optional<std::string> target_file;
  TimeGrid grid;
  std::vector<SurrogateKind> methods;
  int replications = 1;
  std::uint64_t base_seed = 1;
  std::vector<std::uint64_t> seeds;  // empty: base_seed, base_seed + 1, ...
  std::filesystem::path output_dir = "out";
  SequentialConfig run;  // n0, n_new, candidate/multistart counts, surrogate options

  /// Seeds for each replication.
  std::vector<std::uint64_t> resolved_seeds() const;
  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

std::unique_ptr<Simulator> make_simulator(const ExperimentConfig& config);
/// Synthetic target from x0, or the target file.
TargetSeries resolve_target(const ExperimentConfig& config, const Simulator& sim);

/// Two-column CSV "t,value" with a header row.
TargetSeries load_target(const std::filesystem::path& path);
void write_target(const TimeSeries& series, const std::filesystem::path& path);

/// trace.csv columns: iter, x_1..x_d, w, y, running_min_w, ei_at_chosen.
void write_trace_csv(const RunTrace& trace, std::ostream& out);
void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path);
RunTrace read_trace_csv(const std::filesystem::path& path, int n0 = 0);

struct RunSummary {
  std::string method;
  std::uint64_t seed = 0;
  InputPoint x_opt;
  double w_opt = 0.0;
  int evaluations = 0;
  double wall_time_seconds = 0.0;
};

nlohmann::json to_json(const RunSummary& summary);

struct ExperimentResult {
  std::vector<RunSummary> summaries;
};

/// <out>/<method>/<seed>/{trace.csv,summary.json}. Every method of a replication
/// starts from the same initial design. A simulator failure rethrows after the
/// partial trace has been written.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct LabeledTrace {
  std::string method;
  std::uint64_t seed = 0;
  RunTrace trace;
};

struct ComparisonRow {
  std::string method;
  std::uint64_t seed = 0;
  int iter = 0;
  double running_min_w = 0.0;
};

/// Long format: method, seed, iter, running_min_w.
std::vector<ComparisonRow> comparison_rows(const std::vector<LabeledTrace>& traces);
void emit_comparison(const std::vector<LabeledTrace>& traces, std::ostream& out);
std::vector<ComparisonRow> read_comparison_csv(const std::filesystem::path& path);

/// All <method>/<seed>/trace.csv files below `out_dir`, in sorted order.
std::vector<LabeledTrace> collect_traces(const std::filesystem::path& out_dir);

/// "%.17g"; round-trips every finite double.
std::string format_double(double v);

}  // namespace tsinv
