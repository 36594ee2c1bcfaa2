// tsinv: command-line front end.
//
//   tsinv run <config.json> [--seed S] [--out DIR]
//   tsinv compare <out-dir> [--output FILE]
//   tsinv target-from-sim <simulator> <x0...> <path>
//   tsinv simulate <simulator>          (one evaluation over stdin/stdout)

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tsinv/errors.hpp"
#include "tsinv/harness.hpp"

namespace {

using namespace tsinv;

BuiltinId require_builtin(const std::string& name) {
  const auto id = parse_builtin(name);
  if (!id) throw ConfigError("unknown simulator '" + name + "'");
  return *id;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::string> out) {
  ExperimentConfig cfg = load_config(config_path);
  if (seed) {
    cfg.base_seed = *seed;
    cfg.seeds.clear();
  }
  if (out) cfg.output_dir = *out;
  const ExperimentResult result = run_experiment(cfg);
  for (const auto& s : result.summaries)
    std::printf("%-14s seed=%llu  w_opt=%s  evals=%d  %.1fs\n", s.method.c_str(),
                static_cast<unsigned long long>(s.seed), format_double(s.w_opt).c_str(), s.evaluations,
                s.wall_time_seconds);
  return 0;
}

int cmd_compare(const std::string& out_dir, const std::string& output) {
  const auto traces = collect_traces(out_dir);
  if (traces.empty()) throw ConfigError("no traces found below " + out_dir);
  const std::filesystem::path path = output.empty() ? std::filesystem::path(out_dir) / "comparison.csv"
                                                    : std::filesystem::path(output);
  std::ofstream file(path);
  if (!file) throw ConfigError("cannot write " + path.string());
  emit_comparison(traces, file);
  std::printf("%zu traces -> %s\n", traces.size(), path.string().c_str());
  return 0;
}

int cmd_target(const std::string& sim, const std::string& path, const std::vector<double>& x0) {
  const BuiltinId id = require_builtin(sim);
  if (x0.size() != builtin_dimension(id))
    throw ConfigError("x0 needs " + std::to_string(builtin_dimension(id)) + " values");
  const TargetSeries target = make_target(id, InputPoint(x0));
  write_target(target.series, path);
  return 0;
}

double parse_coordinate(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

int cmd_simulate(const std::string& sim) {
  const BuiltinId id = require_builtin(sim);
  std::string line;
  if (!std::getline(std::cin, line)) throw ConfigError("expected one input line on stdin");
  std::istringstream in(line);
  std::vector<double> x;
  for (double v; in >> v;) x.push_back(v);
  if (!in.eof()) throw ConfigError("malformed input line");
  const TimeSeries g = eval_builtin(id, InputPoint(x), TimeGrid::standard());
  for (std::size_t i = 0; i < g.size(); ++i) std::printf("%s%s", i ? " " : "", format_double(g[i]).c_str());
  std::printf("\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibration of time-series simulators by expected-improvement search"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  auto* run = app.add_subcommand("run", "Run every method and replication of a config");
  run->add_option("config", config_path, "JSON config")->required();
  run->add_option("--seed", seed, "Base seed (overrides the config)");
  run->add_option("--out", out, "Output directory (overrides the config)");

  std::string out_dir;
  std::string comparison_path;
  auto* compare = app.add_subcommand("compare", "Collect running minima into comparison.csv");
  compare->add_option("out_dir", out_dir, "Directory written by run")->required();
  compare->add_option("--output", comparison_path, "Destination (default <out_dir>/comparison.csv)");

  std::string sim_name;
  std::vector<std::string> target_args;
  auto* target = app.add_subcommand("target-from-sim", "Write a built-in simulator series as a target file");
  target->add_option("simulator", sim_name, "test1, test2 or test3")->required();
  target->add_option("args", target_args, "x0 coordinates followed by the output CSV path")->required()->expected(2, -1);

  std::string simulate_name;
  auto* simulate = app.add_subcommand("simulate", "Evaluate a built-in simulator over the line protocol");
  simulate->add_option("simulator", simulate_name, "test1, test2 or test3")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, seed, out);
    if (*compare) return cmd_compare(out_dir, comparison_path);
    if (*target) {
      std::vector<double> x0;
      for (std::size_t i = 0; i + 1 < target_args.size(); ++i) x0.push_back(parse_coordinate(target_args[i]));
      return cmd_target(sim_name, target_args.back(), x0);
    }
    if (*simulate) return cmd_simulate(simulate_name);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const SimulatorError& e) {
    std::fprintf(stderr, "simulator error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
