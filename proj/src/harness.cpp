#include "tsinv/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "tsinv/errors.hpp"

namespace tsinv {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ConfigError("not a number '" + s + "' in " + where);
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("not an unsigned integer '" + s + "' in " + where);
  }
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
void read_opt(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

ExternalSimSpec parse_external(const json& j) {
  check_keys(j, {"path", "d", "L", "timeout_seconds", "reentrant"}, "simulator");
  ExternalSimSpec spec;
  spec.path = j.at("path").get<std::string>();
  spec.d = j.at("d").get<std::size_t>();
  spec.L = j.at("L").get<std::size_t>();
  read_opt(j, "timeout_seconds", spec.timeout_seconds);
  read_opt(j, "reentrant", spec.reentrant);
  if (spec.d == 0 || spec.L < 2) throw ConfigError("external simulator needs d >= 1 and L >= 2");
  if (!(spec.timeout_seconds > 0.0)) throw ConfigError("timeout_seconds must be positive");
  return spec;
}

void parse_gp(const json& j, GpOptions& gp) {
  check_keys(j, {"starts", "p", "theta_min", "theta_max", "nugget_start", "nugget_max"}, "gp");
  read_opt(j, "starts", gp.starts);
  read_opt(j, "p", gp.p);
  read_opt(j, "theta_min", gp.theta_min);
  read_opt(j, "theta_max", gp.theta_max);
  read_opt(j, "nugget_start", gp.nugget_start);
  read_opt(j, "nugget_max", gp.nugget_max);
}

void parse_bart(const json& j, BartOptions& b) {
  check_keys(j, {"trees", "iterations", "burn_in", "thin", "k", "nu", "quantile", "anchor_fraction",
                 "alpha", "beta", "cutpoints", "min_leaf_size"},
             "bart");
  read_opt(j, "trees", b.trees);
  read_opt(j, "iterations", b.iterations);
  read_opt(j, "burn_in", b.burn_in);
  read_opt(j, "thin", b.thin);
  read_opt(j, "k", b.k);
  read_opt(j, "nu", b.nu);
  read_opt(j, "quantile", b.quantile);
  read_opt(j, "anchor_fraction", b.anchor_fraction);
  read_opt(j, "alpha", b.alpha);
  read_opt(j, "beta", b.beta);
  read_opt(j, "cutpoints", b.cutpoints);
  read_opt(j, "min_leaf_size", b.min_leaf_size);
}

void parse_design(const json& j, LhdOptions& o) {
  check_keys(j, {"variant", "restarts", "midpoint"}, "design");
  if (j.contains("variant")) {
    const auto v = j.at("variant").get<std::string>();
    if (v == "maximin")
      o.variant = LhdVariant::maximin;
    else if (v == "random")
      o.variant = LhdVariant::random;
    else
      throw ConfigError("unknown design variant '" + v + "'");
  }
  read_opt(j, "restarts", o.restarts);
  read_opt(j, "midpoint", o.midpoint);
}

}  // namespace

std::vector<std::uint64_t> ExperimentConfig::resolved_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out(static_cast<std::size_t>(replications));
  for (int r = 0; r < replications; ++r) out[static_cast<std::size_t>(r)] = base_seed + static_cast<std::uint64_t>(r);
  return out;
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ConfigError("at least one method is required");
  if (replications < 1) throw ConfigError("replications must be at least 1");
  if (!seeds.empty() && static_cast<int>(seeds.size()) != replications)
    throw ConfigError("seeds must list one seed per replication");
  if (x0.has_value() == target_file.has_value()) throw ConfigError("give exactly one of x0 and target_file");
  if (x0 && !std::holds_alternative<BuiltinId>(simulator))
    throw ConfigError("x0 targets require a built-in simulator");
  try {
    grid.validate();
    run.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  const BartOptions& b = run.bart;
  if (b.trees < 1 || b.burn_in < 0 || b.thin < 1 || b.iterations - b.burn_in < b.thin)
    throw ConfigError("bart chain settings leave no retained draws");
  if (const auto* ext = std::get_if<ExternalSimSpec>(&simulator); ext && ext->L != grid.count)
    throw ConfigError("external simulator L does not match the grid length");
}

ExperimentConfig parse_config(const json& doc) {
  try {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    check_keys(doc,
               {"simulator", "x0", "target_file", "grid", "methods", "n0", "n_new", "replications", "seed",
                "seeds", "output", "candidate_count", "multistart_count", "log_floor", "design", "gp", "bart"},
               "config");
    ExperimentConfig cfg;
    const json& sim = doc.at("simulator");
    if (sim.is_string()) {
      const auto id = parse_builtin(sim.get<std::string>());
      if (!id) throw ConfigError("unknown simulator '" + sim.get<std::string>() + "'");
      cfg.simulator = *id;
    } else {
      cfg.simulator = parse_external(sim);
    }
    if (doc.contains("x0")) cfg.x0 = doc.at("x0").get<std::vector<double>>();
    if (doc.contains("target_file")) cfg.target_file = doc.at("target_file").get<std::string>();
    if (doc.contains("grid")) {
      const json& g = doc.at("grid");
      check_keys(g, {"t_start", "t_step", "count"}, "grid");
      read_opt(g, "t_start", cfg.grid.t_start);
      read_opt(g, "t_step", cfg.grid.t_step);
      read_opt(g, "count", cfg.grid.count);
    }
    for (const auto& m : doc.at("methods")) {
      const auto kind = parse_surrogate(m.get<std::string>());
      if (!kind) throw ConfigError("unknown method '" + m.get<std::string>() + "'");
      cfg.methods.push_back(*kind);
    }
    read_opt(doc, "n0", cfg.run.n0);
    read_opt(doc, "n_new", cfg.run.n_new);
    read_opt(doc, "replications", cfg.replications);
    read_opt(doc, "seed", cfg.base_seed);
    read_opt(doc, "seeds", cfg.seeds);
    if (!cfg.seeds.empty() && !doc.contains("replications")) cfg.replications = static_cast<int>(cfg.seeds.size());
    if (doc.contains("output")) cfg.output_dir = doc.at("output").get<std::string>();
    if (doc.contains("candidate_count")) cfg.run.candidate_count = doc.at("candidate_count").get<int>();
    read_opt(doc, "multistart_count", cfg.run.multistart_count);
    read_opt(doc, "log_floor", cfg.run.log_floor);
    if (doc.contains("design")) parse_design(doc.at("design"), cfg.run.initial_design);
    if (doc.contains("gp")) parse_gp(doc.at("gp"), cfg.run.gp);
    if (doc.contains("bart")) parse_bart(doc.at("bart"), cfg.run.bart);
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

std::unique_ptr<Simulator> make_simulator(const ExperimentConfig& config) {
  if (const auto* id = std::get_if<BuiltinId>(&config.simulator))
    return std::make_unique<BuiltinSimulator>(*id, config.grid);
  return std::make_unique<ExternalSimulator>(std::get<ExternalSimSpec>(config.simulator), config.grid);
}

TargetSeries resolve_target(const ExperimentConfig& config, const Simulator& sim) {
  TargetSeries target;
  if (config.x0) {
    try {
      target = make_target(std::get<BuiltinId>(config.simulator), InputPoint(*config.x0), config.grid);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("x0: ") + e.what());
    }
  } else {
    target = load_target(*config.target_file);
  }
  if (!same_grid(target.series.grid(), sim.grid()))
    throw ConfigError("target grid does not match the simulator grid");
  return target;
}

TargetSeries load_target(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open target file " + path.string());
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty target file " + where);
  const auto header = split_csv(line);
  if (header.size() != 2) throw ConfigError("target file needs a two-column header in " + where);

  std::vector<double> t;
  std::vector<double> v;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != 2) throw ConfigError("malformed row '" + line + "' in " + where);
    t.push_back(parse_double(fields[0], where));
    v.push_back(parse_double(fields[1], where));
    if (!std::isfinite(t.back()) || !std::isfinite(v.back()))
      throw ConfigError("non-finite value in " + where);
  }
  if (t.size() < 2) throw ConfigError("target file needs at least two rows: " + where);
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw ConfigError("time column is not strictly increasing in " + where);

  TimeGrid grid;
  grid.t_start = t.front();
  grid.count = t.size();
  grid.t_step = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  for (std::size_t i = 0; i < t.size(); ++i)
    if (std::abs(t[i] - grid.time(i)) > 1e-6 * grid.t_step)
      throw ConfigError("time column is not evenly spaced in " + where);

  TargetSeries target;
  target.series = TimeSeries(grid, std::move(v));
  target.provenance.kind = TargetProvenance::Kind::file;
  target.provenance.path = path.string();
  return target;
}

void write_target(const TimeSeries& series, const fs::path& path) {
  auto out = open_out(path);
  out << "t,value\n";
  for (std::size_t i = 0; i < series.size(); ++i)
    out << format_double(series.grid().time(i)) << ',' << format_double(series[i]) << '\n';
}

void write_trace_csv(const RunTrace& trace, std::ostream& out) {
  const std::size_t d = trace.records.empty() ? static_cast<std::size_t>(trace.d) : trace.records.front().x.dim();
  out << "iter";
  for (std::size_t k = 0; k < d; ++k) out << ",x_" << (k + 1);
  out << ",w,y,running_min_w,ei_at_chosen\n";
  for (const auto& r : trace.records) {
    out << r.iter;
    for (std::size_t k = 0; k < d; ++k) out << ',' << format_double(r.x[k]);
    out << ',' << format_double(r.w) << ',' << format_double(r.y) << ',' << format_double(r.running_min_w)
        << ',' << format_double(r.ei_at_chosen) << '\n';
  }
}

void write_trace_csv(const RunTrace& trace, const fs::path& path) {
  auto out = open_out(path);
  write_trace_csv(trace, out);
}

RunTrace read_trace_csv(const fs::path& path, int n0) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace " + path.string());
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty trace " + where);
  const auto header = split_csv(line);
  if (header.size() < 6 || header.front() != "iter") throw ConfigError("bad trace header in " + where);
  const std::size_t d = header.size() - 5;

  RunTrace trace;
  trace.d = static_cast<int>(d);
  trace.n0 = n0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) throw ConfigError("malformed trace row in " + where);
    TraceRecord r;
    r.iter = static_cast<int>(parse_u64(f[0], where));
    std::vector<double> x(d);
    for (std::size_t k = 0; k < d; ++k) x[k] = parse_double(f[1 + k], where);
    r.x = InputPoint(std::move(x));
    r.w = parse_double(f[d + 1], where);
    r.y = parse_double(f[d + 2], where);
    r.running_min_w = parse_double(f[d + 3], where);
    r.ei_at_chosen = parse_double(f[d + 4], where);
    trace.records.push_back(std::move(r));
  }
  if (!trace.records.empty()) {
    const auto best = std::min_element(trace.records.begin(), trace.records.end(),
                                       [](const auto& a, const auto& b) { return a.w < b.w; });
    trace.x_opt = best->x;
    trace.w_opt = best->w;
  }
  return trace;
}

json to_json(const RunSummary& s) {
  return {{"method", s.method},
          {"seed", s.seed},
          {"x_opt", std::vector<double>(s.x_opt.coords().begin(), s.x_opt.coords().end())},
          {"w_opt", s.w_opt},
          {"evaluations", s.evaluations},
          {"wall_time_seconds", s.wall_time_seconds}};
}

namespace {

void write_summary(const RunSummary& s, const fs::path& path) {
  auto out = open_out(path);
  // nlohmann's dump is shortest round-trip, not fixed 17 digits; write numbers by hand.
  out << "{\n  \"method\": " << json(s.method).dump() << ",\n  \"seed\": " << s.seed << ",\n  \"x_opt\": [";
  for (std::size_t k = 0; k < s.x_opt.dim(); ++k) out << (k ? ", " : "") << format_double(s.x_opt[k]);
  out << "],\n  \"w_opt\": " << format_double(s.w_opt) << ",\n  \"evaluations\": " << s.evaluations
      << ",\n  \"wall_time_seconds\": " << format_double(s.wall_time_seconds) << "\n}\n";
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto sim = make_simulator(config);
  const TargetSeries target = resolve_target(config, *sim);
  const auto d = static_cast<int>(sim->dimension());

  ExperimentResult result;
  for (const std::uint64_t seed : config.resolved_seeds()) {
    SequentialConfig run = config.run;
    run.seed = seed;
    const Design shared = initial_design(run, d);
    for (const SurrogateKind method : config.methods) {
      run.surrogate = method;
      const fs::path dir = config.output_dir / std::string(to_string(method)) / std::to_string(seed);
      const auto t0 = std::chrono::steady_clock::now();
      RunTrace trace;
      try {
        trace = run_sequential(*sim, target, run, &shared);
      } catch (const SequentialAborted& e) {
        write_trace_csv(e.partial(), dir / "trace.csv");
        throw;
      }
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      RunSummary summary{std::string(to_string(method)), seed, trace.x_opt, trace.w_opt,
                         static_cast<int>(trace.records.size()), elapsed};
      write_trace_csv(trace, dir / "trace.csv");
      write_summary(summary, dir / "summary.json");
      result.summaries.push_back(std::move(summary));
    }
  }
  return result;
}

std::vector<ComparisonRow> comparison_rows(const std::vector<LabeledTrace>& traces) {
  std::vector<ComparisonRow> rows;
  for (const auto& t : traces)
    for (const auto& r : t.trace.records) rows.push_back({t.method, t.seed, r.iter, r.running_min_w});
  return rows;
}

void emit_comparison(const std::vector<LabeledTrace>& traces, std::ostream& out) {
  out << "method,seed,iter,running_min_w\n";
  for (const auto& r : comparison_rows(traces))
    out << r.method << ',' << r.seed << ',' << r.iter << ',' << format_double(r.running_min_w) << '\n';
}

std::vector<ComparisonRow> read_comparison_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  const std::string where = path.string();
  std::string line;
  std::getline(in, line);
  if (split_csv(line) != std::vector<std::string>{"method", "seed", "iter", "running_min_w"})
    throw ConfigError("bad comparison header in " + where);
  std::vector<ComparisonRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw ConfigError("malformed comparison row in " + where);
    rows.push_back({f[0], parse_u64(f[1], where), static_cast<int>(parse_u64(f[2], where)),
                    parse_double(f[3], where)});
  }
  return rows;
}

std::vector<LabeledTrace> collect_traces(const fs::path& out_dir) {
  if (!fs::is_directory(out_dir)) throw ConfigError("not a directory: " + out_dir.string());
  std::vector<LabeledTrace> traces;
  for (const auto& method_dir : fs::directory_iterator(out_dir)) {
    if (!method_dir.is_directory()) continue;
    const std::string method = method_dir.path().filename().string();
    if (!parse_surrogate(method)) continue;
    for (const auto& seed_dir : fs::directory_iterator(method_dir.path())) {
      const fs::path trace = seed_dir.path() / "trace.csv";
      if (!fs::is_regular_file(trace)) continue;
      const std::string seed = seed_dir.path().filename().string();
      traces.push_back({method, parse_u64(seed, trace.string()), read_trace_csv(trace)});
    }
  }
  std::sort(traces.begin(), traces.end(), [](const auto& a, const auto& b) {
    return std::tie(a.method, a.seed) < std::tie(b.method, b.seed);
  });
  return traces;
}

}  // namespace tsinv
