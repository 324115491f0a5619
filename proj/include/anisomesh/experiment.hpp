#pragma once

// Experiment driver: initial mesh, adaptive runs per strategy, and per-level
// artifacts (mesh, audits, indicators, SVG) plus convergence tables.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "anisomesh/error.hpp"
#include "anisomesh/expression.hpp"
#include "anisomesh/generators.hpp"
#include "anisomesh/indicator.hpp"
#include "anisomesh/interp.hpp"
#include "anisomesh/mesh.hpp"
#include "anisomesh/mesh_io.hpp"
#include "anisomesh/refine.hpp"
#include "anisomesh/regularity.hpp"
#include "anisomesh/svg.hpp"

namespace anisomesh {

struct ExperimentConfig {
  std::string field = "tanh_layer";
  /// Mesh file path, "grid NX NY" or "polygonal NX NY JITTER SEED [MERGE_PROB]".
  std::string mesh = "grid 4 4";
  /// uniform, isotropic, anisotropic or compare (all three).
  std::string strategy = "anisotropic";
  int levels = 12;
  /// Level cap for the uniform strategy in compare runs; negative means `levels`.
  int uniform_levels = -1;
  double marking_factor = 0.9;
  int quad_depth = -1;
  int basis_depth = 3;
  std::string output = "out";
  std::string boundary = "neumann";
  bool interp = true;
  bool artifacts = true;
  bool timestamps = true;
  /// Directory that relative mesh paths are resolved against.
  std::filesystem::path base_dir = ".";
};

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorKind::InvalidConfig, "key '" + key + "' expects a boolean, got '" + v + "'");
}

inline void apply_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
  auto to_int = [&](const std::string& v) {
    try {
      std::size_t used = 0;
      const int r = std::stoi(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidConfig, "key '" + key + "' expects an integer, got '" + v + "'");
    }
  };
  auto to_double = [&](const std::string& v) {
    try {
      std::size_t used = 0;
      const double r = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidConfig, "key '" + key + "' expects a number, got '" + v + "'");
    }
  };
  if (key == "field") c.field = value;
  else if (key == "mesh") c.mesh = value;
  else if (key == "strategy") c.strategy = value;
  else if (key == "levels") c.levels = to_int(value);
  else if (key == "uniform_levels") c.uniform_levels = to_int(value);
  else if (key == "marking_factor") c.marking_factor = to_double(value);
  else if (key == "quad_depth") c.quad_depth = to_int(value);
  else if (key == "basis_depth") c.basis_depth = value == "auto" ? -1 : to_int(value);
  else if (key == "output") c.output = value;
  else if (key == "boundary") c.boundary = value;
  else if (key == "interp") c.interp = parse_bool(key, value);
  else if (key == "artifacts") c.artifacts = parse_bool(key, value);
  else if (key == "timestamps") c.timestamps = parse_bool(key, value);
  else throw Error(ErrorKind::InvalidConfig, "unknown key '" + key + "'");
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline void validate(const ExperimentConfig& c) {
  if (c.levels < 0) throw Error(ErrorKind::InvalidConfig, "levels must be non-negative");
  if (!(c.marking_factor > 0.0 && c.marking_factor <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "marking_factor must lie in (0, 1]");
  }
  if (c.strategy != "compare") parse_strategy(c.strategy);
  if (c.boundary != "neumann" && c.boundary != "dirichlet") {
    throw Error(ErrorKind::InvalidConfig, "boundary must be 'neumann' or 'dirichlet'");
  }
}

/// Parses key=value text or a JSON object (detected by a leading '{').
inline ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = ".") {
  ExperimentConfig c;
  c.base_dir = base_dir;
  const std::string body = detail::trim(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::ParseError, std::string("config JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::ParseError, "config JSON must be an object");
    for (const auto& [key, value] : j.items()) {
      std::string v;
      if (value.is_string()) v = value.get<std::string>();
      else if (value.is_boolean()) v = value.get<bool>() ? "true" : "false";
      else if (value.is_number_integer()) v = std::to_string(value.get<long long>());
      else if (value.is_number()) {
        std::ostringstream ss;
        ss << std::setprecision(17) << value.get<double>();
        v = ss.str();
      } else {
        throw Error(ErrorKind::InvalidConfig, "key '" + key + "' has an unsupported JSON type");
      }
      detail::apply_key(c, key, v);
    }
  } else {
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorKind::ParseError, "config line " + std::to_string(number) + ": expected key=value");
      }
      detail::apply_key(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
  }
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::filesystem::path(path).parent_path());
}

inline BoundarySpec boundary_spec(const std::string& name) {
  BoundarySpec s;
  s.default_tag = name == "dirichlet" ? BoundaryTag::dirichlet : BoundaryTag::neumann;
  return s;
}

/// Builds the initial mesh from a generator spec or loads it from a file.
inline PolyMesh make_initial_mesh(const std::string& spec, const BoundarySpec& boundary,
                                  const std::filesystem::path& base_dir = ".") {
  std::istringstream in(spec);
  std::string kind;
  in >> kind;
  if (kind == "grid") {
    int nx = 0, ny = 0;
    if (!(in >> nx >> ny)) throw Error(ErrorKind::InvalidConfig, "mesh spec 'grid NX NY' expected");
    return grid_mesh(nx, ny, boundary);
  }
  if (kind == "polygonal") {
    int nx = 0, ny = 0;
    double jitter = 0.0;
    std::uint64_t seed = 0;
    if (!(in >> nx >> ny >> jitter >> seed)) {
      throw Error(ErrorKind::InvalidConfig, "mesh spec 'polygonal NX NY JITTER SEED [MERGE_PROB]' expected");
    }
    double merge = 0.0;
    in >> merge;
    return polygonal_mesh(nx, ny, jitter, seed, merge, boundary);
  }
  std::filesystem::path p(spec);
  if (p.is_relative()) p = base_dir / p;
  return load_mesh(p.string());
}

struct LevelRow {
  int level = 0;
  std::size_t ndof = 0;
  std::size_t nelem = 0;
  double eta = 0.0;
  double l2_pointwise = std::nan("");
  double l2_clement = std::nan("");
  double wall_ms = 0.0;
  std::size_t marked = 0;
  std::size_t skipped = 0;
  double max_lambda_ratio = 1.0;
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  /// |sum |K| - |Omega|| / |Omega|.
  double area_error = 0.0;
};

struct StrategyRun {
  Strategy strategy;
  std::vector<LevelRow> rows;
};

inline void write_convergence_csv(const std::vector<LevelRow>& rows, std::ostream& out, bool timestamp,
                                  const std::string& strategy_column = "") {
  if (timestamp) {
    const std::time_t now = std::time(nullptr);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    out << "# generated " << buf << '\n';
  }
  if (!strategy_column.empty()) out << "strategy,";
  out << "level,ndof,nelem,eta,l2_pointwise,l2_clement,wall_ms\n";
  out << std::setprecision(10);
  for (const auto& r : rows) {
    if (!strategy_column.empty()) out << strategy_column << ',';
    out << r.level << ',' << r.ndof << ',' << r.nelem << ',' << r.eta << ',' << r.l2_pointwise << ',' << r.l2_clement
        << ',' << std::fixed << std::setprecision(1) << r.wall_ms << std::defaultfloat << std::setprecision(10)
        << '\n';
  }
}

struct RunOptions {
  int basis_depth = 3;
  bool interp = true;
  bool timestamps = true;
  /// Per-level artifact directory root; empty disables artifacts.
  std::filesystem::path artifact_dir;
  std::ostream* log = nullptr;
};

/// Adaptive run of one strategy; rows carry the convergence data and the
/// per-level mesh statistics. `on_level` sees every level in order.
inline StrategyRun run_strategy(const PolyMesh& initial, const ScalarField& v, const RefineConfig& config,
                                const RunOptions& opts = {},
                                const std::function<void(const LevelResult&)>& on_level = {}) {
  StrategyRun run{config.strategy, {}};
  BasisCache cache;
  const double omega = initial.domain_area();
  auto tick = std::chrono::steady_clock::now();
  adaptive_loop(initial, v, config, [&](const LevelResult& lr) {
    const auto start = std::chrono::steady_clock::now();
    LevelRow row;
    row.level = lr.level;
    row.ndof = lr.mesh.num_nodes();
    row.nelem = lr.mesh.num_elements();
    row.eta = lr.report.eta_global;
    row.marked = lr.report.marked.size();
    row.skipped = lr.step ? lr.step->skipped.size() : 0;
    row.wall_ms = opts.timestamps ? std::chrono::duration<double, std::milli>(start - tick).count() : 0.0;
    row.area_error = std::abs(lr.mesh.total_area() - omega) / omega;
    row.alpha_min = std::numeric_limits<double>::infinity();
    for (const auto& el : lr.mesh.elements()) {
      row.max_lambda_ratio = std::max(row.max_lambda_ratio, el.spectrum.anisotropy_ratio());
      row.alpha_min = std::min(row.alpha_min, el.map.alpha);
      row.alpha_max = std::max(row.alpha_max, el.map.alpha);
    }
    if (opts.interp) {
      const BasisSet bases = build_bases(lr.mesh, opts.basis_depth, &cache);
      row.l2_pointwise = l2_error(lr.mesh, v, coefficients(lr.mesh, v, Scheme::Pointwise, config.quadrature), bases,
                                  config.quadrature);
      row.l2_clement = l2_error(lr.mesh, v, coefficients(lr.mesh, v, Scheme::Clement, config.quadrature), bases,
                                config.quadrature);
    }
    if (!opts.artifact_dir.empty()) {
      std::ostringstream name;
      name << "level_" << std::setw(2) << std::setfill('0') << lr.level;
      const auto dir = opts.artifact_dir / name.str();
      std::filesystem::create_directories(dir);
      save_mesh(lr.mesh, (dir / "mesh.txt").string());
      const RegularityAudit audit = audit_mesh(lr.mesh);
      std::ofstream(dir / "audit_elements.csv") << [&] {
        std::ostringstream s;
        write_element_audit_csv(audit, s);
        return s.str();
      }();
      std::ofstream(dir / "audit_pairs.csv") << [&] {
        std::ostringstream s;
        write_pair_audit_csv(audit, s);
        return s.str();
      }();
      std::ofstream(dir / "indicator.csv") << [&] {
        std::ostringstream s;
        write_indicator_csv(lr.mesh, lr.report, s);
        return s.str();
      }();
      std::ofstream(dir / "mesh.svg") << render_svg(lr.mesh, &lr.report.eta_local);
    }
    if (opts.log != nullptr) {
      *opts.log << to_string(config.strategy) << " level " << lr.level << ": " << row.nelem << " elements, "
                << row.ndof << " nodes, eta = " << row.eta;
      if (opts.interp) *opts.log << ", l2_pw = " << row.l2_pointwise;
      if (row.skipped > 0) *opts.log << ", skipped " << row.skipped;
      *opts.log << '\n';
      if (lr.step) {
        for (const auto& s : lr.step->skipped) *opts.log << "  skipped element " << s.element << ": " << s.reason << '\n';
      }
    }
    run.rows.push_back(row);
    if (on_level) on_level(lr);
    tick = std::chrono::steady_clock::now();
  });
  return run;
}

/// Runs the configured experiment and writes all artifacts under config.output.
inline std::vector<StrategyRun> run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr) {
  validate(config);
  const ScalarField v = make_field(config.field);
  const PolyMesh initial = make_initial_mesh(config.mesh, boundary_spec(config.boundary), config.base_dir);
  std::vector<Strategy> strategies;
  if (config.strategy == "compare") strategies = {Strategy::Uniform, Strategy::Isotropic, Strategy::Anisotropic};
  else strategies = {parse_strategy(config.strategy)};

  const std::filesystem::path out_dir(config.output);
  std::filesystem::create_directories(out_dir);
  std::vector<StrategyRun> runs;
  for (Strategy s : strategies) {
    RefineConfig rc;
    rc.strategy = s;
    rc.marking_factor = config.marking_factor;
    rc.max_levels = (s == Strategy::Uniform && config.uniform_levels >= 0) ? config.uniform_levels : config.levels;
    rc.quadrature.depth = config.quad_depth;
    RunOptions ro;
    ro.basis_depth = config.basis_depth;
    ro.interp = config.interp;
    ro.timestamps = config.timestamps;
    ro.log = log;
    const auto dir = out_dir / to_string(s);
    std::filesystem::create_directories(dir);
    if (config.artifacts) ro.artifact_dir = dir;
    runs.push_back(run_strategy(initial, v, rc, ro));
    std::ofstream csv(dir / "convergence.csv");
    write_convergence_csv(runs.back().rows, csv, config.timestamps);
  }
  if (runs.size() > 1) {
    std::ofstream csv(out_dir / "comparison.csv");
    bool first = true;
    for (const auto& r : runs) {
      std::ostringstream part;
      write_convergence_csv(r.rows, part, false, to_string(r.strategy));
      std::string text = part.str();
      if (!first) text.erase(0, text.find('\n') + 1);
      else if (config.timestamps) {
        std::ostringstream stamp;
        write_convergence_csv({}, stamp, true);
        csv << stamp.str().substr(0, stamp.str().find('\n') + 1);
      }
      csv << text;
      first = false;
    }
  }
  return runs;
}

}  // namespace anisomesh
