#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "anisomesh/anisomesh.hpp"

namespace am = anisomesh;

namespace {

std::vector<double> read_field_csv(const std::string& path, const std::string& column, std::size_t n_elements) {
  std::ifstream in(path);
  if (!in) throw am::Error(am::ErrorKind::ParseError, "cannot open " + path);
  std::vector<double> values;
  std::string line;
  int number = 0;
  int col = -1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (col < 0) {
      // Header row if the first cell is not numeric.
      char* end = nullptr;
      std::strtod(cells[0].c_str(), &end);
      const bool header = end == cells[0].c_str();
      if (header) {
        col = cells.size() > 1 ? 1 : 0;
        for (std::size_t i = 0; i < cells.size(); ++i)
          if (!column.empty() && cells[i] == column) col = static_cast<int>(i);
        if (!column.empty() && cells[col] != column) {
          throw am::Error(am::ErrorKind::ParseError, "column '" + column + "' not found in " + path);
        }
        continue;
      }
      col = cells.size() > 1 ? 1 : 0;
    }
    if (static_cast<std::size_t>(col) >= cells.size()) {
      throw am::Error(am::ErrorKind::ParseError, path + " line " + std::to_string(number) + ": missing column");
    }
    try {
      values.push_back(std::stod(cells[col]));
    } catch (const std::exception&) {
      throw am::Error(am::ErrorKind::ParseError, path + " line " + std::to_string(number) + ": not a number");
    }
  }
  if (values.size() != n_elements) {
    throw am::Error(am::ErrorKind::ParseError, path + " has " + std::to_string(values.size()) +
                                                   " values for " + std::to_string(n_elements) + " elements");
  }
  return values;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw am::Error(am::ErrorKind::InvalidConfig, "cannot write " + path);
  out << text;
}

int cmd_run(const std::string& config_path) {
  const am::ExperimentConfig config = am::load_config(config_path);
  const auto runs = am::run_experiment(config, &std::cerr);
  for (const auto& r : runs) {
    const auto& last = r.rows.back();
    std::cout << am::to_string(r.strategy) << ": " << r.rows.size() << " levels, final " << last.nelem
              << " elements, " << last.ndof << " nodes, eta " << last.eta << '\n';
  }
  std::cout << "output written to " << config.output << '\n';
  return 0;
}

struct AuditArgs {
  std::string mesh;
  std::string elements_csv;
  std::string pairs_csv;
  double sigma_max = 0.0;
  double c_delta_max = 0.0;
  double c_rotation_max = 0.0;
};

int cmd_audit(const AuditArgs& a) {
  const am::PolyMesh mesh = am::load_mesh(a.mesh);
  const am::RegularityAudit audit = am::audit_mesh(mesh);
  std::cout << "elements            " << mesh.num_elements() << '\n'
            << "nodes               " << mesh.num_nodes() << '\n'
            << "edges               " << mesh.num_edges() << '\n'
            << "sigma (h/rho)       " << audit.sigma << '\n'
            << "sigma reference     " << audit.sigma_reference << '\n'
            << "c_edge (h/|e|)      " << audit.c_edge << '\n'
            << "c_delta             " << audit.c_delta << '\n'
            << "c_R                 " << audit.c_rotation << '\n'
            << "max lambda1/lambda2 " << audit.max_lambda_ratio << '\n'
            << "alpha range         [" << audit.alpha_min << ", " << audit.alpha_max << "]\n"
            << "max node valence    " << audit.max_valence << '\n';
  if (auto b = am::perturbed_aspect_bound(audit.sigma_reference, audit.c_delta, audit.c_rotation)) {
    std::cout << "mapped-patch bound  " << *b << '\n';
  }
  std::cout << "log10(lambda ratio) histogram:";
  for (auto c : audit.lambda_ratio_log10.counts) std::cout << ' ' << c;
  std::cout << "\nalpha histogram:";
  for (auto c : audit.alpha.counts) std::cout << ' ' << c;
  std::cout << '\n';
  if (!a.elements_csv.empty()) {
    std::ostringstream s;
    am::write_element_audit_csv(audit, s);
    write_text(a.elements_csv, s.str());
  }
  if (!a.pairs_csv.empty()) {
    std::ostringstream s;
    am::write_pair_audit_csv(audit, s);
    write_text(a.pairs_csv, s.str());
  }
  int status = 0;
  auto over = [&](const char* name, double value, double limit) {
    if (limit > 0.0 && value > limit) {
      std::cerr << name << " = " << value << " exceeds the threshold " << limit << '\n';
      status = 2;
    }
  };
  over("sigma", audit.sigma, a.sigma_max);
  over("c_delta", audit.c_delta, a.c_delta_max);
  over("c_R", audit.c_rotation, a.c_rotation_max);
  return status;
}

struct RenderArgs {
  std::string mesh;
  std::string field_csv;
  std::string column;
  std::string output = "-";
  std::vector<double> zoom;
  double width = 800.0;
};

int cmd_render(const RenderArgs& a) {
  const am::PolyMesh mesh = am::load_mesh(a.mesh);
  am::SvgOptions opts;
  opts.width = a.width;
  if (!a.zoom.empty()) {
    if (a.zoom.size() != 4) throw am::Error(am::ErrorKind::InvalidConfig, "--zoom takes x0 y0 x1 y1");
    opts.zoom = std::pair{am::Vec2(a.zoom[0], a.zoom[1]), am::Vec2(a.zoom[2], a.zoom[3])};
  }
  std::vector<double> values;
  if (!a.field_csv.empty()) values = read_field_csv(a.field_csv, a.column, mesh.num_elements());
  write_text(a.output, am::render_svg(mesh, values.empty() ? nullptr : &values, opts));
  return 0;
}

struct VerifyArgs {
  std::string sweep = "all";
  std::string mesh;
  std::string output;
};

int cmd_verify(const VerifyArgs& a) {
  std::vector<am::SweepResult> results;
  auto want = [&](const char* s) { return a.sweep == "all" || a.sweep == s; };
  if (want("trace")) results.push_back(am::sweep_trace(2.0, true));
  if (want("poincare")) results.push_back(am::sweep_poincare(2.0, true));
  if (want("h1")) results.push_back(am::sweep_h1());
  if (want("neighbour")) {
    const am::ScalarField v = am::tanh_layer();
    std::optional<am::PolyMesh> mesh;
    if (!a.mesh.empty()) {
      mesh.emplace(am::load_mesh(a.mesh));
    } else {
      am::RefineConfig rc;
      rc.strategy = am::Strategy::Anisotropic;
      rc.max_levels = 6;
      auto levels = am::adaptive_loop(am::grid_mesh(4, 4, am::boundary_spec("neumann")), v, rc);
      mesh.emplace(levels.back().mesh);
    }
    std::vector<am::ScalarField> fields = {v, am::expression_field("x1^2 - 3*x1*x2 + x2^3")};
    results.push_back(am::sweep_neighbour(*mesh, fields));
  }
  if (results.empty()) throw am::Error(am::ErrorKind::InvalidConfig, "unknown sweep '" + a.sweep + "'");
  std::ostringstream csv;
  csv << "name,context,ratio\n";
  bool ok = true;
  for (const auto& r : results) {
    std::ostringstream part;
    am::write_sweep_csv(r, part);
    const std::string text = part.str();
    csv << text.substr(text.find('\n') + 1);
    std::cerr << (r.passed ? "PASS " : "FAIL ") << r.summary << '\n';
    ok = ok && r.passed;
  }
  if (!a.output.empty()) write_text(a.output, csv.str());
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anisotropic polygonal mesh adaptation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an adaptive experiment described by a config file");
  run->add_option("config", config_path, "key=value or JSON config")->required()->check(CLI::ExistingFile);

  AuditArgs audit_args;
  auto* audit = app.add_subcommand("audit", "Report regularity constants of a mesh");
  audit->add_option("mesh", audit_args.mesh, "mesh file")->required()->check(CLI::ExistingFile);
  audit->add_option("--elements", audit_args.elements_csv, "write the per-element CSV here ('-' for stdout)");
  audit->add_option("--pairs", audit_args.pairs_csv, "write the neighbour-pair CSV here ('-' for stdout)");
  audit->add_option("--sigma-max", audit_args.sigma_max, "fail (exit 2) if h/rho exceeds this");
  audit->add_option("--c-delta-max", audit_args.c_delta_max, "fail (exit 2) if c_delta exceeds this");
  audit->add_option("--c-rotation-max", audit_args.c_rotation_max, "fail (exit 2) if c_R exceeds this");

  RenderArgs render_args;
  auto* render = app.add_subcommand("render", "Render a mesh as SVG");
  render->add_option("mesh", render_args.mesh, "mesh file")->required()->check(CLI::ExistingFile);
  render->add_option("--field", render_args.field_csv, "per-element scalar CSV used as fill")
      ->check(CLI::ExistingFile);
  render->add_option("--column", render_args.column, "CSV column to use (default: second column)");
  render->add_option("-o,--output", render_args.output, "output file ('-' for stdout)");
  render->add_option("--zoom", render_args.zoom, "crop box x0 y0 x1 y1")->expected(4);
  render->add_option("--width", render_args.width, "image width in pixels");

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "Run the inequality stability sweeps");
  verify->add_option("--sweep", verify_args.sweep, "trace, poincare, h1, neighbour or all")
      ->check(CLI::IsMember({"all", "trace", "poincare", "h1", "neighbour"}));
  verify->add_option("--mesh", verify_args.mesh, "mesh for the neighbour sweep")->check(CLI::ExistingFile);
  verify->add_option("-o,--output", verify_args.output, "write name,context,ratio CSV here ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path);
    if (*audit) return cmd_audit(audit_args);
    if (*render) return cmd_render(render_args);
    if (*verify) return cmd_verify(verify_args);
  } catch (const std::exception& e) {
    std::cerr << "anisomesh: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
