#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "jouleheat/driver.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string preset;
  int k = -1;
  int l = -1;
  long seed = -1;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "configuration file (key = value lines)");
    app->add_option("--out", out_dir, "output directory");
    app->add_option("--preset", preset, "data preset (example1..example4 | custom)");
    app->add_option("--k", k, "mesh refinement level");
    app->add_option("--l", l, "time refinement level (tau = 2^-l T)");
    app->add_option("--seed", seed, "seed recorded in run summaries");
  }

  jouleheat::RunConfig resolve() const {
    jouleheat::RunConfig c;
    if (!config_path.empty()) c = jouleheat::parse_config_file(config_path);
    if (!out_dir.empty()) c.out_dir = out_dir;
    if (!preset.empty()) c.preset = preset;
    if (k >= 0) c.k = k;
    if (l >= 0) c.l = l;
    if (seed >= 0) c.seed = seed;
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite element solver for the transient Joule heating system"};
  app.require_subcommand(1);

  CommonFlags solve_flags, conv_flags, adapt_flags, mesh_flags;
  auto* solve = app.add_subcommand("solve", "run one transient solve");
  solve_flags.attach(solve);
  auto* conv = app.add_subcommand("convergence", "run a mesh/time convergence study");
  conv_flags.attach(conv);
  auto* adapt = app.add_subcommand("adapt", "run goal-oriented adaptive refinement");
  adapt_flags.attach(adapt);
  auto* mesh_info = app.add_subcommand("mesh-info", "generate a mesh and report its summary");
  mesh_flags.attach(mesh_info);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      auto art = jouleheat::cmd_solve(solve_flags.resolve());
      std::cout << "solve: " << art.steps << " steps on " << art.vertices
                << " vertices, max energy residual " << art.max_energy_residual << "\n"
                << "wrote " << art.diagnostics_csv << "\n";
    } else if (conv->parsed()) {
      auto art = jouleheat::cmd_convergence(conv_flags.resolve());
      std::cout << "convergence: " << art.report.rows.size() << " levels\n";
      for (const auto& r : art.report.rows)
        std::cout << "  k=" << r.k << " dofs=" << r.dofs << " rel_err_u=" << r.rel_err_u
                  << " rel_err_phi=" << r.rel_err_phi << "\n";
      std::cout << "wrote " << art.report_csv << "\n";
    } else if (adapt->parsed()) {
      auto art = jouleheat::cmd_adapt(adapt_flags.resolve());
      const auto& last = art.adaptive.records.back();
      std::cout << "adapt: final mesh " << last.vertices << " vertices, estimate "
                << last.eta_total << ", goal " << last.goal_value << "\n"
                << "wrote " << art.steps_csv << "\n";
    } else if (mesh_info->parsed()) {
      auto art = jouleheat::cmd_mesh_info(mesh_flags.resolve());
      std::cout << "mesh: " << art.vertices << " vertices, " << art.cells << " cells\n"
                << "wrote " << art.csv_path << "\n";
    }
  } catch (const jouleheat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const jouleheat::SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
