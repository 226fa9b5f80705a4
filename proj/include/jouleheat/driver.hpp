#ifndef JOULEHEAT_DRIVER_HPP
#define JOULEHEAT_DRIVER_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "jouleheat/adapt.hpp"
#include "jouleheat/config.hpp"
#include "jouleheat/io.hpp"
#include "jouleheat/mms.hpp"
#include "jouleheat/norms.hpp"
#include "jouleheat/presets.hpp"
#include "jouleheat/stepper.hpp"

namespace jouleheat {

namespace detail {

inline std::string step_file_name(const std::string& dir, const std::string& stem, int n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04d.vtk", stem.c_str(), n);
  return dir + "/" + buf;
}

}  // namespace detail

struct SolveArtifacts {
  std::string diagnostics_csv;
  std::string summary_file;
  int steps = 0;
  int vertices = 0;
  double max_energy_residual = 0.0;
  double max_final_update = 0.0;
  int max_fp_iterations = 0;
  TransientSolution solution;
  Mesh mesh;
};

/// Runs one transient solve and writes the diagnostics table, the VTK series
/// and a key=value run summary under config.out_dir.
inline SolveArtifacts cmd_solve(const RunConfig& config) {
  ResolvedRun run = resolve_run(config);
  Mesh mesh = build_mesh(run.geometry, config.k);
  TimeGrid grid{config.T, config.l};

  JouleStepper stepper(mesh, run.data, grid, run.fp);
  auto solution = stepper.run();

  ensure_directory(config.out_dir);
  SolveArtifacts art;
  art.mesh = std::move(mesh);
  art.diagnostics_csv = config.out_dir + "/diagnostics.csv";
  art.summary_file = config.out_dir + "/summary.txt";
  art.steps = grid.steps();
  art.vertices = art.mesh.vertex_count();

  {
    CsvWriter csv(art.diagnostics_csv);
    csv.row({"n", "t", "fp_iters", "energy_residual", "grad_phi_norm", "clamp_active_fraction"});
    for (const auto& s : solution.steps) {
      csv.row({CsvWriter::num(s.n), CsvWriter::num(s.t), CsvWriter::num(s.fp_iterations),
               CsvWriter::num(s.energy_residual), CsvWriter::num(s.grad_phi_tilde_norm),
               CsvWriter::num(s.clamp_active_fraction)});
      art.max_energy_residual = std::max(art.max_energy_residual, s.energy_residual);
      art.max_final_update = std::max(art.max_final_update, s.final_update);
      art.max_fp_iterations = std::max(art.max_fp_iterations, s.fp_iterations);
    }
  }

  if (config.write_vtk) {
    for (int n = 0; n <= grid.steps(); ++n) {
      write_vtk(detail::step_file_name(config.out_dir, "solution", n), art.mesh,
                {{"u", &solution.u[n]}, {"phi", &solution.phi[n]}});
    }
  }

  {
    SummaryWriter s(art.summary_file);
    s.kv("preset", config.preset);
    s.kv("geometry", run.geometry);
    s.kv("k", config.k);
    s.kv("l", config.l);
    s.kv("T", config.T);
    s.kv("tau", grid.tau());
    s.kv("steps", grid.steps());
    s.kv("vertices", art.mesh.vertex_count());
    s.kv("cells", art.mesh.cell_count());
    s.kv("h_max", art.mesh.max_diameter());
    s.kv("clamp_a", stepper.clamp().a);
    s.kv("clamp_b", stepper.clamp().b);
    s.kv("max_energy_residual", art.max_energy_residual);
    s.kv("max_fp_iterations", art.max_fp_iterations);
    s.kv("seed", static_cast<int>(config.seed));
    s.kv("status", "ok");
  }

  art.solution = std::move(solution);
  return art;
}

struct ConvergenceArtifacts {
  std::string report_csv;
  std::string plot_csv;
  ErrorReport report;
};

/// Convergence study over k = k_min..k_max. The MMS preset (example1)
/// measures errors against the exact solution after the residual-audit gate;
/// the other presets compare against a nested reference run at reference_k
/// (default k_max + 1). l follows l_rule: coupled (l = k) or fixed.
inline ConvergenceArtifacts cmd_convergence(const RunConfig& config) {
  if (config.k_min < 1 || config.k_max < config.k_min || config.k_max > kMaxLevel)
    throw ConfigError("convergence: need 1 <= k_min <= k_max <= " + std::to_string(kMaxLevel));
  if (config.l_rule != "coupled" && config.l_rule != "fixed")
    throw ConfigError("l_rule must be coupled or fixed");
  ResolvedRun run = resolve_run(config);
  const bool mms_mode = config.preset == "example1";

  auto level_of = [&](int k) { return config.l_rule == "coupled" ? k : config.l_fixed; };

  MmsCase mc;
  if (mms_mode) {
    mc = example1_case();
    residual_audit(mc);  // hard gate before any solve
  }

  const int ref_k = mms_mode ? config.k_max
                             : (config.reference_k > 0 ? config.reference_k : config.k_max + 1);
  if (!mms_mode && ref_k <= config.k_max)
    throw ConfigError("convergence: reference_k must exceed k_max");

  std::vector<Mesh> meshes;
  meshes.push_back(build_mesh(run.geometry, config.k_min));
  for (int k = config.k_min + 1; k <= ref_k; ++k) meshes.push_back(refine_uniform(meshes.back()));

  ErrorReport report;
  std::vector<TransientSolution> solutions;
  for (int k = config.k_min; k <= config.k_max; ++k) {
    const Mesh& mesh = meshes[k - config.k_min];
    TimeGrid grid{config.T, level_of(k)};
    auto sol = run_transient(mesh, run.data, grid, run.fp);
    ErrorReportRow row;
    row.k = k;
    row.h = mesh.max_diameter();
    row.tau = grid.tau();
    row.dofs = mesh.vertex_count();
    if (mms_mode) {
      ExactField exact_u{mc.u, mc.grad_u};
      ExactField exact_phi{[&mc](const Vec3& x, double) { return mc.phi(x); },
                           [&mc](const Vec3& x, double) { return mc.grad_phi(x); }};
      row.rel_err_u = space_time_error(mesh, sol.u, exact_u, grid).relative;
      row.rel_err_phi = space_time_error(mesh, sol.phi, exact_phi, grid).relative;
      report.rows.push_back(row);
    } else {
      report.rows.push_back(row);  // errors filled after the reference run
      solutions.push_back(std::move(sol));
    }
  }

  if (!mms_mode) {
    const Mesh& ref_mesh = meshes.back();
    TimeGrid ref_grid{config.T, level_of(ref_k)};
    auto ref_sol = run_transient(ref_mesh, run.data, ref_grid, run.fp);
    for (int k = config.k_min; k <= config.k_max; ++k) {
      std::vector<const Mesh*> chain;
      for (int j = k + 1; j <= ref_k; ++j) chain.push_back(&meshes[j - config.k_min]);
      TimeGrid grid{config.T, level_of(k)};
      auto err = reference_compare(solutions[k - config.k_min], grid, chain, ref_sol, ref_grid,
                                   ref_mesh);
      report.rows[k - config.k_min].rel_err_u = err.rel_u;
      report.rows[k - config.k_min].rel_err_phi = err.rel_phi;
    }
  }
  report.validate();

  ensure_directory(config.out_dir);
  ConvergenceArtifacts art;
  art.report_csv = config.out_dir + "/report.csv";
  art.plot_csv = config.out_dir + "/plot.csv";
  {
    CsvWriter csv(art.report_csv);
    csv.row({"k", "h", "tau", "dofs", "rel_err_u", "rel_err_phi", "order_u", "order_phi"});
    auto ou = report.rows.size() > 1 ? report.orders_u() : std::vector<double>{};
    auto op = report.rows.size() > 1 ? report.orders_phi() : std::vector<double>{};
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
      const auto& r = report.rows[i];
      csv.row({CsvWriter::num(r.k), CsvWriter::num(r.h), CsvWriter::num(r.tau),
               CsvWriter::num(r.dofs), CsvWriter::num(r.rel_err_u), CsvWriter::num(r.rel_err_phi),
               i == 0 ? "" : CsvWriter::num(ou[i - 1]), i == 0 ? "" : CsvWriter::num(op[i - 1])});
    }
  }
  {
    CsvWriter csv(art.plot_csv);
    csv.row({"log10_h", "log10_rel_err_u", "log10_rel_err_phi"});
    for (const auto& r : report.rows)
      csv.row({CsvWriter::num(std::log10(r.h)), CsvWriter::num(std::log10(r.rel_err_u)),
               CsvWriter::num(std::log10(r.rel_err_phi))});
  }
  art.report = std::move(report);
  return art;
}

struct AdaptArtifacts {
  std::string steps_csv;
  std::string efficiency_csv;
  AdaptResult adaptive;
  AdaptResult baseline;  // only when baseline_k >= 0
  bool has_baseline = false;
};

/// Goal-oriented adaptive run; per-step CSV (n, vertices, total estimate,
/// goal value), per-step VTK with the indicators as cell data, and an
/// efficiency table (paired with a uniform baseline run when requested).
inline AdaptArtifacts cmd_adapt(const RunConfig& config) {
  ResolvedRun run = resolve_run(config);
  Mesh mesh = build_mesh(run.geometry, config.k);
  TimeGrid grid{config.T, config.l};

  AdaptConfig acfg;
  acfg.theta = config.theta;
  acfg.eta_tol = config.eta_tol;
  acfg.max_vertices = config.max_vertices;
  acfg.fp = run.fp;
  acfg.dual.linear = run.fp.linear;
  acfg.dual.refined_dual = config.refined_dual;

  AdaptArtifacts art;
  art.adaptive = adapt_run(run.data, mesh, grid, acfg);

  ensure_directory(config.out_dir);
  art.steps_csv = config.out_dir + "/adapt_steps.csv";
  {
    CsvWriter csv(art.steps_csv);
    csv.row({"n", "vertices", "eta_total", "goal_value"});
    for (const auto& rec : art.adaptive.records)
      csv.row({CsvWriter::num(rec.n), CsvWriter::num(rec.vertices), CsvWriter::num(rec.eta_total),
               CsvWriter::num(rec.goal_value)});
  }
  if (config.write_vtk) {
    for (std::size_t i = 0; i < art.adaptive.meshes.size(); ++i) {
      write_vtk(detail::step_file_name(config.out_dir, "adapt", static_cast<int>(i) + 1),
                art.adaptive.meshes[i], {{"u", &art.adaptive.u[i]}},
                {{"eta", &art.adaptive.indicators[i].eta}});
    }
  }

  art.efficiency_csv = config.out_dir + "/efficiency.csv";
  CsvWriter eff(art.efficiency_csv);
  eff.row({"run", "k", "final_vertices", "final_eta_total", "final_goal_value"});
  eff.row({"adaptive", CsvWriter::num(config.k),
           CsvWriter::num(art.adaptive.records.back().vertices),
           CsvWriter::num(art.adaptive.records.back().eta_total),
           CsvWriter::num(art.adaptive.records.back().goal_value)});

  if (config.baseline_k >= 0) {
    if (config.baseline_k > kMaxLevel) throw ConfigError("baseline_k out of range");
    Mesh base_mesh = build_mesh(run.geometry, config.baseline_k);
    AdaptConfig base_cfg = acfg;
    base_cfg.eta_tol = std::numeric_limits<double>::infinity();  // uniform: never refine
    art.baseline = adapt_run(run.data, base_mesh, grid, base_cfg);
    art.has_baseline = true;
    eff.row({"uniform", CsvWriter::num(config.baseline_k),
             CsvWriter::num(art.baseline.records.back().vertices),
             CsvWriter::num(art.baseline.records.back().eta_total),
             CsvWriter::num(art.baseline.records.back().goal_value)});
  }
  return art;
}

struct MeshInfoArtifacts {
  std::string csv_path;
  int vertices = 0;
  int cells = 0;
};

inline MeshInfoArtifacts cmd_mesh_info(const RunConfig& config) {
  std::string geometry = config.geometry;
  if (geometry.empty()) geometry = resolve_run(config).geometry;
  Mesh mesh = build_mesh(geometry, config.k);
  ensure_directory(config.out_dir);
  MeshInfoArtifacts art;
  art.csv_path = config.out_dir + "/mesh.csv";
  art.vertices = mesh.vertex_count();
  art.cells = mesh.cell_count();
  write_mesh_summary(art.csv_path, geometry, config.k, mesh);
  if (config.write_vtk) write_vtk(config.out_dir + "/mesh.vtk", mesh);
  return art;
}

}  // namespace jouleheat

#endif
