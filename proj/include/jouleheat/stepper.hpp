#ifndef JOULEHEAT_STEPPER_HPP
#define JOULEHEAT_STEPPER_HPP

#include <cmath>
#include <string>
#include <vector>

#include "jouleheat/fem.hpp"
#include "jouleheat/mesh.hpp"
#include "jouleheat/problem.hpp"

namespace jouleheat {

struct FixedPointConfig {
  double tol = 1e-10;       // relative M-norm update tolerance
  int max_iter = 50;
  double eps = 1e-30;       // division guard in the relative criterion
  SolverConfig linear;      // CG settings for both per-step systems
};

struct StepDiagnostics {
  int n = 0;
  double t = 0.0;
  int fp_iterations = 0;
  double final_update = 0.0;        // relative M-norm of the last update
  double worst_contraction = 0.0;   // max ratio of consecutive update norms (0 if < 2 updates)
  double energy_residual = 0.0;     // relative residual of the discrete energy identity
  double grad_phi_tilde_norm = 0.0;
  double grad_g_phi_norm = 0.0;
  double clamp_active_fraction = 0.0;
  double max_linear_residual = 0.0;
};

struct TransientSolution {
  std::vector<std::vector<double>> u;    // one coefficient vector per time level 0..N
  std::vector<std::vector<double>> phi;
  std::vector<StepDiagnostics> steps;    // per level 1..N

  void check_finite() const {
    for (const auto& v : u)
      for (double x : v)
        if (!std::isfinite(x)) throw SolverError("non-finite temperature coefficient");
    for (const auto& v : phi)
      for (double x : v)
        if (!std::isfinite(x)) throw SolverError("non-finite potential coefficient");
  }
};

/// Backward Euler driver for the coupled temperature/potential system on a
/// fixed mesh. Each step is the Picard iteration
///   phi  <- potential solve at the current temperature iterate,
///   beta <- (M + tau K)^-1 (M alpha_prev + tau F(gamma, t_n) + tau G(t_n)),
/// stopped on the relative M-norm update (or when the current iterate already
/// satisfies the assembled step equation).
class JouleStepper {
 public:
  JouleStepper(const Mesh& mesh, const ProblemData& data, const TimeGrid& grid,
               const FixedPointConfig& fp = {})
      : mesh_(&mesh), data_(&data), grid_(grid), fp_(fp) {
    space_u_ = FeSpace::build(mesh, data.bc_u);
    space_phi_ = FeSpace::build(mesh, data.bc_phi);
    lift_u_ = DirichletLift(space_u_, data.g_u);
    lift_phi_ = DirichletLift(space_phi_, data.g_phi);
    audit_sigma(data.sigma);
    clamp_ = resolve_cutoff_bounds(data, space_phi_, lift_phi_, grid);

    mass_ = assemble_mass(space_u_);
    stiffness_unit_ = assemble_stiffness(space_u_, 1.0);
    sigma_stiffness_ = assemble_stiffness(space_phi_, 1.0);  // pattern holder

    const double tau = grid_.tau();
    heat_matrix_ = mass_;
    for (int r = 0; r < heat_matrix_.rows(); ++r)
      for (int k = heat_matrix_.row_begin(r); k < heat_matrix_.row_end(r); ++k)
        heat_matrix_.value(k) += tau * stiffness_unit_.value(k);
    std::vector<double> zero_bc(space_u_.dof_count(), 0.0);
    std::vector<double> dummy(space_u_.dof_count(), 0.0);
    apply_dirichlet(heat_matrix_, dummy, space_u_.on_dirichlet, zero_bc);

    if (data.neumann_g) {
      for (int tag : data.neumann_flux_tags)
        if (!space_phi_.partition.neumann_tags.count(tag))
          throw ConfigError("Neumann datum applied on non-Neumann tag " + std::to_string(tag));
    }
  }

  const FeSpace& space_u() const { return space_u_; }
  const FeSpace& space_phi() const { return space_phi_; }
  const SparseMatrix& mass() const { return mass_; }
  const SparseMatrix& stiffness_unit() const { return stiffness_unit_; }
  const CutoffBounds& clamp() const { return clamp_; }
  const TimeGrid& grid() const { return grid_; }
  const DirichletLift& lift_u() const { return lift_u_; }
  const DirichletLift& lift_phi() const { return lift_phi_; }

  double m_norm(const std::vector<double>& v) const {
    return std::sqrt(std::max(0.0, jouleheat::dot(v, mass_.multiply(v))));
  }
  double grad_norm(const std::vector<double>& v) const {
    return std::sqrt(std::max(0.0, jouleheat::dot(v, stiffness_unit_.multiply(v))));
  }

  /// L2 projection of u0 - g_u(0) onto the constrained space plus the
  /// g_u(0) lifting: <u0_h, z> = <u0, z> for all constrained z.
  std::vector<double> project_initial() const {
    auto g0 = lift_u_.values(grid_.time(0));
    auto b = assemble_load(space_u_, data_->u0, grid_.time(0));
    auto mg = mass_.multiply(g0);
    for (int i = 0; i < space_u_.dof_count(); ++i) b[i] -= mg[i];

    SparseMatrix m = mass_;
    std::vector<double> zero_bc(space_u_.dof_count(), 0.0);
    apply_dirichlet(m, b, space_u_.on_dirichlet, zero_bc);
    SolverConfig tight = fp_.linear;
    tight.rel_tol = std::min(tight.rel_tol, 1e-12);
    auto result = cg_solve(m, b, tight);
    for (int i = 0; i < space_u_.dof_count(); ++i) result.x[i] += g0[i];
    return result.x;
  }

  /// Potential solve at temperature iterate u_vals and time t:
  /// phi = g_phi(t) on the Dirichlet vertices, <sigma(u) grad phi, grad w> =
  /// <g_N, w>_Gamma_N for all constrained w.
  std::vector<double> solve_potential(const std::vector<double>& u_vals, double t,
                                      double* linear_residual = nullptr,
                                      const std::vector<double>* warm_start = nullptr) {
    const Mesh& mesh = *mesh_;
    const SigmaModel& sigma = data_->sigma;
    CellCoeffFn coeff = [&](int c, const Vec3&, const std::array<double, 4>& bary) {
      double u = 0.0;
      for (int i = 0; i < 4; ++i) u += bary[i] * u_vals[mesh.cells[c][i]];
      double s = sigma.value(u);
      if (!(s >= sigma.lower - 1e-12 * std::max(1.0, sigma.lower)))
        throw ModelError("conductivity fell below its lower bound at a quadrature point");
      return s;
    };
    assemble_stiffness_into(sigma_stiffness_, space_phi_, coeff);

    std::vector<double> b(space_phi_.dof_count(), 0.0);
    if (data_->neumann_g)
      b = assemble_neumann(space_phi_, data_->neumann_g, data_->neumann_flux_tags, t);

    auto g = lift_phi_.values(t);
    SparseMatrix A = sigma_stiffness_;
    apply_dirichlet(A, b, space_phi_.on_dirichlet, g);
    auto result = cg_solve(A, b, fp_.linear, warm_start);
    if (linear_residual) *linear_residual = result.residual;
    for (int v : space_phi_.dirichlet_vertices) result.x[v] = g[v];
    return result.x;
  }

  struct StepResult {
    std::vector<double> u;
    std::vector<double> phi;
    StepDiagnostics diag;
  };

  StepResult step(const std::vector<double>& u_prev, int n) {
    const double tau = grid_.tau();
    const double t_n = grid_.time(n);
    const double t_prev = grid_.time(n - 1);
    const int dofs = space_u_.dof_count();

    auto g_n = lift_u_.values(t_n);
    auto g_prev = lift_u_.values(t_prev);
    std::vector<double> u_tilde_prev(dofs);
    for (int i = 0; i < dofs; ++i) u_tilde_prev[i] = u_prev[i] - g_prev[i];
    for (int v : space_u_.dirichlet_vertices) u_tilde_prev[v] = 0.0;

    // G(t_n) = -<(g^n - g^{n-1}) / tau, lambda> - <grad g^n, grad lambda>,
    // with the boundary data entering as nodal interpolants.
    std::vector<double> dg(dofs);
    for (int i = 0; i < dofs; ++i) dg[i] = (g_n[i] - g_prev[i]) / tau;
    auto G = mass_.multiply(dg);
    auto Kg = stiffness_unit_.multiply(g_n);
    for (int i = 0; i < dofs; ++i) G[i] = -G[i] - Kg[i];

    std::vector<double> f_load;
    if (data_->source_f) f_load = assemble_load(space_u_, data_->source_f, t_n);

    auto g_phi_n = lift_phi_.values(t_n);

    StepResult out;
    out.diag.n = n;
    out.diag.t = t_n;

    std::vector<double> gamma = u_tilde_prev;
    std::vector<double> phi;
    std::vector<double> u_full(dofs);
    double prev_update = -1.0;
    auto m_u_prev = mass_.multiply(u_tilde_prev);

    // Picard loop: corrections above tolerance count as iterations, so a
    // decoupled problem (F independent of the iterate) reports one iteration.
    bool converged = false;
    for (int round = 1; round <= fp_.max_iter + 1; ++round) {
      for (int i = 0; i < dofs; ++i) u_full[i] = g_n[i] + gamma[i];
      double lin_res = 0.0;
      phi = solve_potential(u_full, t_n, &lin_res, phi.empty() ? nullptr : &phi);
      out.diag.max_linear_residual = std::max(out.diag.max_linear_residual, lin_res);
      auto joule = assemble_joule_rhs(space_u_, u_full, phi, g_phi_n, data_->sigma.value, clamp_);
      out.diag.clamp_active_fraction = joule.clamp_active_fraction;

      std::vector<double> b(dofs);
      for (int i = 0; i < dofs; ++i) {
        double rhs = joule.b[i] + G[i];
        if (!f_load.empty()) rhs += f_load[i];
        b[i] = m_u_prev[i] + tau * rhs;
      }
      for (int v : space_u_.dirichlet_vertices) b[v] = 0.0;

      auto solve = cg_solve(heat_matrix_, b, fp_.linear, &gamma);
      out.diag.max_linear_residual = std::max(out.diag.max_linear_residual, solve.residual);

      std::vector<double> delta(dofs);
      for (int i = 0; i < dofs; ++i) delta[i] = solve.x[i] - gamma[i];
      double update = m_norm(delta);
      gamma = std::move(solve.x);
      double rel_update = update / std::max(m_norm(gamma), fp_.eps);
      out.diag.final_update = rel_update;
      if (prev_update > 0.0 && update > 0.0)
        out.diag.worst_contraction = std::max(out.diag.worst_contraction, update / prev_update);
      prev_update = update;

      if (rel_update <= fp_.tol) {
        converged = true;
        break;
      }
      out.diag.fp_iterations = round;
    }
    if (!converged)
      throw SolverError("fixed-point iteration did not converge in " +
                        std::to_string(fp_.max_iter) + " iterations (last contraction ratio " +
                        std::to_string(out.diag.worst_contraction) + ")");

    for (int i = 0; i < dofs; ++i) u_full[i] = g_n[i] + gamma[i];
    out.u = u_full;
    double lin_res = 0.0;
    out.phi = solve_potential(u_full, t_n, &lin_res, &phi);
    out.diag.max_linear_residual = std::max(out.diag.max_linear_residual, lin_res);

    // Discrete energy identity: test the step equation with v = tau * u_tilde^n.
    std::vector<double> u_tilde(dofs);
    for (int i = 0; i < dofs; ++i) u_tilde[i] = out.u[i] - g_n[i];
    for (int v : space_u_.dirichlet_vertices) u_tilde[v] = 0.0;
    std::vector<double> du(dofs);
    for (int i = 0; i < dofs; ++i) du[i] = out.u[i] - u_prev[i];
    double term_mass = jouleheat::dot(u_tilde, mass_.multiply(du));
    double term_stiff = tau * jouleheat::dot(u_tilde, stiffness_unit_.multiply(out.u));
    auto joule = assemble_joule_rhs(space_u_, out.u, out.phi, g_phi_n, data_->sigma.value, clamp_);
    double term_rhs = jouleheat::dot(u_tilde, joule.b);
    if (!f_load.empty()) term_rhs += jouleheat::dot(u_tilde, f_load);
    term_rhs *= tau;
    double residual = term_mass + term_stiff - term_rhs;
    double scale = std::abs(term_mass) + std::abs(term_stiff) + std::abs(term_rhs);
    out.diag.energy_residual = std::abs(residual) / std::max(scale, 1e-14);

    std::vector<double> phi_tilde(space_phi_.dof_count());
    for (int i = 0; i < space_phi_.dof_count(); ++i) phi_tilde[i] = out.phi[i] - g_phi_n[i];
    for (int v : space_phi_.dirichlet_vertices) phi_tilde[v] = 0.0;
    out.diag.grad_phi_tilde_norm = grad_norm_phi(phi_tilde);
    out.diag.grad_g_phi_norm = grad_norm_phi(g_phi_n);
    return out;
  }

  TransientSolution run() {
    TransientSolution sol;
    sol.u.push_back(project_initial());
    double lin_res = 0.0;
    sol.phi.push_back(solve_potential(sol.u[0], grid_.time(0), &lin_res));
    for (int n = 1; n <= grid_.steps(); ++n) {
      auto res = step(sol.u[n - 1], n);
      sol.u.push_back(std::move(res.u));
      sol.phi.push_back(std::move(res.phi));
      sol.steps.push_back(res.diag);
    }
    sol.check_finite();
    return sol;
  }

 private:
  double grad_norm_phi(const std::vector<double>& v) const {
    // Unit-coefficient stiffness quadratic form on the potential space; the
    // u-space matrix has the same entries (same mesh, same P1 basis).
    return std::sqrt(std::max(0.0, jouleheat::dot(v, stiffness_unit_.multiply(v))));
  }

  const Mesh* mesh_;
  const ProblemData* data_;
  TimeGrid grid_;
  FixedPointConfig fp_;

  FeSpace space_u_, space_phi_;
  DirichletLift lift_u_, lift_phi_;
  CutoffBounds clamp_;

  SparseMatrix mass_;             // full M
  SparseMatrix stiffness_unit_;   // full K (coefficient 1)
  SparseMatrix sigma_stiffness_;  // K_sigma(u), refilled per potential solve
  SparseMatrix heat_matrix_;      // M + tau K, Dirichlet-eliminated
};

/// One-call convenience wrapper.
inline TransientSolution run_transient(const Mesh& mesh, const ProblemData& data,
                                       const TimeGrid& grid, const FixedPointConfig& fp = {}) {
  JouleStepper stepper(mesh, data, grid, fp);
  return stepper.run();
}

}  // namespace jouleheat

#endif
