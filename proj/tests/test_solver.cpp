#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "jouleheat/mesh.hpp"
#include "jouleheat/mms.hpp"
#include "jouleheat/presets.hpp"
#include "jouleheat/stepper.hpp"

using namespace jouleheat;

namespace {

ProblemData plain_heat_problem(double g_phi_value) {
  // sigma = 1, constant potential, no source: the temperature decouples.
  ProblemData d;
  d.g_u = DirichletData::from_global([](const Vec3&, double) { return 0.0; });
  d.g_phi = DirichletData::from_global([g_phi_value](const Vec3&, double) { return g_phi_value; });
  d.u0 = [](const Vec3&, double) { return 0.0; };
  d.sigma = SigmaModel::constant(1.0);
  d.bc_u.field = Field::temperature;
  d.bc_u.dirichlet_tags = {1};
  d.bc_u.neumann_tags = {2, 3, 4, 5, 6};
  d.bc_phi.field = Field::potential;
  d.bc_phi.dirichlet_tags = {1};
  d.bc_phi.neumann_tags = {2, 3, 4, 5, 6};
  return d;
}

}  // namespace

TEST(SigmaModel, ArctanBoundsAndAudit) {
  auto m = SigmaModel::arctan_model();
  EXPECT_NEAR(m.value(0.0), M_PI / 2.0, 1e-15);
  EXPECT_NEAR(m.lower, M_PI / 4.0, 1e-15);
  EXPECT_NEAR(m.upper, 3.0 * M_PI / 4.0, 1e-15);
  EXPECT_NO_THROW(audit_sigma(m));
  EXPECT_NO_THROW(audit_sigma(SigmaModel::constant(2.5)));

  SigmaModel bad = m;
  bad.upper = 1.0;  // claims a bound the function violates
  EXPECT_THROW(audit_sigma(bad), ModelError);

  SigmaModel lipschitz_lie = m;
  lipschitz_lie.lipschitz = 0.01;
  EXPECT_THROW(audit_sigma(lipschitz_lie), ModelError);
}

TEST(SigmaModel, Tabulated) {
  auto m = SigmaModel::tabulated({{0.0, 1.0}, {1.0, 2.0}, {2.0, 1.5}});
  EXPECT_NEAR(m.value(0.5), 1.5, 1e-15);
  EXPECT_NEAR(m.value(-3.0), 1.0, 1e-15);
  EXPECT_NEAR(m.value(7.0), 1.5, 1e-15);
  EXPECT_NEAR(m.derivative(0.5), 1.0, 1e-15);
  EXPECT_NO_THROW(audit_sigma(m, 5.0));
  EXPECT_THROW(SigmaModel::tabulated({{0.0, 1.0}}), ConfigError);
}

TEST(TimeGrid, UniformSpacing) {
  TimeGrid g{0.1, 3};
  EXPECT_EQ(g.steps(), 8);
  EXPECT_NEAR(g.tau(), 0.0125, 1e-18);
  for (int n = 1; n <= g.steps(); ++n)
    EXPECT_NEAR(g.time(n) - g.time(n - 1), g.tau(), 1e-15);
  EXPECT_EQ(g.time(0), 0.0);
  EXPECT_EQ(g.time(8), 0.1);
}

TEST(CutoffBounds, DefaultFromDirichletData) {
  Mesh mesh = unit_cube_mesh(1);
  ProblemData d = example1_problem();
  FeSpace space_phi = FeSpace::build(mesh, d.bc_phi);
  DirichletLift lift(space_phi, d.g_phi);
  TimeGrid grid{0.1, 1};
  auto cb = default_cutoff_bounds(space_phi, lift, grid);
  EXPECT_NEAR(cb.a, 0.0, 1e-15);  // min of x2 over the side faces
  EXPECT_NEAR(cb.b, 1.0, 1e-15);
}

TEST(ProjectInitial, LinearAndMomentIdentity) {
  Mesh mesh = unit_cube_mesh(2);
  ProblemData d = example1_problem();
  TimeGrid grid{0.1, 2};
  JouleStepper stepper(mesh, d, grid);

  auto u0 = stepper.project_initial();
  // (4.1c): <u0_h, lambda_i> = <u0, lambda_i> for all constrained i,
  // with both sides under the same quadrature.
  auto lhs = stepper.mass().multiply(u0);
  auto rhs = assemble_load(stepper.space_u(), d.u0, 0.0);
  for (int i = 0; i < stepper.space_u().dof_count(); ++i) {
    if (stepper.space_u().on_dirichlet[i]) continue;
    EXPECT_NEAR(lhs[i], rhs[i], 1e-10 * std::max(1.0, std::abs(rhs[i])));
  }

  // A P1 initial datum with zero boundary data is reproduced exactly.
  ProblemData lin = d;
  lin.g_u = DirichletData::from_global([](const Vec3& x, double) { return x.x - 2.0 * x.z; });
  lin.u0 = [](const Vec3& x, double) { return x.x - 2.0 * x.z; };
  JouleStepper stepper2(mesh, lin, grid);
  auto v = stepper2.project_initial();
  for (int i = 0; i < mesh.vertex_count(); ++i)
    EXPECT_NEAR(v[i], mesh.vertices[i].x - 2.0 * mesh.vertices[i].z, 1e-10);

  // Zero data projects to zero.
  ProblemData zero = plain_heat_problem(0.0);
  JouleStepper stepper3(mesh, zero, grid);
  auto z = stepper3.project_initial();
  for (double x : z) EXPECT_NEAR(x, 0.0, 1e-14);
}

TEST(Potential, LinearDataReproducedExactly) {
  Mesh mesh = unit_cube_mesh(2);
  ProblemData d = plain_heat_problem(0.0);
  // All-Dirichlet potential with linear datum.
  d.g_phi = DirichletData::from_global(
      [](const Vec3& x, double) { return 0.5 + 2.0 * x.x - 1.0 * x.y + 0.25 * x.z; });
  d.bc_phi.dirichlet_tags = {1, 2, 3, 4, 5, 6};
  d.bc_phi.neumann_tags = {};
  TimeGrid grid{0.1, 1};
  JouleStepper stepper(mesh, d, grid);
  std::vector<double> u(mesh.vertex_count(), 0.0);
  auto phi = stepper.solve_potential(u, 0.0);
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const Vec3& x = mesh.vertices[i];
    EXPECT_NEAR(phi[i], 0.5 + 2.0 * x.x - 1.0 * x.y + 0.25 * x.z, 1e-8);
  }
}

TEST(Potential, ConstantDatumGivesConstantField) {
  Mesh mesh = fichera_mesh(1);
  ProblemData d = example2_problem();
  d.g_phi = DirichletData::from_global([](const Vec3&, double) { return 3.0; });
  TimeGrid grid{0.1, 1};
  JouleStepper stepper(mesh, d, grid);
  std::vector<double> u(mesh.vertex_count(), 0.2);
  auto phi = stepper.solve_potential(u, 0.0);
  for (double v : phi) EXPECT_NEAR(v, 3.0, 1e-9);
}

TEST(Potential, ResidualOrthogonalityOnExample2) {
  Mesh mesh = fichera_mesh(1);
  ProblemData d = example2_problem();
  TimeGrid grid{0.1, 2};
  FixedPointConfig fp;
  fp.linear.rel_tol = 1e-12;  // datum has magnitude 10; keep headroom under 1e-9
  JouleStepper stepper(mesh, d, grid, fp);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  std::vector<double> u(mesh.vertex_count());
  for (auto& v : u) v = dist(rng);

  auto phi = stepper.solve_potential(u, 0.0);

  // Dirichlet values are met exactly.
  DirichletLift lift(stepper.space_phi(), d.g_phi);
  auto g = lift.values(0.0);
  for (int v : stepper.space_phi().dirichlet_vertices) EXPECT_EQ(phi[v], g[v]);

  // Assembled residual vanishes on all constrained test functions.
  CellCoeffFn coeff = [&](int c, const Vec3&, const std::array<double, 4>& bary) {
    double uv = 0.0;
    for (int i = 0; i < 4; ++i) uv += bary[i] * u[mesh.cells[c][i]];
    return d.sigma.value(uv);
  };
  auto K = assemble_stiffness(stepper.space_phi(), coeff);
  auto r = K.multiply(phi);
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    if (stepper.space_phi().on_dirichlet[i]) continue;
    EXPECT_LE(std::abs(r[i]), 1e-9);
  }
}

TEST(Potential, ModelViolationDetected) {
  Mesh mesh = unit_cube_mesh(1);
  TimeGrid grid{0.1, 1};

  // A model whose claimed bounds are wrong is rejected by the sampled audit
  // at construction.
  ProblemData bad = plain_heat_problem(0.0);
  bad.sigma.value = [](double u) { return 1.0 - 2.0 * std::abs(u); };
  EXPECT_THROW(JouleStepper(mesh, bad, grid), ModelError);

  // The audit samples a bounded interval; the per-quadrature-point check
  // catches violations at temperature values outside it.
  ProblemData d = plain_heat_problem(0.0);
  d.sigma.value = [](double u) { return std::abs(u) > 60.0 ? 0.1 : 1.0; };
  JouleStepper stepper(mesh, d, grid);
  std::vector<double> u(mesh.vertex_count(), 100.0);
  EXPECT_THROW(stepper.solve_potential(u, 0.0), ModelError);
}

TEST(Step, DecoupledConvergesInOneIteration) {
  Mesh mesh = unit_cube_mesh(1);
  ProblemData d = plain_heat_problem(2.0);  // sigma const, g_phi spatially constant
  TimeGrid grid{0.1, 2};
  JouleStepper stepper(mesh, d, grid);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> u_prev(mesh.vertex_count());
  for (auto& v : u_prev) v = dist(rng);
  for (int v : stepper.space_u().dirichlet_vertices) u_prev[v] = 0.0;

  auto res = stepper.step(u_prev, 1);
  EXPECT_EQ(res.diag.fp_iterations, 1);
  EXPECT_LE(res.diag.final_update, 1e-10);
}

TEST(Step, MatchesDenseHeatOracle) {
  Mesh mesh = unit_cube_mesh(0);
  ProblemData d = plain_heat_problem(0.0);
  TimeGrid grid{0.1, 2};
  JouleStepper stepper(mesh, d, grid);
  const double tau = grid.tau();

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> u_prev(mesh.vertex_count());
  for (auto& v : u_prev) v = dist(rng);
  for (int v : stepper.space_u().dirichlet_vertices) u_prev[v] = 0.0;

  auto res = stepper.step(u_prev, 1);

  // Dense oracle: (M + tau K) x = M u_prev on the constrained dofs.
  auto Md = stepper.mass().to_dense();
  auto Kd = stepper.stiffness_unit().to_dense();
  const int n = mesh.vertex_count();
  std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
  auto rhs = stepper.mass().multiply(u_prev);
  for (int i = 0; i < n; ++i) {
    if (stepper.space_u().on_dirichlet[i]) {
      A[i][i] = 1.0;
      rhs[i] = 0.0;
      continue;
    }
    for (int j = 0; j < n; ++j) {
      if (stepper.space_u().on_dirichlet[j]) continue;
      A[i][j] = Md[i][j] + tau * Kd[i][j];
    }
  }
  auto expect = dense::solve(A, rhs);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(res.u[i], expect[i], 1e-10);
  EXPECT_EQ(res.diag.fp_iterations, 1);
}

TEST(Run, ZeroDataStaysZero) {
  Mesh mesh = unit_cube_mesh(1);
  ProblemData d = plain_heat_problem(0.0);
  TimeGrid grid{0.1, 2};
  auto sol = run_transient(mesh, d, grid);
  ASSERT_EQ(static_cast<int>(sol.u.size()), grid.steps() + 1);
  for (const auto& level : sol.u)
    for (double v : level) EXPECT_NEAR(v, 0.0, 1e-12);
  for (const auto& level : sol.phi)
    for (double v : level) EXPECT_NEAR(v, 0.0, 1e-12);
  for (const auto& s : sol.steps) {
    EXPECT_EQ(s.fp_iterations, 0);
    EXPECT_LE(s.energy_residual, 1e-8);
  }
}

TEST(Run, Example1SmallMesh) {
  Mesh mesh = unit_cube_mesh(2);
  ProblemData d = example1_problem();
  TimeGrid grid{0.1, 2};
  auto sol = run_transient(mesh, d, grid);

  for (const auto& s : sol.steps) {
    EXPECT_LE(s.fp_iterations, 30);
    EXPECT_LE(s.final_update, 1e-10);
    EXPECT_LE(s.energy_residual, 1e-8);
  }
  // The exact potential x2 is linear, sigma is constant and the consistent
  // Neumann datum vanishes: phi_h reproduces x2 at the vertices.
  for (std::size_t n = 0; n < sol.phi.size(); ++n)
    for (int i = 0; i < mesh.vertex_count(); ++i)
      EXPECT_NEAR(sol.phi[n][i], mesh.vertices[i].y, 1e-8);
}

TEST(Run, Example2EnergyBoundAndDiagnostics) {
  Mesh mesh = fichera_mesh(1);
  ProblemData d = example2_problem();
  TimeGrid grid{0.1, 2};
  auto sol = run_transient(mesh, d, grid);

  const double ratio = d.sigma.upper / d.sigma.lower;  // = 3 for the arctan model
  for (const auto& s : sol.steps) {
    EXPECT_LE(s.grad_phi_tilde_norm, ratio * s.grad_g_phi_norm * (1.0 + 1e-12));
    EXPECT_LE(s.energy_residual, 1e-8);
    EXPECT_GT(s.fp_iterations, 0);  // genuinely coupled
  }
}

TEST(Run, Example2ContractionTrendUnderTimeRefinement) {
  Mesh mesh = fichera_mesh(1);
  ProblemData d = example2_problem();
  std::vector<double> worst;
  for (int l : {2, 3, 4}) {
    TimeGrid grid{0.1, l};
    auto sol = run_transient(mesh, d, grid);
    double w = 0.0;
    for (const auto& s : sol.steps) w = std::max(w, s.worst_contraction);
    worst.push_back(w);
  }
  // Halving tau must not increase the worst-case contraction ratio.
  EXPECT_LE(worst[1], worst[0] * 1.05 + 1e-12);
  EXPECT_LE(worst[2], worst[1] * 1.05 + 1e-12);
}

TEST(Run, ClampActivityRecorded) {
  Mesh mesh = fichera_mesh(0);
  ProblemData d = example2_problem();
  TimeGrid grid{0.1, 1};
  auto sol = run_transient(mesh, d, grid);
  for (const auto& s : sol.steps) {
    EXPECT_GE(s.clamp_active_fraction, 0.0);
    EXPECT_LE(s.clamp_active_fraction, 1.0);
  }
}
