#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "jouleheat/adapt.hpp"
#include "jouleheat/mesh.hpp"
#include "jouleheat/presets.hpp"
#include "jouleheat/stepper.hpp"

using namespace jouleheat;

namespace {

// Runs one backward Euler step and packages the state snapshot the
// adaptivity machinery consumes. Keeps every referenced vector alive.
struct SteppedState {
  Mesh mesh;
  ProblemData data;
  TimeGrid grid;
  JouleStepper stepper;
  std::vector<double> u_prev;
  JouleStepper::StepResult res;
  std::vector<double> g_phi;

  SteppedState(Mesh m, ProblemData d, TimeGrid g, FixedPointConfig fp = {})
      : mesh(std::move(m)), data(std::move(d)), grid(g), stepper(mesh, data, grid, fp),
        u_prev(stepper.project_initial()), res(stepper.step(u_prev, 1)),
        g_phi(stepper.lift_phi().values(grid.time(1))) {}

  StepState state() const {
    StepState st;
    st.mesh = &mesh;
    st.space_u = &stepper.space_u();
    st.space_phi = &stepper.space_phi();
    st.u = &res.u;
    st.u_prev = &u_prev;
    st.phi = &res.phi;
    st.g_phi = &g_phi;
    st.tau = grid.tau();
    st.t = grid.time(1);
    st.sigma = &data.sigma;
    st.clamp = stepper.clamp();
    st.f = data.source_f;
    st.neumann_g = data.neumann_g;
    st.neumann_tags = data.neumann_flux_tags;
    return st;
  }
};

// Unit-cube problem whose discrete solution has identically zero residual:
// sigma = 1, phi = g_phi = x2 (all-Dirichlet), u = g_u = t.
ProblemData compatible_problem() {
  ProblemData d;
  d.g_u = DirichletData::from_global([](const Vec3&, double t) { return t; });
  d.g_phi = DirichletData::from_global([](const Vec3& x, double) { return x.y; });
  d.u0 = [](const Vec3&, double) { return 0.0; };
  d.sigma = SigmaModel::constant(1.0);
  d.bc_u.field = Field::temperature;
  d.bc_u.dirichlet_tags = {1, 2, 3, 4, 5, 6};
  d.bc_phi.field = Field::potential;
  d.bc_phi.dirichlet_tags = {1, 2, 3, 4, 5, 6};
  return d;
}

std::vector<double> random_constrained(const FeSpace& space, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(space.dof_count());
  for (auto& x : v) x = dist(rng);
  for (int d : space.dirichlet_vertices) v[d] = 0.0;
  return v;
}

}  // namespace

TEST(Goal, LinearityOfFunctional) {
  Mesh mesh = unit_cube_mesh(1);
  ProblemData d = compatible_problem();
  FeSpace su = FeSpace::build(mesh, d.bc_u);
  GoalFunctional goal;

  std::mt19937_64 rng(4);
  auto u = random_constrained(su, rng);
  auto v = random_constrained(su, rng);
  const double a = 1.7, b = -0.4;
  std::vector<double> combo(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) combo[i] = a * u[i] + b * v[i];
  EXPECT_NEAR(goal_value(su, goal, combo),
              a * goal_value(su, goal, u) + b * goal_value(su, goal, v), 1e-12);

  // The goal vector integrates to the domain volume for unit weight.
  auto m = goal_vector(su, goal);
  double total = 0.0;
  for (double x : m) total += x;
  EXPECT_NEAR(total, 1.0, 1e-13);
}

TEST(Dual, ZeroGoalGivesZeroDual) {
  SteppedState s(fichera_mesh(1), example2_problem(), TimeGrid{0.1, 2});
  GoalFunctional goal;
  goal.weight = 0.0;
  auto dual = solve_dual(s.state(), goal);
  for (double v : dual.z_u) EXPECT_EQ(v, 0.0);
  for (double v : dual.z_phi) EXPECT_EQ(v, 0.0);
}

TEST(Dual, DecoupledMatchesAdjointHeatOracle) {
  // sigma constant => sigma' = 0: z_u solves the adjoint heat step alone.
  SteppedState s(unit_cube_mesh(1), compatible_problem(), TimeGrid{0.1, 2});
  GoalFunctional goal;
  auto dual = solve_dual(s.state(), goal);

  // Independent assembly of (M + tau K) z = tau m with homogeneous Dirichlet.
  const FeSpace& su = s.stepper.space_u();
  auto M = assemble_mass(su);
  auto K = assemble_stiffness(su, 1.0);
  const int n = su.dof_count();
  auto Md = M.to_dense();
  auto Kd = K.to_dense();
  auto m = goal_vector(su, goal);
  std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, 0.0);
  const double tau = s.grid.tau();
  for (int i = 0; i < n; ++i) {
    if (su.on_dirichlet[i]) {
      A[i][i] = 1.0;
      continue;
    }
    b[i] = tau * m[i];
    for (int j = 0; j < n; ++j) {
      if (su.on_dirichlet[j]) continue;
      A[i][j] = Md[i][j] + tau * Kd[i][j];
    }
  }
  auto expect = dense::solve(A, b);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(dual.z_u[i], expect[i], 1e-9);

  // Linearity in the goal: doubling M doubles z.
  GoalFunctional twice;
  twice.weight = 2.0;
  auto dual2 = solve_dual(s.state(), twice);
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(dual2.z_u[i], 2.0 * dual.z_u[i], 1e-10);
    EXPECT_NEAR(dual2.z_phi[i], 2.0 * dual.z_phi[i], 1e-10);
  }
}

TEST(Dual, RefinedDualStaysClose) {
  SteppedState s(fichera_mesh(0), example3_problem(), TimeGrid{0.1, 2});
  GoalFunctional goal;
  DualConfig plain, refined;
  refined.refined_dual = true;
  auto d0 = solve_dual(s.state(), goal, plain);
  auto d1 = solve_dual(s.state(), goal, refined);
  ASSERT_EQ(d0.z_u.size(), d1.z_u.size());
  double n0 = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < d0.z_u.size(); ++i) {
    n0 += d0.z_u[i] * d0.z_u[i];
    diff += (d0.z_u[i] - d1.z_u[i]) * (d0.z_u[i] - d1.z_u[i]);
  }
  EXPECT_LE(std::sqrt(diff), 0.8 * std::sqrt(n0) + 1e-12);  // same object, finer solve
}

TEST(Indicators, ZeroResidualStateGivesZeroIndicators) {
  SteppedState s(unit_cube_mesh(1), compatible_problem(), TimeGrid{0.1, 2});
  GoalFunctional goal;
  auto dual = solve_dual(s.state(), goal);
  auto ind = compute_indicators(s.state(), dual);
  for (double e : ind.eta) EXPECT_LE(e, 1e-10);
}

TEST(Indicators, DecompositionMatchesGlobalResidual) {
  SteppedState s(fichera_mesh(1), example3_problem(), TimeGrid{0.1, 2});
  auto st = s.state();
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    auto v = random_constrained(s.stepper.space_u(), rng);
    auto w = random_constrained(s.stepper.space_phi(), rng);
    double global = global_residual(st, v, w);
    auto local = local_residuals_applied(st, v, w);
    double sum = 0.0, abs_sum = 0.0;
    for (double r : local) {
      sum += r;
      abs_sum += std::abs(r);
    }
    EXPECT_NEAR(sum, global, 1e-10 * std::max({1.0, std::abs(global), abs_sum}));
  }
}

TEST(Indicators, DecompositionIdentityWithNeumannData) {
  // Example 1 carries both a volume source and a Neumann datum for phi.
  SteppedState s(unit_cube_mesh(1), example1_problem(/*literal=*/true), TimeGrid{0.1, 2});
  auto st = s.state();
  std::mt19937_64 rng(8);
  auto v = random_constrained(s.stepper.space_u(), rng);
  auto w = random_constrained(s.stepper.space_phi(), rng);
  double global = global_residual(st, v, w);
  auto local = local_residuals_applied(st, v, w);
  double sum = 0.0;
  for (double r : local) sum += r;
  EXPECT_NEAR(sum, global, 1e-10 * std::max(1.0, std::abs(global)));
}

TEST(Indicators, GalerkinOrthogonalityOfConvergedStep) {
  // The converged step's residual vanishes on the discrete test space when
  // assembled exactly as the solver assembles it (coefficients at quadrature
  // points).
  SteppedState s(fichera_mesh(1), example2_problem(), TimeGrid{0.1, 2});
  const Mesh& mesh = s.mesh;
  const FeSpace& su = s.stepper.space_u();
  const FeSpace& sp = s.stepper.space_phi();
  const double tau = s.grid.tau();

  auto M = s.stepper.mass();
  auto K = s.stepper.stiffness_unit();
  auto joule = assemble_joule_rhs(su, s.res.u, s.res.phi, s.g_phi, s.data.sigma.value,
                                  s.stepper.clamp());
  auto Mdu = M.multiply(s.res.u);
  auto Mprev = M.multiply(s.u_prev);
  auto Ku = K.multiply(s.res.u);
  CellCoeffFn sigma_u = [&](int c, const Vec3&, const std::array<double, 4>& bary) {
    double uv = 0.0;
    for (int i = 0; i < 4; ++i) uv += bary[i] * s.res.u[mesh.cells[c][i]];
    return s.data.sigma.value(uv);
  };
  auto Ksig = assemble_stiffness(sp, sigma_u);
  auto Kphi = Ksig.multiply(s.res.phi);

  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 3; ++trial) {
    auto v = random_constrained(su, rng);
    auto w = random_constrained(sp, rng);
    double r_u = 0.0, r_phi = 0.0, scale_u = 0.0, scale_phi = 0.0;
    for (int i = 0; i < su.dof_count(); ++i) {
      double time_term = (Mdu[i] - Mprev[i]) / tau;
      r_u += v[i] * (joule.b[i] - time_term - Ku[i]);
      scale_u += std::abs(v[i]) * (std::abs(time_term) + std::abs(Ku[i]) + std::abs(joule.b[i]));
      r_phi += w[i] * Kphi[i];
      scale_phi += std::abs(w[i] * Kphi[i]);
    }
    EXPECT_LE(std::abs(r_u), 1e-7 * std::max(1.0, scale_u));
    EXPECT_LE(std::abs(r_phi), 1e-7 * std::max(1.0, scale_phi));
  }
}

TEST(Indicators, LinearInSourcePerturbation) {
  // Decoupled linear case: the signed cell residuals are affine in f.
  ProblemData base = compatible_problem();
  std::mt19937_64 rng(12);

  auto residuals_for = [&](double shift) {
    ProblemData d = base;
    d.source_f = [shift](const Vec3&, double) { return shift; };
    SteppedState s(unit_cube_mesh(1), d, TimeGrid{0.1, 2});
    auto st = s.state();
    std::mt19937_64 rng_local(99);  // same weights for every shift
    auto v = random_constrained(s.stepper.space_u(), rng_local);
    auto w = random_constrained(s.stepper.space_phi(), rng_local);
    return local_residuals_applied(st, v, w);
  };

  auto r0 = residuals_for(0.0);
  auto r1 = residuals_for(0.5);
  auto r2 = residuals_for(1.0);
  for (std::size_t c = 0; c < r0.size(); ++c)
    EXPECT_NEAR(r2[c] - r1[c], r1[c] - r0[c], 1e-10);
}

TEST(Dorfler, TrivialCases) {
  ErrorIndicators ind;
  ind.eta = {0.1, 0.0, 0.3, 0.2, 0.0, 0.4};

  // theta = 1 marks every positive-indicator cell.
  auto all = mark_dorfler(ind, 1.0);
  EXPECT_EQ(all, (std::set<int>{0, 2, 3, 5}));

  // A dominant cell is marked alone.
  ErrorIndicators dom;
  dom.eta = {0.9, 0.02, 0.03, 0.05};
  auto just_one = mark_dorfler(dom, 0.5);
  EXPECT_EQ(just_one, (std::set<int>{0}));

  // Uniform indicators over 8 cells, theta = 0.5 -> 4 cells.
  ErrorIndicators uni;
  uni.eta.assign(8, 1.0);
  EXPECT_EQ(mark_dorfler(uni, 0.5).size(), 4u);

  EXPECT_THROW(mark_dorfler(ind, 0.0), ConfigError);
  EXPECT_THROW(mark_dorfler(ind, 1.5), ConfigError);
}

TEST(Dorfler, MinimalityOnRandomIndicators) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> dist(0.01, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    ErrorIndicators ind;
    ind.eta.resize(40);
    for (auto& e : ind.eta) e = dist(rng);
    const double theta = 0.5;
    auto marked = mark_dorfler(ind, theta);
    double sum = 0.0, smallest = std::numeric_limits<double>::infinity();
    for (int c : marked) {
      sum += ind.eta[c];
      smallest = std::min(smallest, ind.eta[c]);
    }
    EXPECT_GE(sum, theta * ind.total() * (1.0 - 1e-10));
    // Removing the smallest marked cell breaks the inequality.
    EXPECT_LT(sum - smallest, theta * ind.total());
  }
}

TEST(AdaptRun, InfiniteToleranceReproducesPlainRun) {
  Mesh mesh = fichera_mesh(0);
  ProblemData d = example3_problem();
  TimeGrid grid{0.1, 2};
  AdaptConfig cfg;
  cfg.eta_tol = std::numeric_limits<double>::infinity();
  auto adaptive = adapt_run(d, mesh, grid, cfg);
  auto plain = run_transient(mesh, d, grid, cfg.fp);

  ASSERT_EQ(static_cast<int>(adaptive.u.size()), grid.steps());
  for (int n = 1; n <= grid.steps(); ++n) {
    EXPECT_EQ(adaptive.meshes[n - 1].vertex_count(), mesh.vertex_count());
    for (int i = 0; i < mesh.vertex_count(); ++i)
      EXPECT_NEAR(adaptive.u[n - 1][i], plain.u[n][i], 1e-12);
  }
}

TEST(AdaptRun, RefinesAndRespectsCap) {
  Mesh mesh = fichera_mesh(0);
  ProblemData d = example3_problem();
  TimeGrid grid{0.1, 2};
  AdaptConfig cfg;
  cfg.eta_tol = 1e-12;  // unreachable: drive refinement until the cap
  cfg.max_vertices = 260;
  auto res = adapt_run(d, mesh, grid, cfg);

  EXPECT_TRUE(res.vertex_cap_reached);
  // Vertex counts per step never decrease (refinement only).
  for (std::size_t i = 1; i < res.records.size(); ++i)
    EXPECT_GE(res.records[i].vertices, res.records[i - 1].vertices);
  EXPECT_GT(res.records.back().vertices, mesh.vertex_count());
  for (const auto& rec : res.records) EXPECT_TRUE(std::isfinite(rec.goal_value));
  for (const auto& m : res.meshes) {
    std::string why;
    EXPECT_TRUE(conformity_audit(m, &why)) << why;
  }
}
