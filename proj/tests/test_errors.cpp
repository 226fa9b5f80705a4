#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "jouleheat/mesh.hpp"
#include "jouleheat/norms.hpp"

using namespace jouleheat;

namespace {

ExactField linear_field() {
  return {[](const Vec3& x, double) { return x.y; },
          [](const Vec3&, double) { return Vec3{0.0, 1.0, 0.0}; }};
}

}  // namespace

TEST(H1Norm, ZeroAndAnalyticValue) {
  Mesh mesh = unit_cube_mesh(2);
  std::vector<double> zeros(mesh.vertex_count(), 0.0);
  EXPECT_EQ(h1_norm(mesh, zeros), 0.0);

  // ||x2||_H1^2 over the unit cube = 1/3 (L2 part) + 1 (gradient part).
  ExactField f = linear_field();
  double n = h1_norm(mesh, f, 0.0);
  EXPECT_NEAR(n * n, 1.0 / 3.0 + 1.0, 1e-10);
}

TEST(H1Norm, InterpolantOfLinearIsExact) {
  Mesh mesh = unit_cube_mesh(2);
  ExactField f = linear_field();
  std::vector<double> nodal(mesh.vertex_count());
  for (int i = 0; i < mesh.vertex_count(); ++i) nodal[i] = mesh.vertices[i].y;
  EXPECT_LE(std::sqrt(h1_error_sq(mesh, &nodal, &f, 0.0)), 1e-12);
}

TEST(Simpson, CubicExactness) {
  // Exact for all polynomials of degree <= 3 on one interval.
  for (int deg = 0; deg <= 3; ++deg) {
    auto f = [deg](double t) { return std::pow(t, deg); };
    double got = simpson(f, 0.2, 0.9);
    double exact = (std::pow(0.9, deg + 1) - std::pow(0.2, deg + 1)) / (deg + 1);
    EXPECT_NEAR(got, exact, 1e-12) << "degree " << deg;
  }
}

TEST(SpaceTimeError, ExactDiscreteTrajectoryGivesZero) {
  Mesh mesh = unit_cube_mesh(1);
  TimeGrid grid{0.1, 2};
  // Exact solution constant in time and linear in space; the trajectory
  // holds its interpolant at every level.
  ExactField f = linear_field();
  std::vector<double> nodal(mesh.vertex_count());
  for (int i = 0; i < mesh.vertex_count(); ++i) nodal[i] = mesh.vertices[i].y;
  std::vector<std::vector<double>> levels(grid.steps() + 1, nodal);
  auto e = space_time_error(mesh, levels, f, grid);
  EXPECT_LE(e.absolute, 1e-12);
  EXPECT_LE(e.relative, 1e-12);
}

TEST(SpaceTimeError, TimeOnlyAnalyticValue) {
  // u = t (spatially constant), one interval [0, tau], discrete value u^1 = tau:
  // squared error = int_0^tau (t - tau)^2 |Omega| dt = tau^3 |Omega| / 3,
  // and Simpson is exact for the quadratic integrand.
  Mesh mesh = unit_cube_mesh(1);  // |Omega| = 1
  TimeGrid grid{0.1, 0};          // a single interval, tau = 0.1
  ExactField f{[](const Vec3&, double t) { return t; },
               [](const Vec3&, double) { return Vec3{0, 0, 0}; }};
  std::vector<double> u1(mesh.vertex_count(), grid.tau());
  std::vector<std::vector<double>> levels{std::vector<double>(mesh.vertex_count(), 0.0), u1};
  auto e = space_time_error(mesh, levels, f, grid);
  double tau = grid.tau();
  EXPECT_NEAR(e.absolute * e.absolute, tau * tau * tau / 3.0, 1e-14);
}

TEST(TrajectoryDistance, NormProperties) {
  Mesh mesh = unit_cube_mesh(1);
  TimeGrid grid{0.1, 2};
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  auto random_traj = [&]() {
    std::vector<std::vector<double>> tr(grid.steps() + 1,
                                        std::vector<double>(mesh.vertex_count()));
    for (auto& level : tr)
      for (auto& v : level) v = dist(rng);
    return tr;
  };

  auto a = random_traj();
  auto b = random_traj();
  auto c = random_traj();

  // Zero iff identical.
  EXPECT_EQ(trajectory_distance(mesh, a, a, grid), 0.0);
  EXPECT_GT(trajectory_distance(mesh, a, b, grid), 0.0);

  // Homogeneity: d(s*a, s*b) = |s| d(a, b).
  const double s = -2.5;
  auto sa = a, sb = b;
  for (auto& level : sa)
    for (auto& v : level) v *= s;
  for (auto& level : sb)
    for (auto& v : level) v *= s;
  EXPECT_NEAR(trajectory_distance(mesh, sa, sb, grid),
              std::abs(s) * trajectory_distance(mesh, a, b, grid), 1e-10);

  // Triangle inequality.
  double ab = trajectory_distance(mesh, a, b, grid);
  double bc = trajectory_distance(mesh, b, c, grid);
  double ac = trajectory_distance(mesh, a, c, grid);
  EXPECT_LE(ac, ab + bc + 1e-10);
}

TEST(ReferenceCompare, SelfAndProlongedLinear) {
  Mesh coarse = unit_cube_mesh(1);
  Mesh fine = refine_uniform(coarse);
  TimeGrid cg{0.1, 1}, fg{0.1, 2};

  // Coarse trajectory holding a linear function; its exact prolongation
  // reproduces the fine interpolant, so the distance vanishes.
  std::vector<double> lin_c(coarse.vertex_count()), lin_f(fine.vertex_count());
  for (int i = 0; i < coarse.vertex_count(); ++i)
    lin_c[i] = 1.0 + coarse.vertices[i].x - 0.5 * coarse.vertices[i].z;
  for (int i = 0; i < fine.vertex_count(); ++i)
    lin_f[i] = 1.0 + fine.vertices[i].x - 0.5 * fine.vertices[i].z;

  TransientSolution sc, sf;
  sc.u.assign(cg.steps() + 1, lin_c);
  sc.phi.assign(cg.steps() + 1, lin_c);
  sf.u.assign(fg.steps() + 1, lin_f);
  sf.phi.assign(fg.steps() + 1, lin_f);

  auto e = reference_compare(sc, cg, {&fine}, sf, fg, fine);
  EXPECT_LE(e.abs_u, 1e-12);
  EXPECT_LE(e.abs_phi, 1e-12);

  // Self comparison on the same mesh/grid.
  auto self = reference_compare(sf, fg, {}, sf, fg, fine);
  EXPECT_EQ(self.abs_u, 0.0);

  // Non-nested grids are rejected.
  TimeGrid other{0.2, 2};
  EXPECT_THROW(reference_compare(sc, other, {&fine}, sf, fg, fine), ModelError);
}

TEST(ObservedOrder, KnownSequences) {
  auto o1 = observed_order({0.2, 0.1, 0.05});
  ASSERT_EQ(o1.size(), 2u);
  EXPECT_NEAR(o1[0], 1.0, 1e-14);
  EXPECT_NEAR(o1[1], 1.0, 1e-14);

  auto o2 = observed_order({0.2, 0.2});
  EXPECT_NEAR(o2[0], 0.0, 1e-14);

  auto o3 = observed_order({0.2, 0.0});
  EXPECT_TRUE(std::isinf(o3[0]));

  EXPECT_THROW(observed_order({0.1}), ModelError);
}

TEST(ErrorReport, Validation) {
  ErrorReport r;
  r.rows.push_back({1, 0.5, 0.05, 27, 0.2, 0.1});
  r.rows.push_back({2, 0.25, 0.025, 125, 0.1, 0.05});
  EXPECT_NO_THROW(r.validate());
  auto ou = r.orders_u();
  EXPECT_NEAR(ou[0], 1.0, 1e-14);

  r.rows.push_back({2, 0.25, 0.025, 125, 0.1, 0.05});
  EXPECT_THROW(r.validate(), ModelError);
}
