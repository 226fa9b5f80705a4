#ifndef JOULEHEAT_MMS_HPP
#define JOULEHEAT_MMS_HPP

#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "jouleheat/core.hpp"
#include "jouleheat/problem.hpp"

namespace jouleheat {

/// Manufactured solution: exact fields with closed-form derivatives plus the
/// derived data (source, boundary data, initial datum). All derivatives are
/// supplied analytically; a finite-difference oracle cross-checks them.
struct MmsCase {
  std::string name;
  double T = 0.1;
  Vec3 box_lo{0, 0, 0}, box_hi{1, 1, 1};

  SpaceTimeFn u;
  SpaceTimeFn du_dt;
  SpaceTimeGradFn grad_u;
  SpaceTimeFn lap_u;

  std::function<double(const Vec3&)> phi;  // time-independent exact potential
  std::function<Vec3(const Vec3&)> grad_phi;
  std::function<double(const Vec3&)> lap_phi;

  SigmaModel sigma;

  SpaceTimeFn f;      // derived volume source
  SpaceTimeFn g_u;    // Dirichlet datum for u (global)
  SpaceTimeFn g_phi;  // Dirichlet datum for phi (global)
  SpaceTimeFn u0;

  // Neumann datum for the potential on the configured tags; one entry per
  // mode: the MMS-consistent sigma(u) n.grad(phi) and the literal value a
  // data sheet may prescribe instead.
  SpaceTimeFn neumann_consistent;
  SpaceTimeFn neumann_literal;
  std::set<int> neumann_tags;
};

/// PDE residuals at a point from the supplied analytic derivatives:
/// parabolic D_t u - lap u - sigma(u) |grad phi|^2 - f and elliptic
/// div(sigma(u) grad phi) = sigma'(u) grad u . grad phi + sigma(u) lap phi.
inline std::pair<double, double> derive_residual(const MmsCase& c, const Vec3& x, double t) {
  for (int d = 0; d < 3; ++d)
    if (x[d] < c.box_lo[d] || x[d] > c.box_hi[d])
      throw ModelError("derive_residual: point outside the domain");
  Vec3 gp = c.grad_phi(x);
  double uv = c.u(x, t);
  double parabolic = c.du_dt(x, t) - c.lap_u(x, t) - c.sigma.value(uv) * dot(gp, gp) - c.f(x, t);
  double elliptic = c.sigma.derivative(uv) * dot(c.grad_u(x, t), gp) + c.sigma.value(uv) * c.lap_phi(x);
  return {parabolic, elliptic};
}

/// Residual audit at random interior space-time samples. The residuals are
/// required to vanish to residual_tol; centered finite differences of step
/// fd_step cross-check the analytic first derivatives to first_tol and the
/// Laplacians to second_tol (the second-difference roundoff floor is ~1e-6
/// at step 1e-5, hence the looser bound). Throws ModelError on failure.
inline void residual_audit(const MmsCase& c, int samples = 100, unsigned seed = 12345,
                           double residual_tol = 1e-8, double fd_step = 1e-5,
                           double first_tol = 1e-7, double second_tol = 1e-4) {
  std::mt19937_64 rng(seed);
  const double h = fd_step;
  const double margin = 4.0 * h;
  std::uniform_real_distribution<double> ut(margin, c.T - margin);

  auto shift = [](const Vec3& x, int d, double dx) {
    Vec3 y = x;
    y[d] += dx;
    return y;
  };

  for (int s = 0; s < samples; ++s) {
    Vec3 x;
    for (int d = 0; d < 3; ++d) {
      std::uniform_real_distribution<double> ux(c.box_lo[d] + margin, c.box_hi[d] - margin);
      x[d] = ux(rng);
    }
    double t = ut(rng);

    auto [parabolic, elliptic] = derive_residual(c, x, t);
    if (std::abs(parabolic) > residual_tol)
      throw ModelError(c.name + ": parabolic residual " + std::to_string(parabolic));
    if (std::abs(elliptic) > residual_tol)
      throw ModelError(c.name + ": elliptic residual " + std::to_string(elliptic));

    double fd_dt = (c.u(x, t + h) - c.u(x, t - h)) / (2.0 * h);
    if (std::abs(fd_dt - c.du_dt(x, t)) > first_tol)
      throw ModelError(c.name + ": D_t u disagrees with finite differences");

    Vec3 gu = c.grad_u(x, t);
    Vec3 gp = c.grad_phi(x);
    double fd_lap_u = 0.0, fd_lap_phi = 0.0;
    for (int d = 0; d < 3; ++d) {
      double fd_du = (c.u(shift(x, d, h), t) - c.u(shift(x, d, -h), t)) / (2.0 * h);
      if (std::abs(fd_du - gu[d]) > first_tol)
        throw ModelError(c.name + ": grad u disagrees with finite differences");
      double fd_dphi = (c.phi(shift(x, d, h)) - c.phi(shift(x, d, -h))) / (2.0 * h);
      if (std::abs(fd_dphi - gp[d]) > first_tol)
        throw ModelError(c.name + ": grad phi disagrees with finite differences");
      fd_lap_u += (c.u(shift(x, d, h), t) - 2.0 * c.u(x, t) + c.u(shift(x, d, -h), t)) / (h * h);
      fd_lap_phi += (c.phi(shift(x, d, h)) - 2.0 * c.phi(x) + c.phi(shift(x, d, -h))) / (h * h);
    }
    if (std::abs(fd_lap_u - c.lap_u(x, t)) > second_tol)
      throw ModelError(c.name + ": lap u disagrees with finite differences");
    if (std::abs(fd_lap_phi - c.lap_phi(x)) > second_tol)
      throw ModelError(c.name + ": lap phi disagrees with finite differences");
  }
}

/// Unit-cube case with exact solution u = x1(1-x1) x2(1-x2) x3(1-x3) + t,
/// phi = x2, sigma = 1, T = 0.1. The temperature is Dirichlet on the whole
/// boundary (g_u = t); the potential is Dirichlet on the four side faces
/// (g_phi = x2) and Neumann on x3 = 0 and x3 = 1. The consistent Neumann
/// datum is sigma(u) n.grad(phi) = 0; the literal variant -1 + 2 x2 is kept
/// selectable for comparison runs.
inline MmsCase example1_case() {
  auto bump = [](double s) { return s * (1.0 - s); };
  auto dbump = [](double s) { return 1.0 - 2.0 * s; };

  MmsCase c;
  c.name = "example1";
  c.T = 0.1;
  c.sigma = SigmaModel::constant(1.0);

  c.u = [bump](const Vec3& x, double t) { return bump(x.x) * bump(x.y) * bump(x.z) + t; };
  c.du_dt = [](const Vec3&, double) { return 1.0; };
  c.grad_u = [bump, dbump](const Vec3& x, double) {
    return Vec3{dbump(x.x) * bump(x.y) * bump(x.z), bump(x.x) * dbump(x.y) * bump(x.z),
                bump(x.x) * bump(x.y) * dbump(x.z)};
  };
  c.lap_u = [bump](const Vec3& x, double) {
    return -2.0 * (bump(x.y) * bump(x.z) + bump(x.x) * bump(x.z) + bump(x.x) * bump(x.y));
  };

  c.phi = [](const Vec3& x) { return x.y; };
  c.grad_phi = [](const Vec3&) { return Vec3{0.0, 1.0, 0.0}; };
  c.lap_phi = [](const Vec3&) { return 0.0; };

  c.f = [bump](const Vec3& x, double) {
    return 2.0 * (bump(x.x) * bump(x.y) + bump(x.x) * bump(x.z) + bump(x.y) * bump(x.z));
  };
  c.g_u = [](const Vec3&, double t) { return t; };
  c.g_phi = [](const Vec3& x, double) { return x.y; };
  c.u0 = [bump](const Vec3& x, double) { return bump(x.x) * bump(x.y) * bump(x.z); };

  c.neumann_tags = {5, 6};  // x3 = 0 and x3 = 1 faces of unit_cube_mesh
  c.neumann_consistent = [c_sigma = c.sigma.value, u = c.u, gphi = c.grad_phi](const Vec3& x,
                                                                               double t) {
    Vec3 n = x.z < 0.5 ? Vec3{0.0, 0.0, -1.0} : Vec3{0.0, 0.0, 1.0};
    return c_sigma(u(x, t)) * dot(n, gphi(x));
  };
  c.neumann_literal = [](const Vec3& x, double) { return -1.0 + 2.0 * x.y; };
  return c;
}

/// Assembles the solver-facing problem data for an MMS case on the unit cube.
inline ProblemData mms_problem_data(const MmsCase& c, bool literal_neumann = false) {
  ProblemData d;
  d.g_u = DirichletData::from_global(c.g_u);
  d.g_phi = DirichletData::from_global(c.g_phi);
  d.u0 = c.u0;
  d.sigma = c.sigma;
  d.source_f = c.f;

  d.bc_u.field = Field::temperature;
  d.bc_u.dirichlet_tags = {1, 2, 3, 4, 5, 6};
  d.bc_phi.field = Field::potential;
  d.bc_phi.dirichlet_tags = {1, 2, 3, 4};
  d.bc_phi.neumann_tags = {5, 6};

  d.neumann_g = literal_neumann ? c.neumann_literal : c.neumann_consistent;
  d.neumann_flux_tags = c.neumann_tags;
  return d;
}

}  // namespace jouleheat

#endif
