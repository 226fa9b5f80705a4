#ifndef JOULEHEAT_NORMS_HPP
#define JOULEHEAT_NORMS_HPP

#include <cmath>
#include <limits>
#include <vector>

#include "jouleheat/fem.hpp"
#include "jouleheat/mesh.hpp"
#include "jouleheat/problem.hpp"
#include "jouleheat/stepper.hpp"

namespace jouleheat {

/// Exact scalar field with analytic gradient, for error norms.
struct ExactField {
  SpaceTimeFn value;
  SpaceTimeGradFn grad;
};

/// Squared H1 norm of (exact - u_h) at time t, quadrature-approximated with
/// the degree-4 rule. Either argument may be null: exact == nullptr measures
/// the FE function alone, u_h == nullptr the exact field alone.
inline double h1_error_sq(const Mesh& mesh, const std::vector<double>* u_h,
                          const ExactField* exact, double t,
                          const TetRule& rule = tet_rule_degree4()) {
  double acc = 0.0;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    Vec3 grad_h{0, 0, 0};
    if (u_h) grad_h = cell_gradient(mesh, g, c, *u_h);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& bary = rule.points[q];
      Vec3 x = g.point(bary);
      double val = 0.0;
      Vec3 grad{0, 0, 0};
      if (exact) {
        val = exact->value(x, t);
        grad = exact->grad(x, t);
      }
      if (u_h) {
        for (int i = 0; i < 4; ++i) val -= bary[i] * (*u_h)[mesh.cells[c][i]];
        grad = grad - grad_h;
      }
      acc += rule.weights[q] * g.volume * (val * val + dot(grad, grad));
    }
  }
  return acc;
}

inline double h1_norm(const Mesh& mesh, const std::vector<double>& u_h) {
  return std::sqrt(h1_error_sq(mesh, &u_h, nullptr, 0.0));
}

inline double h1_norm(const Mesh& mesh, const ExactField& exact, double t) {
  return std::sqrt(h1_error_sq(mesh, nullptr, &exact, t));
}

/// Simpson's rule on one interval, exact for cubics.
template <typename F>
double simpson(F&& f, double a, double b) {
  return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
}

struct SpaceTimeError {
  double absolute = 0.0;
  double relative = 0.0;
};

/// L2(0,T;H1) distance between the exact field and the discrete trajectory,
/// which is piecewise constant in time (value u^n on I_n). Simpson's rule on
/// each interval; the relative error divides by the same functional of the
/// exact solution.
inline SpaceTimeError space_time_error(const Mesh& mesh,
                                       const std::vector<std::vector<double>>& levels,
                                       const ExactField& exact, const TimeGrid& grid) {
  if (static_cast<int>(levels.size()) != grid.steps() + 1)
    throw ModelError("space_time_error: trajectory does not match the time grid");
  double err_sq = 0.0, ref_sq = 0.0;
  for (int n = 1; n <= grid.steps(); ++n) {
    const auto& un = levels[n];
    err_sq += simpson(
        [&](double t) { return h1_error_sq(mesh, &un, &exact, t); },
        grid.time(n - 1), grid.time(n));
    ref_sq += simpson(
        [&](double t) { return h1_error_sq(mesh, nullptr, &exact, t); },
        grid.time(n - 1), grid.time(n));
  }
  SpaceTimeError e;
  e.absolute = std::sqrt(std::max(0.0, err_sq));
  e.relative = ref_sq > 0.0 ? e.absolute / std::sqrt(ref_sq) : e.absolute;
  return e;
}

/// L2(0,T;H1) distance between two discrete trajectories on the same mesh
/// and grid (both piecewise constant in time).
inline double trajectory_distance(const Mesh& mesh,
                                  const std::vector<std::vector<double>>& a,
                                  const std::vector<std::vector<double>>& b,
                                  const TimeGrid& grid) {
  if (a.size() != b.size() || static_cast<int>(a.size()) != grid.steps() + 1)
    throw ModelError("trajectory_distance: mismatched grids");
  const double tau = grid.tau();
  double acc = 0.0;
  for (int n = 1; n <= grid.steps(); ++n) {
    std::vector<double> diff(a[n].size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a[n][i] - b[n][i];
    acc += tau * h1_error_sq(mesh, &diff, nullptr, 0.0, tet_rule_degree2());
  }
  return std::sqrt(std::max(0.0, acc));
}

/// Chain prolongation through a sequence of nested refinements
/// (chain[0] refines the source mesh, chain.back() is the target).
inline std::vector<double> prolong_chain(const std::vector<const Mesh*>& chain,
                                         std::vector<double> values) {
  for (const Mesh* m : chain) values = prolong(*m, values);
  return values;
}

struct ReferenceError {
  double abs_u = 0.0, rel_u = 0.0;
  double abs_phi = 0.0, rel_phi = 0.0;
};

/// Compares a coarse run against a reference run on a nested finer mesh and
/// time grid. The coarse solution is prolonged exactly (nested P1); times are
/// restricted to the coarse grid points, where the fine solution coincides.
inline ReferenceError reference_compare(const TransientSolution& coarse, const TimeGrid& coarse_grid,
                                        const std::vector<const Mesh*>& chain,
                                        const TransientSolution& fine, const TimeGrid& fine_grid,
                                        const Mesh& fine_mesh) {
  if (fine_grid.level < coarse_grid.level || fine_grid.T != coarse_grid.T)
    throw ModelError("reference_compare: time grids are not nested");
  const int ratio = 1 << (fine_grid.level - coarse_grid.level);
  const double tau = coarse_grid.tau();

  double eu = 0.0, ru = 0.0, ep = 0.0, rp = 0.0;
  for (int n = 1; n <= coarse_grid.steps(); ++n) {
    auto uc = prolong_chain(chain, coarse.u[n]);
    auto pc = prolong_chain(chain, coarse.phi[n]);
    const auto& uf = fine.u[n * ratio];
    const auto& pf = fine.phi[n * ratio];
    if (uc.size() != uf.size()) throw ModelError("reference_compare: meshes are not nested");
    std::vector<double> du(uf.size()), dp(pf.size());
    for (std::size_t i = 0; i < uf.size(); ++i) {
      du[i] = uc[i] - uf[i];
      dp[i] = pc[i] - pf[i];
    }
    eu += tau * h1_error_sq(fine_mesh, &du, nullptr, 0.0, tet_rule_degree2());
    ru += tau * h1_error_sq(fine_mesh, &uf, nullptr, 0.0, tet_rule_degree2());
    ep += tau * h1_error_sq(fine_mesh, &dp, nullptr, 0.0, tet_rule_degree2());
    rp += tau * h1_error_sq(fine_mesh, &pf, nullptr, 0.0, tet_rule_degree2());
  }
  ReferenceError e;
  e.abs_u = std::sqrt(eu);
  e.rel_u = ru > 0.0 ? e.abs_u / std::sqrt(ru) : e.abs_u;
  e.abs_phi = std::sqrt(ep);
  e.rel_phi = rp > 0.0 ? e.abs_phi / std::sqrt(rp) : e.abs_phi;
  return e;
}

/// log2(e_k / e_{k+1}) per consecutive pair; infinity when the finer error
/// vanishes (exactly resolved).
inline std::vector<double> observed_order(const std::vector<double>& errors) {
  if (errors.size() < 2) throw ModelError("observed_order: need at least two levels");
  std::vector<double> orders;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    if (errors[i + 1] == 0.0)
      orders.push_back(std::numeric_limits<double>::infinity());
    else
      orders.push_back(std::log2(errors[i] / errors[i + 1]));
  }
  return orders;
}

/// Per-level record of a convergence study.
struct ErrorReportRow {
  int k = 0;
  double h = 0.0;
  double tau = 0.0;
  int dofs = 0;
  double rel_err_u = 0.0;
  double rel_err_phi = 0.0;
};

struct ErrorReport {
  std::vector<ErrorReportRow> rows;

  std::vector<double> orders_u() const {
    std::vector<double> e;
    for (const auto& r : rows) e.push_back(r.rel_err_u);
    return observed_order(e);
  }
  std::vector<double> orders_phi() const {
    std::vector<double> e;
    for (const auto& r : rows) e.push_back(r.rel_err_phi);
    return observed_order(e);
  }

  void validate() const {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0 && rows[i].k <= rows[i - 1].k)
        throw ModelError("error report: levels must be strictly increasing");
      if (!(rows[i].rel_err_u >= 0.0) || !std::isfinite(rows[i].rel_err_u) ||
          !(rows[i].rel_err_phi >= 0.0) || !std::isfinite(rows[i].rel_err_phi))
        throw ModelError("error report: errors must be finite and nonnegative");
    }
  }
};

}  // namespace jouleheat

#endif
