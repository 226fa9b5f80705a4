#ifndef JOULEHEAT_PROBLEM_HPP
#define JOULEHEAT_PROBLEM_HPP

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "jouleheat/fem.hpp"
#include "jouleheat/mesh.hpp"

namespace jouleheat {

/// Electric conductivity model: value, derivative, and the bounds
/// 0 < lower <= sigma <= upper plus a Lipschitz constant.
struct SigmaModel {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  double lower = 1.0;
  double upper = 1.0;
  double lipschitz = 0.0;

  static SigmaModel constant(double c) {
    if (!(c > 0.0)) throw ConfigError("constant conductivity must be positive");
    SigmaModel m;
    m.value = [c](double) { return c; };
    m.derivative = [](double) { return 0.0; };
    m.lower = m.upper = c;
    m.lipschitz = 0.0;
    return m;
  }

  /// sigma(u) = (pi - arctan(u)) / 2; bounds pi/4 and 3*pi/4, Lipschitz 1/2.
  static SigmaModel arctan_model() {
    SigmaModel m;
    m.value = [](double u) { return 0.5 * (M_PI - std::atan(u)); };
    m.derivative = [](double u) { return -0.5 / (1.0 + u * u); };
    m.lower = M_PI / 4.0;
    m.upper = 3.0 * M_PI / 4.0;
    m.lipschitz = 0.5;
    return m;
  }

  /// Piecewise-linear table (x_i, y_i); constant extension outside the knots.
  static SigmaModel tabulated(std::vector<std::pair<double, double>> table) {
    if (table.size() < 2) throw ConfigError("tabulated conductivity needs at least two knots");
    std::sort(table.begin(), table.end());
    SigmaModel m;
    m.lower = table[0].second;
    m.upper = table[0].second;
    m.lipschitz = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i) {
      m.lower = std::min(m.lower, table[i].second);
      m.upper = std::max(m.upper, table[i].second);
      if (i > 0) {
        double dx = table[i].first - table[i - 1].first;
        if (!(dx > 0.0)) throw ConfigError("tabulated conductivity knots must be strictly increasing");
        m.lipschitz = std::max(m.lipschitz, std::abs(table[i].second - table[i - 1].second) / dx);
      }
    }
    if (!(m.lower > 0.0)) throw ConfigError("tabulated conductivity must stay positive");
    auto eval = [table](double x, bool deriv) {
      if (x <= table.front().first) return deriv ? 0.0 : table.front().second;
      if (x >= table.back().first) return deriv ? 0.0 : table.back().second;
      std::size_t i = 1;
      while (table[i].first < x) ++i;
      double t = (x - table[i - 1].first) / (table[i].first - table[i - 1].first);
      double slope = (table[i].second - table[i - 1].second) / (table[i].first - table[i - 1].first);
      return deriv ? slope : (1.0 - t) * table[i - 1].second + t * table[i].second;
    };
    m.value = [eval](double x) { return eval(x, false); };
    m.derivative = [eval](double x) { return eval(x, true); };
    return m;
  }
};

/// Sampled audit of the conductivity bounds and the Lipschitz constant on
/// [-radius, radius]; throws ModelError on violation.
inline void audit_sigma(const SigmaModel& m, double radius = 50.0, int samples = 2001) {
  if (!(m.lower > 0.0) || !(m.upper >= m.lower))
    throw ModelError("sigma audit: bounds must satisfy 0 < lower <= upper");
  double prev_x = 0.0, prev_v = 0.0;
  const double slack = 1e-12;
  for (int i = 0; i < samples; ++i) {
    double x = -radius + 2.0 * radius * i / (samples - 1);
    double v = m.value(x);
    if (!std::isfinite(v)) throw ModelError("sigma audit: non-finite value");
    if (v < m.lower - slack || v > m.upper + slack)
      throw ModelError("sigma audit: value " + std::to_string(v) + " outside bounds at x = " +
                       std::to_string(x));
    if (i > 0 && std::abs(v - prev_v) > (m.lipschitz + 1e-9) * std::abs(x - prev_x) + slack)
      throw ModelError("sigma audit: Lipschitz constant violated near x = " + std::to_string(x));
    prev_x = x;
    prev_v = v;
  }
}

/// Uniform backward Euler grid: tau = 2^-level * T, t_n = n * tau.
struct TimeGrid {
  double T = 0.1;
  int level = 0;

  int steps() const { return 1 << level; }
  double tau() const { return T / static_cast<double>(steps()); }
  double time(int n) const { return T * static_cast<double>(n) / static_cast<double>(steps()); }
};

/// Dirichlet boundary datum. Either a globally defined function (the lifting
/// interpolates it at every vertex) or per-tag values (the lifting is the
/// discrete zero extension: datum at Dirichlet vertices, zero elsewhere).
struct DirichletData {
  SpaceTimeFn global;
  std::map<int, SpaceTimeFn> per_tag;

  static DirichletData from_global(SpaceTimeFn f) {
    DirichletData d;
    d.global = std::move(f);
    return d;
  }
  static DirichletData from_tags(std::map<int, SpaceTimeFn> per_tag) {
    DirichletData d;
    d.per_tag = std::move(per_tag);
    return d;
  }
};

/// Nodal lifting of a Dirichlet datum on a fixed space. In per-tag mode a
/// vertex incident to several Dirichlet patches takes the lowest tag's value.
class DirichletLift {
 public:
  DirichletLift() = default;

  DirichletLift(const FeSpace& space, const DirichletData& data)
      : space_(&space), data_(&data) {
    if (data.global) return;
    const Mesh& mesh = *space.mesh;
    vertex_tag_.assign(mesh.vertex_count(), 0);
    for (const auto& bf : mesh.boundary_facets) {
      if (!space.partition.dirichlet_tags.count(bf.tag)) continue;
      if (!data.per_tag.count(bf.tag))
        throw ConfigError("Dirichlet tag " + std::to_string(bf.tag) + " has no datum");
      for (int v : bf.v) {
        if (vertex_tag_[v] == 0 || bf.tag < vertex_tag_[v]) vertex_tag_[v] = bf.tag;
      }
    }
  }

  std::vector<double> values(double t) const {
    const Mesh& mesh = *space_->mesh;
    std::vector<double> out(mesh.vertex_count(), 0.0);
    if (data_->global) {
      for (int v = 0; v < mesh.vertex_count(); ++v) out[v] = data_->global(mesh.vertices[v], t);
    } else {
      for (int v = 0; v < mesh.vertex_count(); ++v)
        if (vertex_tag_[v] != 0) out[v] = data_->per_tag.at(vertex_tag_[v])(mesh.vertices[v], t);
    }
    for (double v : out)
      if (!std::isfinite(v)) throw ModelError("Dirichlet datum is not finite");
    return out;
  }

 private:
  const FeSpace* space_ = nullptr;
  const DirichletData* data_ = nullptr;
  std::vector<int> vertex_tag_;
};

/// Everything a run needs besides mesh and time grid.
struct ProblemData {
  DirichletData g_u;
  DirichletData g_phi;
  SpaceTimeFn u0;
  SigmaModel sigma = SigmaModel::constant(1.0);
  BoundaryPartition bc_u;
  BoundaryPartition bc_phi;

  SpaceTimeFn source_f;              // optional extra volume source
  SpaceTimeFn neumann_g;             // optional Neumann datum for the potential
  std::set<int> neumann_flux_tags;   // facet tags where neumann_g applies

  std::optional<CutoffBounds> clamp_override;
};

/// Default cut-off bounds: a = min, b = max of the potential Dirichlet datum
/// over all Dirichlet vertices and all time-grid points.
inline CutoffBounds default_cutoff_bounds(const FeSpace& space_phi, const DirichletLift& lift_phi,
                                          const TimeGrid& grid) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int n = 0; n <= grid.steps(); ++n) {
    auto g = lift_phi.values(grid.time(n));
    for (int v : space_phi.dirichlet_vertices) {
      lo = std::min(lo, g[v]);
      hi = std::max(hi, g[v]);
    }
  }
  if (!(lo <= hi)) throw ModelError("cut-off bounds: no Dirichlet vertices");
  return {lo, hi};
}

inline CutoffBounds resolve_cutoff_bounds(const ProblemData& data, const FeSpace& space_phi,
                                          const DirichletLift& lift_phi, const TimeGrid& grid) {
  CutoffBounds defaults = default_cutoff_bounds(space_phi, lift_phi, grid);
  if (!data.clamp_override) return defaults;
  CutoffBounds cb = *data.clamp_override;
  if (cb.a > defaults.a + 1e-12 || cb.b < defaults.b - 1e-12)
    throw ConfigError("cut-off override must satisfy a <= min g_phi and b >= max g_phi");
  return cb;
}

}  // namespace jouleheat

#endif
