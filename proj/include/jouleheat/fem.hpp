#ifndef JOULEHEAT_FEM_HPP
#define JOULEHEAT_FEM_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "jouleheat/core.hpp"
#include "jouleheat/mesh.hpp"
#include "jouleheat/quadrature.hpp"
#include "jouleheat/solve.hpp"
#include "jouleheat/sparse.hpp"

namespace jouleheat {

enum class Field { temperature, potential };

inline std::string field_name(Field f) {
  return f == Field::temperature ? "temperature" : "potential";
}

struct BoundaryPartition {
  Field field = Field::temperature;
  std::set<int> dirichlet_tags;
  std::set<int> neumann_tags;
};

/// Checks disjointness, coverage of the mesh's tags, and meas(Gamma_D) > 0.
inline void validate_partition(const Mesh& mesh, const BoundaryPartition& p) {
  for (int t : p.dirichlet_tags)
    if (p.neumann_tags.count(t))
      throw ConfigError("boundary partition: tag " + std::to_string(t) +
                        " is both Dirichlet and Neumann");
  auto present = mesh.tags();
  for (int t : present)
    if (!p.dirichlet_tags.count(t) && !p.neumann_tags.count(t))
      throw ConfigError("boundary partition (" + field_name(p.field) + "): mesh tag " +
                        std::to_string(t) + " is not assigned");
  bool any_dirichlet = false;
  for (const auto& bf : mesh.boundary_facets)
    if (p.dirichlet_tags.count(bf.tag)) {
      any_dirichlet = true;
      break;
    }
  if (!any_dirichlet)
    throw ConfigError("boundary partition (" + field_name(p.field) +
                      "): no Dirichlet facet selected");
}

/// Continuous P1 Lagrange space: one dof per vertex, Dirichlet vertices are
/// exactly those incident to facets whose tag is Dirichlet for the field.
struct FeSpace {
  const Mesh* mesh = nullptr;
  BoundaryPartition partition;
  std::vector<char> on_dirichlet;        // per vertex
  std::vector<int> dirichlet_vertices;   // sorted

  int dof_count() const { return mesh->vertex_count(); }

  static FeSpace build(const Mesh& mesh, const BoundaryPartition& partition) {
    validate_partition(mesh, partition);
    FeSpace s;
    s.mesh = &mesh;
    s.partition = partition;
    s.on_dirichlet.assign(mesh.vertex_count(), 0);
    for (const auto& bf : mesh.boundary_facets)
      if (partition.dirichlet_tags.count(bf.tag))
        for (int v : bf.v) s.on_dirichlet[v] = 1;
    for (int v = 0; v < mesh.vertex_count(); ++v)
      if (s.on_dirichlet[v]) s.dirichlet_vertices.push_back(v);
    return s;
  }
};

struct FeFunction {
  const FeSpace* space = nullptr;
  std::vector<double> values;
};

/// Per-cell geometry: vertex coordinates, constant barycentric gradients,
/// and the (positive) volume.
struct CellGeometry {
  std::array<Vec3, 4> x;
  std::array<Vec3, 4> grad;
  double volume = 0.0;

  Vec3 point(const std::array<double, 4>& bary) const {
    Vec3 p{0, 0, 0};
    for (int i = 0; i < 4; ++i) p += bary[i] * x[i];
    return p;
  }
};

inline CellGeometry cell_geometry(const Mesh& mesh, int c) {
  CellGeometry g;
  const auto& t = mesh.cells[c];
  for (int i = 0; i < 4; ++i) g.x[i] = mesh.vertices[t[i]];
  Vec3 d1 = g.x[1] - g.x[0];
  Vec3 d2 = g.x[2] - g.x[0];
  Vec3 d3 = g.x[3] - g.x[0];
  double det = dot(d1, cross(d2, d3));
  g.volume = det / 6.0;
  // Rows of the inverse Jacobian are the gradients of lambda_1..3.
  Vec3 r1 = cross(d2, d3) * (1.0 / det);
  Vec3 r2 = cross(d3, d1) * (1.0 / det);
  Vec3 r3 = cross(d1, d2) * (1.0 / det);
  g.grad[1] = r1;
  g.grad[2] = r2;
  g.grad[3] = r3;
  g.grad[0] = Vec3{0, 0, 0} - (r1 + r2 + r3);
  return g;
}

/// Gradient of a P1 function on cell c (constant there).
inline Vec3 cell_gradient(const Mesh& mesh, const CellGeometry& g, int c,
                          const std::vector<double>& nodal) {
  Vec3 grad{0, 0, 0};
  const auto& t = mesh.cells[c];
  for (int i = 0; i < 4; ++i) grad += nodal[t[i]] * g.grad[i];
  return grad;
}

// ---------------------------------------------------------------------------
// Cut-off functional
// ---------------------------------------------------------------------------

/// Clamp bounds (a, b); the pointwise cut-off of a tilde-field f is
/// min(max(f + g, a), b) - g where g is the boundary lifting.
struct CutoffBounds {
  double a = -std::numeric_limits<double>::infinity();
  double b = std::numeric_limits<double>::infinity();
};

inline double cutoff_apply(double f_tilde, double g, const CutoffBounds& cb) {
  double total = f_tilde + g;
  if (total < cb.a) return cb.a - g;
  if (total > cb.b) return cb.b - g;
  return f_tilde;  // exact identity when the clamp is inactive
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

/// Scalar coefficient sampled at a quadrature point of a cell.
using CellCoeffFn = std::function<double(int cell, const Vec3& x, const std::array<double, 4>& bary)>;

/// Mass matrix M_ij = int lambda_i lambda_j (degree-2 rule, exact).
inline SparseMatrix assemble_mass(const FeSpace& space) {
  const Mesh& mesh = *space.mesh;
  const TetRule& rule = tet_rule_degree2();
  std::vector<Triplet> trips;
  trips.reserve(16 * mesh.cell_count());
  for (int c = 0; c < mesh.cell_count(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    const auto& t = mesh.cells[c];
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& bary = rule.points[q];
      double wv = rule.weights[q] * g.volume;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          trips.push_back({t[i], t[j], wv * bary[i] * bary[j]});
    }
  }
  return SparseMatrix::from_triplets(space.dof_count(), space.dof_count(), trips);
}

namespace detail {

template <typename Emit>
inline void stiffness_cells(const FeSpace& space, const CellCoeffFn& coeff,
                            const TetRule& rule, Emit&& emit) {
  const Mesh& mesh = *space.mesh;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    const auto& t = mesh.cells[c];
    double cw = 0.0;  // volume-weighted coefficient integral over the cell
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      double v = coeff(c, g.point(rule.points[q]), rule.points[q]);
      if (!std::isfinite(v))
        throw ModelError("assemble_stiffness: non-finite coefficient at quadrature point");
      cw += rule.weights[q] * v;
    }
    cw *= g.volume;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        emit(t[i], t[j], cw * dot(g.grad[i], g.grad[j]));
  }
}

}  // namespace detail

/// Weighted stiffness (K_c)_ij = int c grad lambda_i . grad lambda_j.
inline SparseMatrix assemble_stiffness(const FeSpace& space, const CellCoeffFn& coeff,
                                       const TetRule& rule = tet_rule_degree2()) {
  std::vector<Triplet> trips;
  trips.reserve(16 * space.mesh->cell_count());
  detail::stiffness_cells(space, coeff, rule,
                          [&](int i, int j, double v) { trips.push_back({i, j, v}); });
  return SparseMatrix::from_triplets(space.dof_count(), space.dof_count(), trips);
}

inline SparseMatrix assemble_stiffness(const FeSpace& space, double constant = 1.0) {
  return assemble_stiffness(space, [constant](int, const Vec3&, const std::array<double, 4>&) {
    return constant;
  });
}

/// Refills an existing matrix (same sparsity pattern) with a new coefficient.
inline void assemble_stiffness_into(SparseMatrix& A, const FeSpace& space,
                                    const CellCoeffFn& coeff,
                                    const TetRule& rule = tet_rule_degree2()) {
  A.set_zero();
  detail::stiffness_cells(space, coeff, rule,
                          [&](int i, int j, double v) { A.add_at(i, j, v); });
}

/// Load vector b_i = int f(x, t) lambda_i (degree-4 rule by default).
inline std::vector<double> assemble_load(const FeSpace& space, const SpaceTimeFn& f, double t,
                                         const TetRule& rule = tet_rule_degree4()) {
  const Mesh& mesh = *space.mesh;
  std::vector<double> b(space.dof_count(), 0.0);
  for (int c = 0; c < mesh.cell_count(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    const auto& cell = mesh.cells[c];
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& bary = rule.points[q];
      double fv = f(g.point(bary), t);
      if (!std::isfinite(fv)) throw ModelError("assemble_load: non-finite integrand");
      double wv = rule.weights[q] * g.volume * fv;
      for (int i = 0; i < 4; ++i) b[cell[i]] += wv * bary[i];
    }
  }
  return b;
}

/// Surface load over the facets carrying one of the given tags:
/// b_i = int_Gamma g(x, t) lambda_i ds.
inline std::vector<double> assemble_neumann(const FeSpace& space, const SpaceTimeFn& g,
                                            const std::set<int>& tags, double t,
                                            const TriRule& rule = tri_rule_degree4()) {
  const Mesh& mesh = *space.mesh;
  auto present = mesh.tags();
  for (int tag : tags)
    if (!present.count(tag))
      throw ConfigError("assemble_neumann: tag " + std::to_string(tag) + " not present on mesh");

  std::vector<double> b(space.dof_count(), 0.0);
  for (const auto& bf : mesh.boundary_facets) {
    if (!tags.count(bf.tag)) continue;
    const Vec3& p0 = mesh.vertices[bf.v[0]];
    const Vec3& p1 = mesh.vertices[bf.v[1]];
    const Vec3& p2 = mesh.vertices[bf.v[2]];
    double area = 0.5 * norm(cross(p1 - p0, p2 - p0));
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& bary = rule.points[q];
      Vec3 x = bary[0] * p0 + bary[1] * p1 + bary[2] * p2;
      double gv = g(x, t);
      if (!std::isfinite(gv)) throw ModelError("assemble_neumann: non-finite integrand");
      double wv = rule.weights[q] * area * gv;
      for (int i = 0; i < 3; ++i) b[bf.v[i]] += wv * bary[i];
    }
  }
  return b;
}

struct JouleRhsResult {
  std::vector<double> b;
  double clamp_active_fraction = 0.0;  // fraction of quadrature points clamped
};

/// Right-hand side of the temperature equation,
///   b_i = -int sigma(u_h) cutoff(phi_tilde_h) grad phi_h . grad lambda_i
///         +int sigma(u_h) (grad phi_h . grad g_phi_h) lambda_i,
/// with the cut-off evaluated pointwise at quadrature points from the nodal
/// values of phi_tilde_h and g_phi_h.
inline JouleRhsResult assemble_joule_rhs(const FeSpace& space_u, const std::vector<double>& u_h,
                                         const std::vector<double>& phi_h,
                                         const std::vector<double>& g_phi_h,
                                         const std::function<double(double)>& sigma,
                                         const CutoffBounds& clamp,
                                         const TetRule& rule = tet_rule_degree4()) {
  if (clamp.a > clamp.b) throw ConfigError("assemble_joule_rhs: invalid clamp (a > b)");
  const Mesh& mesh = *space_u.mesh;
  JouleRhsResult result;
  result.b.assign(space_u.dof_count(), 0.0);
  std::int64_t active = 0, total = 0;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    const auto& cell = mesh.cells[c];
    Vec3 grad_phi = cell_gradient(mesh, g, c, phi_h);
    Vec3 grad_g = cell_gradient(mesh, g, c, g_phi_h);
    double cross_term = dot(grad_phi, grad_g);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& bary = rule.points[q];
      double u = 0.0, phi_tilde = 0.0, g_val = 0.0;
      for (int i = 0; i < 4; ++i) {
        u += bary[i] * u_h[cell[i]];
        phi_tilde += bary[i] * (phi_h[cell[i]] - g_phi_h[cell[i]]);
        g_val += bary[i] * g_phi_h[cell[i]];
      }
      double s = sigma(u);
      if (!std::isfinite(s)) throw ModelError("assemble_joule_rhs: non-finite conductivity");
      double clamped = cutoff_apply(phi_tilde, g_val, clamp);
      ++total;
      if (clamped != phi_tilde) ++active;
      double wv = rule.weights[q] * g.volume;
      for (int i = 0; i < 4; ++i) {
        result.b[cell[i]] -= wv * s * clamped * dot(grad_phi, g.grad[i]);
        result.b[cell[i]] += wv * s * cross_term * bary[i];
      }
    }
  }
  result.clamp_active_fraction = total > 0 ? static_cast<double>(active) / total : 0.0;
  return result;
}

/// Nodal interpolant.
inline std::vector<double> interpolate(const FeSpace& space, const SpaceTimeFn& f, double t) {
  const Mesh& mesh = *space.mesh;
  std::vector<double> v(space.dof_count());
  for (int i = 0; i < mesh.vertex_count(); ++i) v[i] = f(mesh.vertices[i], t);
  return v;
}

/// Full-space L2 projection: solves M x = (f, lambda_i).
inline std::vector<double> l2_project(const FeSpace& space, const SpaceTimeFn& f, double t,
                                      const SolverConfig& config = {}) {
  SparseMatrix M = assemble_mass(space);
  auto b = assemble_load(space, f, t);
  return cg_solve(M, b, config).x;
}

/// Symmetric Dirichlet elimination: zero row/column, unit diagonal, move the
/// known values to the right-hand side. boundary_values only needs valid
/// entries at Dirichlet vertices.
inline void apply_dirichlet(SparseMatrix& A, std::vector<double>& b,
                            const std::vector<char>& on_dirichlet,
                            const std::vector<double>& boundary_values) {
  const int n = A.rows();
  for (int r = 0; r < n; ++r) {
    if (on_dirichlet[r]) continue;
    for (int k = A.row_begin(r); k < A.row_end(r); ++k) {
      int c = A.col_index(k);
      if (on_dirichlet[c]) {
        b[r] -= A.value(k) * boundary_values[c];
        A.value(k) = 0.0;
      }
    }
  }
  for (int r = 0; r < n; ++r) {
    if (!on_dirichlet[r]) continue;
    for (int k = A.row_begin(r); k < A.row_end(r); ++k)
      A.value(k) = (A.col_index(k) == r) ? 1.0 : 0.0;
    b[r] = boundary_values[r];
  }
}

}  // namespace jouleheat

#endif
