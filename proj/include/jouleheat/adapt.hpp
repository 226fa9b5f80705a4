#ifndef JOULEHEAT_ADAPT_HPP
#define JOULEHEAT_ADAPT_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "jouleheat/fem.hpp"
#include "jouleheat/mesh.hpp"
#include "jouleheat/norms.hpp"
#include "jouleheat/problem.hpp"
#include "jouleheat/stepper.hpp"

namespace jouleheat {

/// Linear goal functional M(u_h). Only the domain integral of the
/// temperature is shipped; weight scales it (handy for linearity checks).
struct GoalFunctional {
  enum class Kind { domain_integral_of_u };
  Kind kind = Kind::domain_integral_of_u;
  double weight = 1.0;
};

/// m_i = weight * int lambda_i; M(u_h) = m . u.
inline std::vector<double> goal_vector(const FeSpace& space_u, const GoalFunctional& goal) {
  const Mesh& mesh = *space_u.mesh;
  std::vector<double> m(space_u.dof_count(), 0.0);
  for (int c = 0; c < mesh.cell_count(); ++c) {
    double w = goal.weight * mesh.cell_volume(c) / 4.0;
    for (int i = 0; i < 4; ++i) m[mesh.cells[c][i]] += w;
  }
  return m;
}

inline double goal_value(const FeSpace& space_u, const GoalFunctional& goal,
                         const std::vector<double>& u) {
  auto m = goal_vector(space_u, goal);
  return jouleheat::dot(m, u);
}

/// Snapshot of one converged backward Euler step, everything the dual solve
/// and the error indicators need.
struct StepState {
  const Mesh* mesh = nullptr;
  const FeSpace* space_u = nullptr;
  const FeSpace* space_phi = nullptr;
  const std::vector<double>* u = nullptr;       // u^n
  const std::vector<double>* u_prev = nullptr;  // u^{n-1} on the same mesh
  const std::vector<double>* phi = nullptr;     // phi^n
  const std::vector<double>* g_phi = nullptr;   // potential lifting at t_n
  double tau = 1.0;
  double t = 0.0;
  const SigmaModel* sigma = nullptr;
  CutoffBounds clamp;
  SpaceTimeFn f;                   // may be empty
  SpaceTimeFn neumann_g;           // may be empty
  std::set<int> neumann_tags;
};

struct DualConfig {
  double tol = 1e-10;
  int max_iter = 200;
  SolverConfig linear;
  bool refined_dual = false;  // solve the dual on a uniformly refined mesh
};

struct DualSolution {
  std::vector<double> z_u, z_phi;
  int iterations = 0;
};

namespace detail {

// Indicator functions of the inactive clamp region and the clamp value at a
// vertex: phi_tilde + g within (a, b) differentiates to the identity.
inline double clamp_indicator(double phi_tilde, double g, const CutoffBounds& cb) {
  double total = phi_tilde + g;
  return (total > cb.a && total < cb.b) ? 1.0 : 0.0;
}

}  // namespace detail

/// Adjoint of the linearized coupled step operator at the computed state,
/// with homogeneous Dirichlet conditions; right-hand side the goal. Solved by
/// a block Gauss-Seidel iteration that keeps the SPD leading blocks implicit
/// and moves the nonsymmetric conductivity couplings to the right-hand side.
inline DualSolution solve_dual(const StepState& st, const GoalFunctional& goal,
                               const DualConfig& cfg = {}) {
  if (cfg.refined_dual) {
    // Comparison mode: solve on a uniformly refined mesh with the state
    // prolonged exactly, then restrict nodally (parent vertices keep ids).
    Mesh fine = refine_uniform(*st.mesh);
    FeSpace fsu = FeSpace::build(fine, st.space_u->partition);
    FeSpace fsp = FeSpace::build(fine, st.space_phi->partition);
    auto fu = prolong(fine, *st.u);
    auto fu_prev = prolong(fine, *st.u_prev);
    auto fphi = prolong(fine, *st.phi);
    auto fg = prolong(fine, *st.g_phi);
    StepState fst = st;
    fst.mesh = &fine;
    fst.space_u = &fsu;
    fst.space_phi = &fsp;
    fst.u = &fu;
    fst.u_prev = &fu_prev;
    fst.phi = &fphi;
    fst.g_phi = &fg;
    DualConfig direct = cfg;
    direct.refined_dual = false;
    DualSolution fine_dual = solve_dual(fst, goal, direct);
    DualSolution out;
    out.iterations = fine_dual.iterations;
    out.z_u.assign(fine_dual.z_u.begin(), fine_dual.z_u.begin() + st.mesh->vertex_count());
    out.z_phi.assign(fine_dual.z_phi.begin(), fine_dual.z_phi.begin() + st.mesh->vertex_count());
    return out;
  }

  const Mesh& mesh = *st.mesh;
  const FeSpace& su = *st.space_u;
  const FeSpace& sp = *st.space_phi;
  const int dofs = su.dof_count();
  const double tau = st.tau;
  const TetRule& rule = tet_rule_degree4();

  // Nonsymmetric coupling blocks (trial index = column, test index = row):
  //   N: delta-u terms in the temperature equation,
  //   Q: delta-u terms in the potential equation,
  //   P: delta-phi terms in the temperature equation,
  //   S: sigma-weighted stiffness (the potential equation's own block).
  std::vector<Triplet> tn, tq, tp, ts;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    const auto& cell = mesh.cells[c];
    Vec3 grad_phi = cell_gradient(mesh, g, c, *st.phi);
    Vec3 grad_g = cell_gradient(mesh, g, c, *st.g_phi);
    double cross = dot(grad_phi, grad_g);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& bary = rule.points[q];
      double uv = 0.0, pt = 0.0, gv = 0.0;
      for (int i = 0; i < 4; ++i) {
        uv += bary[i] * (*st.u)[cell[i]];
        pt += bary[i] * ((*st.phi)[cell[i]] - (*st.g_phi)[cell[i]]);
        gv += bary[i] * (*st.g_phi)[cell[i]];
      }
      double s = st.sigma->value(uv);
      double sp_ = st.sigma->derivative(uv);
      double clamped = cutoff_apply(pt, gv, st.clamp);
      double active = detail::clamp_indicator(pt, gv, st.clamp);
      double wv = rule.weights[q] * g.volume;
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
          // N(δu λ_j, v λ_i)
          double n_val = sp_ * bary[j] * clamped * dot(grad_phi, g.grad[i]) -
                         sp_ * bary[j] * cross * bary[i];
          tn.push_back({cell[i], cell[j], wv * n_val});
          // Q(δu λ_j, w λ_i)
          tq.push_back({cell[i], cell[j], wv * sp_ * bary[j] * dot(grad_phi, g.grad[i])});
          // P(δφ λ_j, v λ_i)
          double p_val = s * active * bary[j] * dot(grad_phi, g.grad[i]) +
                         s * clamped * dot(g.grad[j], g.grad[i]) -
                         s * dot(g.grad[j], grad_g) * bary[i];
          tp.push_back({cell[i], cell[j], wv * p_val});
          // S(δφ λ_j, w λ_i)
          ts.push_back({cell[i], cell[j], wv * s * dot(g.grad[j], g.grad[i])});
        }
      }
    }
  }
  auto N = SparseMatrix::from_triplets(dofs, dofs, std::move(tn));
  auto Q = SparseMatrix::from_triplets(dofs, dofs, std::move(tq));
  auto P = SparseMatrix::from_triplets(dofs, dofs, std::move(tp));
  auto S = SparseMatrix::from_triplets(dofs, dofs, std::move(ts));

  auto M = assemble_mass(su);
  SparseMatrix H = M;  // M + tau K
  {
    auto K = assemble_stiffness(su, 1.0);
    for (int r = 0; r < H.rows(); ++r)
      for (int k = H.row_begin(r); k < H.row_end(r); ++k) H.value(k) += tau * K.value(k);
  }
  std::vector<double> zero_bc(dofs, 0.0);
  std::vector<double> dummy(dofs, 0.0);
  apply_dirichlet(H, dummy, su.on_dirichlet, zero_bc);
  SparseMatrix S_elim = S;
  dummy.assign(dofs, 0.0);
  apply_dirichlet(S_elim, dummy, sp.on_dirichlet, zero_bc);

  auto m = goal_vector(su, goal);

  DualSolution out;
  out.z_u.assign(dofs, 0.0);
  out.z_phi.assign(dofs, 0.0);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    // Temperature block: (M/tau + K + N)^T z_u = m - Q^T z_phi, with the
    // N-coupling lagged.
    auto nt = N.multiply_transpose(out.z_u);
    auto qt = Q.multiply_transpose(out.z_phi);
    std::vector<double> bu(dofs);
    for (int i = 0; i < dofs; ++i) bu[i] = tau * (m[i] - nt[i] - qt[i]);
    for (int v : su.dirichlet_vertices) bu[v] = 0.0;
    auto zu = cg_solve(H, bu, cfg.linear, &out.z_u).x;

    // Potential block: S z_phi = -P^T z_u.
    auto pt = P.multiply_transpose(zu);
    std::vector<double> bp(dofs);
    for (int i = 0; i < dofs; ++i) bp[i] = -pt[i];
    for (int v : sp.dirichlet_vertices) bp[v] = 0.0;
    auto zp = cg_solve(S_elim, bp, cfg.linear, &out.z_phi).x;

    double du = 0.0, dp = 0.0, nu = 0.0, np = 0.0;
    for (int i = 0; i < dofs; ++i) {
      du += (zu[i] - out.z_u[i]) * (zu[i] - out.z_u[i]);
      dp += (zp[i] - out.z_phi[i]) * (zp[i] - out.z_phi[i]);
      nu += zu[i] * zu[i];
      np += zp[i] * zp[i];
    }
    out.z_u = std::move(zu);
    out.z_phi = std::move(zp);
    out.iterations = it;
    if (std::sqrt(du + dp) <= cfg.tol * std::max(std::sqrt(nu + np), 1e-30)) return out;
  }
  throw SolverError("solve_dual: block iteration did not converge");
}

struct ErrorIndicators {
  std::vector<double> eta;  // one nonnegative entry per cell

  double total() const { return std::accumulate(eta.begin(), eta.end(), 0.0); }
  void validate() const {
    for (double e : eta)
      if (!(e >= 0.0) || !std::isfinite(e)) throw SolverError("indicator not finite/nonnegative");
  }
};

namespace detail {

// Volume-weighted patch average of the cellwise gradients (recovery of a
// nodal gradient from a P1 field).
inline std::vector<Vec3> recover_gradient(const Mesh& mesh, const std::vector<double>& z) {
  std::vector<Vec3> g(mesh.vertex_count(), Vec3{0, 0, 0});
  std::vector<double> w(mesh.vertex_count(), 0.0);
  for (int c = 0; c < mesh.cell_count(); ++c) {
    CellGeometry geo = cell_geometry(mesh, c);
    Vec3 grad = cell_gradient(mesh, geo, c, z);
    for (int i = 0; i < 4; ++i) {
      int v = mesh.cells[c][i];
      g[v] += geo.volume * grad;
      w[v] += geo.volume;
    }
  }
  for (int v = 0; v < mesh.vertex_count(); ++v)
    if (w[v] > 0.0) g[v] = g[v] * (1.0 / w[v]);
  return g;
}

// Quadratic dual-weight z* - I_h z* from nodal values and recovered nodal
// gradients: w(x) = 1/2 sum_i lambda_i(x) G_i . (x - x_i). Continuous across
// faces (face values depend only on face vertices).
struct RecoveredWeight {
  const Mesh* mesh;
  const std::vector<double>* z;
  std::vector<Vec3> grad;

  RecoveredWeight(const Mesh& m, const std::vector<double>& field)
      : mesh(&m), z(&field), grad(recover_gradient(m, field)) {}

  double on_cell(int c, const std::array<double, 4>& bary, const Vec3& x) const {
    double w = 0.0;
    for (int i = 0; i < 4; ++i) {
      int v = mesh->cells[c][i];
      w += 0.5 * bary[i] * dot(grad[v], x - mesh->vertices[v]);
    }
    return w;
  }

  double on_face(const std::array<int, 3>& verts, const std::array<double, 3>& bary,
                 const Vec3& x) const {
    double w = 0.0;
    for (int i = 0; i < 3; ++i)
      w += 0.5 * bary[i] * dot(grad[verts[i]], x - mesh->vertices[verts[i]]);
    return w;
  }
};

struct FaceInfo {
  std::array<int, 3> v;
  int cell0 = -1, cell1 = -1;  // cell1 = -1 on the boundary
  int tag = 0;                 // boundary tag (0 for interior faces)
};

inline std::vector<FaceInfo> build_face_topology(const Mesh& mesh) {
  std::map<std::array<int, 3>, FaceInfo> faces;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const auto& t = mesh.cells[c];
    for (const auto& f : cell_faces()) {
      auto key = sorted_face(t[f[0]], t[f[1]], t[f[2]]);
      auto& info = faces[key];
      if (info.cell0 == -1) {
        info.v = key;
        info.cell0 = c;
      } else {
        info.cell1 = c;
      }
    }
  }
  for (const auto& bf : mesh.boundary_facets) {
    auto key = sorted_face(bf.v[0], bf.v[1], bf.v[2]);
    faces.at(key).tag = bf.tag;
  }
  std::vector<FaceInfo> out;
  out.reserve(faces.size());
  for (auto& [key, info] : faces) {
    (void)key;
    out.push_back(info);
  }
  return out;
}

// Vertex values of the polynomialized coefficients: sigma(u) and
// sigma(u) * cutoff(phi_tilde). Interpolating them cellwise keeps the local
// integration by parts exact, so the cell/facet decomposition reproduces the
// global residual functional to machine precision.
struct ResidualCoefficients {
  std::vector<double> sigma_v;       // sigma(u_i)
  std::vector<double> sigma_cut_v;   // sigma(u_i) * cutoff(phi_tilde_i)

  ResidualCoefficients(const StepState& st) {
    const Mesh& mesh = *st.mesh;
    sigma_v.resize(mesh.vertex_count());
    sigma_cut_v.resize(mesh.vertex_count());
    for (int i = 0; i < mesh.vertex_count(); ++i) {
      double s = st.sigma->value((*st.u)[i]);
      double pt = (*st.phi)[i] - (*st.g_phi)[i];
      sigma_v[i] = s;
      sigma_cut_v[i] = s * cutoff_apply(pt, (*st.g_phi)[i], st.clamp);
    }
  }
};

}  // namespace detail

/// Residual functional of the discrete step equations applied to (v, w),
/// assembled in variational form with the vertex-interpolated coefficients
/// of ResidualCoefficients (shared with the cell/facet decomposition below).
inline double global_residual(const StepState& st, const std::vector<double>& v,
                              const std::vector<double>& w) {
  const Mesh& mesh = *st.mesh;
  detail::ResidualCoefficients coeff(st);
  const TetRule& rule = tet_rule_degree4();
  double acc = 0.0;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    const auto& cell = mesh.cells[c];
    Vec3 grad_u = cell_gradient(mesh, g, c, *st.u);
    Vec3 grad_phi = cell_gradient(mesh, g, c, *st.phi);
    Vec3 grad_g = cell_gradient(mesh, g, c, *st.g_phi);
    Vec3 grad_v = cell_gradient(mesh, g, c, v);
    Vec3 grad_w = cell_gradient(mesh, g, c, w);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& bary = rule.points[q];
      Vec3 x = g.point(bary);
      double vv = 0.0, wv = 0.0, dbar = 0.0, sig = 0.0, sig_cut = 0.0;
      for (int i = 0; i < 4; ++i) {
        vv += bary[i] * v[cell[i]];
        wv += bary[i] * w[cell[i]];
        dbar += bary[i] * ((*st.u)[cell[i]] - (*st.u_prev)[cell[i]]) / st.tau;
        sig += bary[i] * coeff.sigma_v[cell[i]];
        sig_cut += bary[i] * coeff.sigma_cut_v[cell[i]];
      }
      double fv = st.f ? st.f(x, st.t) : 0.0;
      double integrand = (fv - dbar) * vv - dot(grad_u, grad_v) -
                         sig_cut * dot(grad_phi, grad_v) + sig * dot(grad_phi, grad_g) * vv -
                         sig * dot(grad_phi, grad_w);
      acc += rule.weights[q] * g.volume * integrand;
    }
  }
  if (st.neumann_g) {
    auto bn = assemble_neumann(*st.space_phi, st.neumann_g, st.neumann_tags, st.t);
    acc += jouleheat::dot(bn, w);
  }
  return acc;
}

/// Cell/facet decomposition of the same residual functional: per cell the
/// strong volume residual plus flux terms, interior jumps halved between the
/// two neighbours, Neumann mismatch on boundary faces, Dirichlet faces
/// skipped (the weights vanish there for admissible test functions).
/// Evaluation points are supplied by the two weight callbacks.
template <typename CellWeightU, typename FaceWeightU, typename CellWeightP, typename FaceWeightP>
std::vector<double> local_residuals(const StepState& st, CellWeightU&& weight_u_cell,
                                    FaceWeightU&& weight_u_face, CellWeightP&& weight_phi_cell,
                                    FaceWeightP&& weight_phi_face) {
  const Mesh& mesh = *st.mesh;
  detail::ResidualCoefficients coeff(st);
  const TetRule& rule = tet_rule_degree4();
  const TriRule& frule = tri_rule_degree4();
  std::vector<double> r(mesh.cell_count(), 0.0);

  std::vector<Vec3> grad_u(mesh.cell_count()), grad_phi(mesh.cell_count());
  std::vector<Vec3> grad_sig(mesh.cell_count()), grad_sig_cut(mesh.cell_count());
  std::vector<Vec3> grad_g(mesh.cell_count());
  for (int c = 0; c < mesh.cell_count(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    grad_u[c] = cell_gradient(mesh, g, c, *st.u);
    grad_phi[c] = cell_gradient(mesh, g, c, *st.phi);
    grad_g[c] = cell_gradient(mesh, g, c, *st.g_phi);
    grad_sig[c] = cell_gradient(mesh, g, c, coeff.sigma_v);
    grad_sig_cut[c] = cell_gradient(mesh, g, c, coeff.sigma_cut_v);

    // Volume terms: f - dbar u + div(sigma_cut grad phi) + sigma grad phi .
    // grad g for the temperature part; div(sigma grad phi) for the potential.
    const auto& cell = mesh.cells[c];
    double div_qu = dot(grad_sig_cut[c], grad_phi[c]);
    double div_qp = dot(grad_sig[c], grad_phi[c]);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& bary = rule.points[q];
      Vec3 x = g.point(bary);
      double dbar = 0.0, sig = 0.0;
      for (int i = 0; i < 4; ++i) {
        dbar += bary[i] * ((*st.u)[cell[i]] - (*st.u_prev)[cell[i]]) / st.tau;
        sig += bary[i] * coeff.sigma_v[cell[i]];
      }
      double fv = st.f ? st.f(x, st.t) : 0.0;
      double res_u = fv - dbar + div_qu + sig * dot(grad_phi[c], grad_g[c]);
      double res_phi = div_qp;
      r[c] += rule.weights[q] * g.volume *
              (res_u * weight_u_cell(c, bary, x) + res_phi * weight_phi_cell(c, bary, x));
    }
  }

  auto faces = detail::build_face_topology(mesh);
  for (const auto& face : faces) {
    const Vec3& p0 = mesh.vertices[face.v[0]];
    const Vec3& p1 = mesh.vertices[face.v[1]];
    const Vec3& p2 = mesh.vertices[face.v[2]];
    Vec3 nv = cross(p1 - p0, p2 - p0);
    double area = 0.5 * norm(nv);
    Vec3 n = nv * (1.0 / (2.0 * area));
    // Orient outward from cell0.
    {
      const auto& t = mesh.cells[face.cell0];
      Vec3 centroid{0, 0, 0};
      for (int i = 0; i < 4; ++i) centroid += 0.25 * mesh.vertices[t[i]];
      Vec3 face_mid = (p0 + p1 + p2) * (1.0 / 3.0);
      if (dot(n, face_mid - centroid) < 0.0) n = Vec3{0, 0, 0} - n;
    }

    bool interior = face.cell1 >= 0;
    bool u_neumann = !interior && st.space_u->partition.neumann_tags.count(face.tag) > 0;
    bool phi_neumann = !interior && st.space_phi->partition.neumann_tags.count(face.tag) > 0;
    bool phi_flux_data = phi_neumann && st.neumann_g && st.neumann_tags.count(face.tag) > 0;
    if (!interior && !u_neumann && !phi_neumann) continue;

    for (std::size_t q = 0; q < frule.points.size(); ++q) {
      const auto& bary = frule.points[q];
      Vec3 x = bary[0] * p0 + bary[1] * p1 + bary[2] * p2;
      double sig_cut = 0.0, sig = 0.0;
      for (int i = 0; i < 3; ++i) {
        sig_cut += bary[i] * coeff.sigma_cut_v[face.v[i]];
        sig += bary[i] * coeff.sigma_v[face.v[i]];
      }
      double wq = frule.weights[q] * area;
      double wu = weight_u_face(face.v, bary, x);
      double wp = weight_phi_face(face.v, bary, x);

      if (interior) {
        double jump_u = dot(n, grad_u[face.cell0] - grad_u[face.cell1]) +
                        sig_cut * dot(n, grad_phi[face.cell0] - grad_phi[face.cell1]);
        double jump_p = sig * dot(n, grad_phi[face.cell0] - grad_phi[face.cell1]);
        double half_u = -0.5 * wq * jump_u * wu;
        double half_p = -0.5 * wq * jump_p * wp;
        r[face.cell0] += half_u + half_p;
        r[face.cell1] += half_u + half_p;
      } else {
        if (u_neumann) {
          double flux = dot(n, grad_u[face.cell0]) + sig_cut * dot(n, grad_phi[face.cell0]);
          r[face.cell0] -= wq * flux * wu;
        }
        if (phi_neumann) {
          double data = phi_flux_data ? st.neumann_g(x, st.t) : 0.0;
          double flux = sig * dot(n, grad_phi[face.cell0]);
          r[face.cell0] += wq * (data - flux) * wp;
        }
      }
    }
  }
  return r;
}

/// Signed per-cell residuals applied to a pair of P1 test functions (used by
/// the decomposition identity check).
inline std::vector<double> local_residuals_applied(const StepState& st,
                                                   const std::vector<double>& v,
                                                   const std::vector<double>& w) {
  const Mesh& mesh = *st.mesh;
  auto cell_eval = [&mesh](const std::vector<double>& field) {
    return [&mesh, &field](int c, const std::array<double, 4>& bary, const Vec3&) {
      double val = 0.0;
      for (int i = 0; i < 4; ++i) val += bary[i] * field[mesh.cells[c][i]];
      return val;
    };
  };
  auto face_eval = [](const std::vector<double>& field) {
    return [&field](const std::array<int, 3>& verts, const std::array<double, 3>& bary,
                    const Vec3&) {
      double val = 0.0;
      for (int i = 0; i < 3; ++i) val += bary[i] * field[verts[i]];
      return val;
    };
  };
  return local_residuals(st, cell_eval(v), face_eval(v), cell_eval(w), face_eval(w));
}

/// Goal-oriented indicators eta_T = |r_T(z* - I_h z*)| with patch-recovered
/// dual weights.
inline ErrorIndicators compute_indicators(const StepState& st, const DualSolution& dual) {
  detail::RecoveredWeight wu(*st.mesh, dual.z_u);
  detail::RecoveredWeight wp(*st.mesh, dual.z_phi);
  auto r = local_residuals(
      st,
      [&](int c, const std::array<double, 4>& bary, const Vec3& x) { return wu.on_cell(c, bary, x); },
      [&](const std::array<int, 3>& verts, const std::array<double, 3>& bary, const Vec3& x) {
        return wu.on_face(verts, bary, x);
      },
      [&](int c, const std::array<double, 4>& bary, const Vec3& x) { return wp.on_cell(c, bary, x); },
      [&](const std::array<int, 3>& verts, const std::array<double, 3>& bary, const Vec3& x) {
        return wp.on_face(verts, bary, x);
      });
  ErrorIndicators out;
  out.eta.resize(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out.eta[i] = std::abs(r[i]);
  out.validate();
  return out;
}

/// Smallest prefix of cells in decreasing-indicator order whose sum reaches
/// theta * total; ties broken by cell index; zero-indicator cells never
/// marked.
inline std::set<int> mark_dorfler(const ErrorIndicators& ind, double theta) {
  if (!(theta > 0.0) || theta > 1.0) throw ConfigError("Dorfler fraction must be in (0, 1]");
  const double total = ind.total();
  std::set<int> marked;
  if (total <= 0.0) return marked;
  std::vector<int> order(ind.eta.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (ind.eta[a] != ind.eta[b]) return ind.eta[a] > ind.eta[b];
    return a < b;
  });
  double acc = 0.0;
  const double target = theta * total * (1.0 - 1e-12);
  for (int c : order) {
    if (ind.eta[c] <= 0.0) break;
    marked.insert(c);
    acc += ind.eta[c];
    if (acc >= target) break;
  }
  return marked;
}

struct AdaptConfig {
  double theta = 0.5;            // Dorfler fraction
  double eta_tol = 0.0;          // accept a step once total estimate <= eta_tol
  int max_vertices = 1 << 20;    // never refine past this vertex count
  int max_rounds_per_step = 30;
  FixedPointConfig fp;
  DualConfig dual;
  GoalFunctional goal;
};

struct AdaptStepRecord {
  int n = 0;
  double t = 0.0;
  int vertices = 0;
  int cells = 0;
  double eta_total = 0.0;
  double goal_value = 0.0;
  int refine_rounds = 0;
};

struct AdaptResult {
  std::vector<Mesh> meshes;                // mesh carrying step n (index n-1)
  std::vector<std::vector<double>> u;      // u^n on meshes[n-1]
  std::vector<std::vector<double>> phi;
  std::vector<ErrorIndicators> indicators; // final indicators per step
  std::vector<AdaptStepRecord> records;
  std::vector<StepDiagnostics> step_diagnostics;
  double initial_goal = 0.0;               // M(u^0) on the initial mesh
  bool vertex_cap_reached = false;
};

/// Goal-oriented run: per step solve primal, solve dual, estimate, Dorfler-
/// mark, bisect, transfer u^{n-1} by exact nested prolongation and re-solve
/// until the estimate passes (or the vertex cap is hit); the refined mesh is
/// kept for the next step. Never coarsens.
inline AdaptResult adapt_run(const ProblemData& data, const Mesh& initial_mesh,
                             const TimeGrid& grid, const AdaptConfig& cfg = {}) {
  AdaptResult out;
  Mesh mesh = initial_mesh;

  std::vector<double> u_prev;
  {
    JouleStepper stepper(mesh, data, grid, cfg.fp);
    u_prev = stepper.project_initial();
    out.initial_goal = goal_value(stepper.space_u(), cfg.goal, u_prev);
  }

  for (int n = 1; n <= grid.steps(); ++n) {
    int rounds = 0;
    while (true) {
      JouleStepper stepper(mesh, data, grid, cfg.fp);
      auto res = stepper.step(u_prev, n);

      StepState st;
      st.mesh = &mesh;
      st.space_u = &stepper.space_u();
      st.space_phi = &stepper.space_phi();
      st.u = &res.u;
      st.u_prev = &u_prev;
      st.phi = &res.phi;
      auto g_phi = stepper.lift_phi().values(grid.time(n));
      st.g_phi = &g_phi;
      st.tau = grid.tau();
      st.t = grid.time(n);
      st.sigma = &data.sigma;
      st.clamp = stepper.clamp();
      st.f = data.source_f;
      st.neumann_g = data.neumann_g;
      st.neumann_tags = data.neumann_flux_tags;

      auto dual = solve_dual(st, cfg.goal, cfg.dual);
      auto ind = compute_indicators(st, dual);
      double total = ind.total();

      bool accept = total <= cfg.eta_tol || rounds >= cfg.max_rounds_per_step ||
                    mesh.vertex_count() >= cfg.max_vertices;
      if (mesh.vertex_count() >= cfg.max_vertices && total > cfg.eta_tol)
        out.vertex_cap_reached = true;
      Mesh refined;
      if (!accept) {
        auto marked = mark_dorfler(ind, cfg.theta);
        if (marked.empty()) throw SolverError("adapt_run: positive estimate but empty marking");
        refined = refine_marked(mesh, marked);
        if (refined.vertex_count() > cfg.max_vertices) {
          // Applying this refinement would exceed the vertex cap: keep the
          // current mesh and stop refining this step.
          out.vertex_cap_reached = true;
          accept = true;
        }
      }
      if (accept) {
        AdaptStepRecord rec;
        rec.n = n;
        rec.t = grid.time(n);
        rec.vertices = mesh.vertex_count();
        rec.cells = mesh.cell_count();
        rec.eta_total = total;
        rec.goal_value = goal_value(stepper.space_u(), cfg.goal, res.u);
        rec.refine_rounds = rounds;
        out.records.push_back(rec);
        out.step_diagnostics.push_back(res.diag);
        out.indicators.push_back(std::move(ind));
        out.u.push_back(res.u);
        out.phi.push_back(res.phi);
        out.meshes.push_back(mesh);
        u_prev = res.u;
        break;
      }

      u_prev = prolong(refined, u_prev);
      mesh = std::move(refined);
      ++rounds;
    }
  }
  return out;
}

}  // namespace jouleheat

#endif
