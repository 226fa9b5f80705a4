#ifndef JOULEHEAT_PRESETS_HPP
#define JOULEHEAT_PRESETS_HPP

#include "jouleheat/mms.hpp"
#include "jouleheat/problem.hpp"

namespace jouleheat {

// Fichera-cube boundary layouts. The published figure conveys the patch
// placement only pictorially, so these are documented approximations:
//
// * non-creased: Gamma_0 is the re-entrant face x3 = 0 (tag 9), Gamma_1 the
//   opposite outer face x3 = -1 (tag 5). Along the edges where tag 9 meets
//   the Neumann re-entrant faces (tags 7, 8) the Dirichlet and Neumann parts
//   meet at interior angle 3*pi/2 > pi, violating the creased condition.
//
// * creased: Gamma_0 is the outer face x3 = -1 (tag 5), Gamma_1 the L-shaped
//   outer face x3 = 1 (tag 6). Every Dirichlet/Neumann interface meets at
//   angle pi/2 < pi.
constexpr int kFicheraNoncreasedGamma0 = 9;
constexpr int kFicheraNoncreasedGamma1 = 5;
constexpr int kFicheraCreasedGamma0 = 5;
constexpr int kFicheraCreasedGamma1 = 6;

inline BoundaryPartition fichera_noncreased_partition(Field field) {
  BoundaryPartition p;
  p.field = field;
  p.dirichlet_tags = {kFicheraNoncreasedGamma0, kFicheraNoncreasedGamma1};
  p.neumann_tags = {1, 2, 3, 4, 6, 7, 8};
  return p;
}

inline BoundaryPartition fichera_creased_partition(Field field) {
  BoundaryPartition p;
  p.field = field;
  p.dirichlet_tags = {kFicheraCreasedGamma0, kFicheraCreasedGamma1};
  p.neumann_tags = {1, 2, 3, 4, 7, 8, 9};
  return p;
}

/// Non-creased Fichera setting: g_u = 0 everywhere, g_phi = 10 on Gamma_0 and
/// 0 on Gamma_1, sigma(u) = (pi - arctan u)/2, u_0 = 0, T = 0.1.
inline ProblemData example2_problem() {
  ProblemData d;
  d.g_u = DirichletData::from_global([](const Vec3&, double) { return 0.0; });
  std::map<int, SpaceTimeFn> phi_tags;
  phi_tags[kFicheraNoncreasedGamma0] = [](const Vec3&, double) { return 10.0; };
  phi_tags[kFicheraNoncreasedGamma1] = [](const Vec3&, double) { return 0.0; };
  d.g_phi = DirichletData::from_tags(std::move(phi_tags));
  d.u0 = [](const Vec3&, double) { return 0.0; };
  d.sigma = SigmaModel::arctan_model();
  d.bc_u = fichera_noncreased_partition(Field::temperature);
  d.bc_phi = fichera_noncreased_partition(Field::potential);
  return d;
}

/// Creased Fichera setting: g_u = 0, g_phi = 2 x2 (x2 + 1) + 5 on both
/// Dirichlet patches (extended by the same formula as the lifting), same
/// conductivity and initial datum as the non-creased case.
inline ProblemData example3_problem() {
  ProblemData d;
  d.g_u = DirichletData::from_global([](const Vec3&, double) { return 0.0; });
  d.g_phi = DirichletData::from_global(
      [](const Vec3& x, double) { return 2.0 * x.y * (x.y + 1.0) + 5.0; });
  d.u0 = [](const Vec3&, double) { return 0.0; };
  d.sigma = SigmaModel::arctan_model();
  d.bc_u = fichera_creased_partition(Field::temperature);
  d.bc_phi = fichera_creased_partition(Field::potential);
  return d;
}

/// Example 2 data on the non-creased layout, run under goal-oriented
/// adaptivity.
inline ProblemData example4_problem() { return example2_problem(); }

inline ProblemData example1_problem(bool literal_neumann = false) {
  return mms_problem_data(example1_case(), literal_neumann);
}

inline double preset_final_time() { return 0.1; }

}  // namespace jouleheat

#endif
