#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "jouleheat/mesh.hpp"

using namespace jouleheat;

TEST(UnitCube, LevelZero) {
  Mesh m = unit_cube_mesh(0);
  EXPECT_EQ(m.vertex_count(), 8);
  EXPECT_EQ(m.cell_count(), 6);
  EXPECT_NEAR(m.total_volume(), 1.0, 1e-12);
  EXPECT_NEAR(m.max_diameter(), std::sqrt(3.0), 1e-12);
  std::string why;
  EXPECT_TRUE(conformity_audit(m, &why)) << why;
}

TEST(UnitCube, LevelTwoGeometry) {
  Mesh m = unit_cube_mesh(2);
  EXPECT_EQ(m.vertex_count(), 125);
  EXPECT_EQ(m.cell_count(), 6 * 64);
  EXPECT_NEAR(m.total_volume(), 1.0, 1e-12);
  EXPECT_NEAR(m.max_diameter(), std::sqrt(3.0) / 4.0, 1e-12);
  EXPECT_EQ(m.tags(), (std::set<int>{1, 2, 3, 4, 5, 6}));
  std::string why;
  EXPECT_TRUE(conformity_audit(m, &why)) << why;
}

TEST(UnitCube, VertexCountFormula) {
  for (int k = 0; k <= 3; ++k) {
    Mesh m = unit_cube_mesh(k);
    int n = 1 << k;
    EXPECT_EQ(m.vertex_count(), (n + 1) * (n + 1) * (n + 1));
    EXPECT_EQ(m.cell_count(), 6 * n * n * n);
  }
}

TEST(UnitCube, VertexLimit) {
  EXPECT_THROW(unit_cube_mesh(2, 10), MeshError);
  EXPECT_THROW(unit_cube_mesh(-1), MeshError);
}

TEST(Fichera, LevelZero) {
  Mesh m = fichera_mesh(0);
  EXPECT_EQ(m.vertex_count(), 26);
  EXPECT_EQ(m.cell_count(), 42);  // 7 sub-cubes x 6 tets
  EXPECT_NEAR(m.total_volume(), 7.0, 1e-12);
  std::string why;
  EXPECT_TRUE(conformity_audit(m, &why)) << why;
}

TEST(Fichera, LevelOne) {
  Mesh m = fichera_mesh(1);
  EXPECT_EQ(m.vertex_count(), 5 * 5 * 5 - 8);
  EXPECT_EQ(m.cell_count(), 7 * 8 * 6);
  EXPECT_NEAR(m.total_volume(), 7.0, 1e-12);
  EXPECT_EQ(m.tags(), (std::set<int>{1, 2, 3, 4, 5, 6, 7, 8, 9}));
  std::string why;
  EXPECT_TRUE(conformity_audit(m, &why)) << why;

  // Re-entrant tags sit on the octant-facing patches.
  for (const auto& bf : m.boundary_facets) {
    if (bf.tag == 9) {
      for (int v : bf.v) {
        EXPECT_NEAR(m.vertices[v].z, 0.0, 1e-14);
        EXPECT_GE(m.vertices[v].x, -1e-14);
        EXPECT_GE(m.vertices[v].y, -1e-14);
      }
    }
  }
}

TEST(RefineUniform, CountsVolumeDiameter) {
  Mesh coarse = unit_cube_mesh(0);
  Mesh fine = refine_uniform(coarse);
  EXPECT_EQ(fine.cell_count(), 48);
  EXPECT_NEAR(fine.total_volume(), 1.0, 1e-12);
  EXPECT_NEAR(fine.max_diameter(), coarse.max_diameter() / 2.0, 1e-12);
  std::string why;
  EXPECT_TRUE(conformity_audit(fine, &why)) << why;

  // Same counts as the direct generator at the next level.
  Mesh direct = unit_cube_mesh(1);
  EXPECT_EQ(fine.vertex_count(), direct.vertex_count());
  EXPECT_EQ(fine.cell_count(), direct.cell_count());
}

TEST(RefineUniform, Nestedness) {
  Mesh coarse = fichera_mesh(0);
  Mesh fine = refine_uniform(coarse);
  EXPECT_NEAR(fine.total_volume(), 7.0, 1e-12);
  EXPECT_EQ(fine.parent_vertex_count, coarse.vertex_count());
  // Parent vertices are a prefix with identical coordinates.
  for (int v = 0; v < coarse.vertex_count(); ++v)
    EXPECT_EQ(norm(fine.vertices[v] - coarse.vertices[v]), 0.0);
  // Every new vertex is the midpoint of a parent edge.
  for (const auto& s : fine.edge_splits) {
    Vec3 mid = (fine.vertices[s.a] + fine.vertices[s.b]) * 0.5;
    EXPECT_LE(norm(fine.vertices[s.mid] - mid), 1e-12);
  }
  EXPECT_EQ(static_cast<int>(fine.refinement_parent.size()), fine.cell_count());
  std::string why;
  EXPECT_TRUE(conformity_audit(fine, &why)) << why;
}

TEST(RefineUniform, TagsInherited) {
  Mesh coarse = unit_cube_mesh(1);
  Mesh fine = refine_uniform(coarse);
  // Each tag's total facet area is preserved (each face of the unit cube has area 1).
  for (int tag = 1; tag <= 6; ++tag) {
    double area = 0.0;
    for (const auto& bf : fine.boundary_facets) {
      if (bf.tag != tag) continue;
      Vec3 a = fine.vertices[bf.v[1]] - fine.vertices[bf.v[0]];
      Vec3 b = fine.vertices[bf.v[2]] - fine.vertices[bf.v[0]];
      area += 0.5 * norm(cross(a, b));
    }
    EXPECT_NEAR(area, 1.0, 1e-12) << "tag " << tag;
  }
}

TEST(RefineMarked, EmptyIsIdentity) {
  Mesh m = unit_cube_mesh(1);
  Mesh r = refine_marked(m, {});
  EXPECT_EQ(r.cell_count(), m.cell_count());
  EXPECT_EQ(r.vertex_count(), m.vertex_count());
  EXPECT_EQ(r.cells, m.cells);
}

TEST(RefineMarked, AllCellsAtLeastDouble) {
  Mesh m = unit_cube_mesh(1);
  std::set<int> all;
  for (int c = 0; c < m.cell_count(); ++c) all.insert(c);
  Mesh r = refine_marked(m, all);
  EXPECT_GE(r.cell_count(), 2 * m.cell_count());
  EXPECT_NEAR(r.total_volume(), 1.0, 1e-12);
  std::string why;
  EXPECT_TRUE(conformity_audit(r, &why)) << why;
}

TEST(RefineMarked, ClosureConformity) {
  Mesh m = fichera_mesh(1);
  std::mt19937_64 rng(7);
  for (int round = 0; round < 4; ++round) {
    std::set<int> marked;
    std::uniform_int_distribution<int> pick(0, m.cell_count() - 1);
    for (int i = 0; i < m.cell_count() / 5 + 1; ++i) marked.insert(pick(rng));
    Mesh r = refine_marked(m, marked);
    std::string why;
    ASSERT_TRUE(conformity_audit(r, &why)) << "round " << round << ": " << why;
    EXPECT_NEAR(r.total_volume(), 7.0, 1e-12);
    for (const auto& s : r.edge_splits) {
      Vec3 mid = (r.vertices[s.a] + r.vertices[s.b]) * 0.5;
      EXPECT_LE(norm(r.vertices[s.mid] - mid), 1e-12);
    }
    m = std::move(r);
  }
}

TEST(RefineMarked, MarkedCellsAreSplit) {
  Mesh m = unit_cube_mesh(1);
  std::set<int> marked{0, 5, 17};
  Mesh r = refine_marked(m, marked);
  // A bisected cell cannot survive: its diameter strictly shrinks somewhere.
  EXPECT_GT(r.cell_count(), m.cell_count());
  // Volume of children of each marked parent matches the parent volume.
  for (int parent : marked) {
    double child_vol = 0.0;
    int children = 0;
    for (int c = 0; c < r.cell_count(); ++c)
      if (r.refinement_parent[c] == parent) {
        child_vol += r.cell_volume(c);
        ++children;
      }
    EXPECT_GE(children, 2) << "marked cell " << parent << " was not bisected";
    EXPECT_NEAR(child_vol, m.cell_volume(parent), 1e-14);
  }
}

TEST(Prolong, LinearReproduction) {
  Mesh coarse = unit_cube_mesh(1);
  auto linear = [](const Vec3& p) { return 0.25 + 1.5 * p.x - 2.0 * p.y + 0.5 * p.z; };
  std::vector<double> coarse_vals(coarse.vertex_count());
  for (int v = 0; v < coarse.vertex_count(); ++v) coarse_vals[v] = linear(coarse.vertices[v]);

  Mesh fine = refine_uniform(coarse);
  auto fine_vals = prolong(fine, coarse_vals);
  for (int v = 0; v < fine.vertex_count(); ++v)
    EXPECT_NEAR(fine_vals[v], linear(fine.vertices[v]), 1e-12);

  std::set<int> some{0, 1, 2, 3};
  Mesh bisected = refine_marked(coarse, some);
  auto bis_vals = prolong(bisected, coarse_vals);
  for (int v = 0; v < bisected.vertex_count(); ++v)
    EXPECT_NEAR(bis_vals[v], linear(bisected.vertices[v]), 1e-12);
}

TEST(Prolong, RejectsWrongParent) {
  Mesh coarse = unit_cube_mesh(1);
  Mesh fine = refine_uniform(coarse);
  std::vector<double> wrong(coarse.vertex_count() + 3, 0.0);
  EXPECT_THROW(prolong(fine, wrong), MeshError);
}

// Paper-scale check: level 6 has 65^3 nodes.
TEST(UnitCube, LevelSixNodeCount) {
  Mesh m = unit_cube_mesh(6);
  EXPECT_EQ(m.vertex_count(), 274625);
  EXPECT_EQ(m.cell_count(), 6 * 64 * 64 * 64);
  EXPECT_NEAR(m.total_volume(), 1.0, 1e-9);
  EXPECT_NEAR(m.max_diameter(), std::sqrt(3.0) / 64.0, 1e-12);
}

TEST(Fichera, StructuredVertexFormula) {
  for (int k = 0; k <= 3; ++k) {
    Mesh m = fichera_mesh(k);
    std::int64_t n = 1 << k;
    std::int64_t side = 2 * n + 1;
    EXPECT_EQ(m.vertex_count(), side * side * side - n * n * n);
    EXPECT_EQ(m.cell_count(), 7 * 6 * n * n * n);
  }
}
