#ifndef JOULEHEAT_MESH_HPP
#define JOULEHEAT_MESH_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "jouleheat/core.hpp"

namespace jouleheat {

struct BoundaryFacet {
  std::array<int, 3> v;
  int tag = 0;
};

/// Record of one vertex created as an edge midpoint during refinement:
/// vertices[mid] == (vertices[a] + vertices[b]) / 2. Records are appended in
/// creation order, so nested P1 transfer can replay them front to back.
struct EdgeSplit {
  int mid, a, b;
};

/// Conforming tetrahedral mesh. Immutable after construction; refinement
/// returns a new mesh whose vertex list extends the parent's (same ids,
/// midpoints appended), which keeps P1 transfer between the two exact.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> cells;
  std::vector<BoundaryFacet> boundary_facets;

  // Derivation history relative to the parent mesh (empty for generated
  // meshes): parent vertex count, midpoint records, per-cell parent ids.
  int parent_vertex_count = 0;
  std::vector<EdgeSplit> edge_splits;
  std::vector<int> refinement_parent;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int cell_count() const { return static_cast<int>(cells.size()); }

  double cell_volume(int c) const {
    const auto& t = cells[c];
    Vec3 d1 = vertices[t[1]] - vertices[t[0]];
    Vec3 d2 = vertices[t[2]] - vertices[t[0]];
    Vec3 d3 = vertices[t[3]] - vertices[t[0]];
    return dot(d1, cross(d2, d3)) / 6.0;
  }

  double cell_diameter(int c) const {
    const auto& t = cells[c];
    double d2 = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        Vec3 e = vertices[t[i]] - vertices[t[j]];
        d2 = std::max(d2, dot(e, e));
      }
    return std::sqrt(d2);
  }

  double total_volume() const {
    double v = 0.0;
    for (int c = 0; c < cell_count(); ++c) v += cell_volume(c);
    return v;
  }

  double max_diameter() const {
    double h = 0.0;
    for (int c = 0; c < cell_count(); ++c) h = std::max(h, cell_diameter(c));
    return h;
  }

  std::set<int> tags() const {
    std::set<int> s;
    for (const auto& f : boundary_facets) s.insert(f.tag);
    return s;
  }
};

namespace detail {

inline void orient_cell(const std::vector<Vec3>& verts, std::array<int, 4>& t) {
  Vec3 d1 = verts[t[1]] - verts[t[0]];
  Vec3 d2 = verts[t[2]] - verts[t[0]];
  Vec3 d3 = verts[t[3]] - verts[t[0]];
  if (dot(d1, cross(d2, d3)) < 0.0) std::swap(t[2], t[3]);
}

inline std::array<int, 3> sorted_face(int a, int b, int c) {
  std::array<int, 3> f{a, b, c};
  std::sort(f.begin(), f.end());
  return f;
}

inline const std::array<std::array<int, 3>, 4>& cell_faces() {
  static const std::array<std::array<int, 3>, 4> faces{
      {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};
  return faces;
}

}  // namespace detail

/// All 4*ncells faces as sorted vertex triples, lexicographically sorted, so
/// incident cell counts are run lengths.
inline std::vector<std::array<int, 3>> collect_sorted_faces(const Mesh& mesh) {
  std::vector<std::array<int, 3>> faces;
  faces.reserve(4 * mesh.cells.size());
  for (const auto& t : mesh.cells)
    for (const auto& f : detail::cell_faces())
      faces.push_back(detail::sorted_face(t[f[0]], t[f[1]], t[f[2]]));
  std::sort(faces.begin(), faces.end());
  return faces;
}

/// The count-1 faces (faces belonging to exactly one cell).
inline std::vector<std::array<int, 3>> boundary_faces(const Mesh& mesh) {
  auto faces = collect_sorted_faces(mesh);
  std::vector<std::array<int, 3>> result;
  for (std::size_t i = 0; i < faces.size();) {
    std::size_t j = i;
    while (j < faces.size() && faces[j] == faces[i]) ++j;
    if (j - i == 1) result.push_back(faces[i]);
    i = j;
  }
  return result;
}

/// Face-incidence audit: every face shared by one or two cells, the count-1
/// set coincides with the tagged boundary facets, all cells positively
/// oriented. Returns false with a message on the first violation.
inline bool conformity_audit(const Mesh& mesh, std::string* message = nullptr) {
  auto fail = [&](const std::string& why) {
    if (message) *message = why;
    return false;
  };
  for (int c = 0; c < mesh.cell_count(); ++c)
    if (!(mesh.cell_volume(c) > 0.0))
      return fail("non-positive cell volume at cell " + std::to_string(c));

  auto faces = collect_sorted_faces(mesh);
  std::vector<std::array<int, 3>> tagged;
  tagged.reserve(mesh.boundary_facets.size());
  for (const auto& bf : mesh.boundary_facets)
    tagged.push_back(detail::sorted_face(bf.v[0], bf.v[1], bf.v[2]));
  std::sort(tagged.begin(), tagged.end());
  for (std::size_t i = 0; i + 1 < tagged.size(); ++i)
    if (tagged[i] == tagged[i + 1]) return fail("duplicate boundary facet");

  std::size_t seen = 0;
  for (std::size_t i = 0; i < faces.size();) {
    std::size_t j = i;
    while (j < faces.size() && faces[j] == faces[i]) ++j;
    std::size_t count = j - i;
    bool is_tagged = std::binary_search(tagged.begin(), tagged.end(), faces[i]);
    if (count > 2) return fail("face shared by more than two cells");
    if (count == 1 && !is_tagged) return fail("untagged boundary face");
    if (count == 2 && is_tagged) return fail("interior face carries a boundary tag");
    if (is_tagged) ++seen;
    i = j;
  }
  if (seen != tagged.size()) return fail("boundary facet does not match a mesh face");
  return true;
}

namespace detail {

// Tags every count-1 face by the first coordinate plane containing all its
// vertices. plane_tags lists (axis, coordinate, tag) triples.
inline void tag_boundary_by_planes(Mesh& mesh,
                                   const std::vector<std::array<double, 3>>& plane_tags,
                                   double tol = 1e-10) {
  mesh.boundary_facets.clear();
  for (const auto& key : boundary_faces(mesh)) {
    int tag = 0;
    for (const auto& pt : plane_tags) {
      int axis = static_cast<int>(pt[0]);
      double coord = pt[1];
      bool all_on = true;
      for (int vid : key)
        if (std::abs(mesh.vertices[vid][axis] - coord) > tol) {
          all_on = false;
          break;
        }
      if (all_on) {
        tag = static_cast<int>(pt[2]);
        break;
      }
    }
    if (tag == 0) throw MeshError("boundary facet does not lie on a tagged plane");
    mesh.boundary_facets.push_back({{key[0], key[1], key[2]}, tag});
  }
}

// Kuhn subdivision of a sub-cube into 6 tetrahedra sharing the main diagonal;
// conforming across translated copies. corner[] is indexed by dx + 2dy + 4dz.
inline void emit_kuhn_cube(const std::array<int, 8>& corner,
                           std::vector<std::array<int, 4>>& cells) {
  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                  {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  static const int axis_bit[3] = {1, 2, 4};
  for (const auto& p : perms) {
    int v0 = 0;
    int v1 = v0 + axis_bit[p[0]];
    int v2 = v1 + axis_bit[p[1]];
    int v3 = v2 + axis_bit[p[2]];
    cells.push_back({corner[v0], corner[v1], corner[v2], corner[v3]});
  }
}

}  // namespace detail

constexpr int kDefaultVertexLimit = 32 * 1000 * 1000;

/// Structured Kuhn mesh of the unit cube [0,1]^3 at refinement level k:
/// (2^k+1)^3 vertices, 6*8^k cells, max cell diameter 2^-k*sqrt(3).
/// Face tags: x1=0 -> 1, x1=1 -> 2, x2=0 -> 3, x2=1 -> 4, x3=0 -> 5, x3=1 -> 6.
inline Mesh unit_cube_mesh(int k, int vertex_limit = kDefaultVertexLimit) {
  if (k < 0) throw MeshError("unit_cube_mesh: level must be >= 0");
  const std::int64_t n = std::int64_t{1} << k;
  const std::int64_t nv = (n + 1) * (n + 1) * (n + 1);
  if (nv > vertex_limit) throw MeshError("unit_cube_mesh: vertex count exceeds limit");

  Mesh mesh;
  mesh.vertices.reserve(nv);
  const double h = 1.0 / static_cast<double>(n);
  auto vid = [&](std::int64_t i, std::int64_t j, std::int64_t l) {
    return static_cast<int>((l * (n + 1) + j) * (n + 1) + i);
  };
  for (std::int64_t l = 0; l <= n; ++l)
    for (std::int64_t j = 0; j <= n; ++j)
      for (std::int64_t i = 0; i <= n; ++i)
        mesh.vertices.push_back({i * h, j * h, l * h});

  mesh.cells.reserve(6 * n * n * n);
  for (std::int64_t l = 0; l < n; ++l)
    for (std::int64_t j = 0; j < n; ++j)
      for (std::int64_t i = 0; i < n; ++i) {
        std::array<int, 8> c;
        for (int d = 0; d < 8; ++d)
          c[d] = vid(i + (d & 1), j + ((d >> 1) & 1), l + ((d >> 2) & 1));
        detail::emit_kuhn_cube(c, mesh.cells);
      }
  for (auto& t : mesh.cells) detail::orient_cell(mesh.vertices, t);

  detail::tag_boundary_by_planes(mesh, {{0, 0.0, 1},
                                        {0, 1.0, 2},
                                        {1, 0.0, 3},
                                        {1, 1.0, 4},
                                        {2, 0.0, 5},
                                        {2, 1.0, 6}});
  return mesh;
}

/// Fichera cube [-1,1]^3 \ [0,1]^3 with sub-cube size 2^-k (volume 7).
/// Outer face tags: x1=-1 -> 1, x1=1 -> 2, x2=-1 -> 3, x2=1 -> 4,
/// x3=-1 -> 5, x3=1 -> 6; re-entrant faces: x1=0 -> 7, x2=0 -> 8, x3=0 -> 9.
inline Mesh fichera_mesh(int k, int vertex_limit = kDefaultVertexLimit) {
  if (k < 0) throw MeshError("fichera_mesh: level must be >= 0");
  const std::int64_t n = std::int64_t{1} << k;
  const std::int64_t side = 2 * n + 1;
  const std::int64_t nv = side * side * side - n * n * n;
  if (nv > vertex_limit) throw MeshError("fichera_mesh: vertex count exceeds limit");

  // Lattice ids: -1 marks vertices interior to the removed octant.
  std::vector<int> lattice(side * side * side, -1);
  auto lix = [&](std::int64_t i, std::int64_t j, std::int64_t l) {
    return (l * side + j) * side + i;
  };
  Mesh mesh;
  mesh.vertices.reserve(nv);
  const double h = 1.0 / static_cast<double>(n);
  for (std::int64_t l = 0; l < side; ++l)
    for (std::int64_t j = 0; j < side; ++j)
      for (std::int64_t i = 0; i < side; ++i) {
        if (i > n && j > n && l > n) continue;  // strictly inside removed octant
        lattice[lix(i, j, l)] = mesh.vertex_count();
        mesh.vertices.push_back({i * h - 1.0, j * h - 1.0, l * h - 1.0});
      }

  mesh.cells.reserve(7 * 6 * n * n * n);
  for (std::int64_t l = 0; l < 2 * n; ++l)
    for (std::int64_t j = 0; j < 2 * n; ++j)
      for (std::int64_t i = 0; i < 2 * n; ++i) {
        if (i >= n && j >= n && l >= n) continue;  // removed octant
        std::array<int, 8> c;
        for (int d = 0; d < 8; ++d)
          c[d] = lattice[lix(i + (d & 1), j + ((d >> 1) & 1), l + ((d >> 2) & 1))];
        detail::emit_kuhn_cube(c, mesh.cells);
      }
  for (auto& t : mesh.cells) detail::orient_cell(mesh.vertices, t);

  detail::tag_boundary_by_planes(mesh, {{0, -1.0, 1},
                                        {0, 1.0, 2},
                                        {1, -1.0, 3},
                                        {1, 1.0, 4},
                                        {2, -1.0, 5},
                                        {2, 1.0, 6},
                                        {0, 0.0, 7},
                                        {1, 0.0, 8},
                                        {2, 0.0, 9}});
  return mesh;
}

/// Red (Bey) refinement: every cell split into 8 children through the edge
/// midpoints, octahedron split along the m(v0,v2)-m(v1,v3) diagonal. Nested;
/// halves the diameter of the Kuhn cells produced by the generators.
inline Mesh refine_uniform(const Mesh& mesh) {
  Mesh fine;
  fine.vertices = mesh.vertices;
  fine.parent_vertex_count = mesh.vertex_count();

  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    std::pair<int, int> key{std::min(a, b), std::max(a, b)};
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    int m = fine.vertex_count();
    fine.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]) * 0.5);
    fine.edge_splits.push_back({m, key.first, key.second});
    midpoint[key] = m;
    return m;
  };

  fine.cells.reserve(8 * mesh.cell_count());
  fine.refinement_parent.reserve(8 * mesh.cell_count());
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const auto& t = mesh.cells[c];
    int v0 = t[0], v1 = t[1], v2 = t[2], v3 = t[3];
    int m01 = mid(v0, v1), m02 = mid(v0, v2), m03 = mid(v0, v3);
    int m12 = mid(v1, v2), m13 = mid(v1, v3), m23 = mid(v2, v3);
    const std::array<std::array<int, 4>, 8> children{{{v0, m01, m02, m03},
                                                      {m01, v1, m12, m13},
                                                      {m02, m12, v2, m23},
                                                      {m03, m13, m23, v3},
                                                      {m01, m02, m03, m13},
                                                      {m01, m02, m12, m13},
                                                      {m02, m03, m13, m23},
                                                      {m02, m12, m13, m23}}};
    for (auto child : children) {
      detail::orient_cell(fine.vertices, child);
      fine.cells.push_back(child);
      fine.refinement_parent.push_back(c);
    }
  }

  fine.boundary_facets.reserve(4 * mesh.boundary_facets.size());
  for (const auto& bf : mesh.boundary_facets) {
    int a = bf.v[0], b = bf.v[1], c = bf.v[2];
    int mab = mid(a, b), mbc = mid(b, c), mca = mid(c, a);
    fine.boundary_facets.push_back({{a, mab, mca}, bf.tag});
    fine.boundary_facets.push_back({{mab, b, mbc}, bf.tag});
    fine.boundary_facets.push_back({{mca, mbc, c}, bf.tag});
    fine.boundary_facets.push_back({{mab, mbc, mca}, bf.tag});
  }
  return fine;
}

namespace detail {

inline std::pair<int, int> longest_edge(const Mesh& mesh, const std::array<int, 4>& t) {
  double best = -1.0;
  std::pair<int, int> edge{-1, -1};
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      std::pair<int, int> e{std::min(t[i], t[j]), std::max(t[i], t[j])};
      Vec3 d = mesh.vertices[e.first] - mesh.vertices[e.second];
      double len2 = dot(d, d);
      // Tie-break within relative tolerance: lowest (sorted) vertex-index pair.
      if (len2 > best * (1.0 + 1e-12)) {
        best = len2;
        edge = e;
      } else if (len2 > best * (1.0 - 1e-12) && e < edge) {
        edge = e;
      }
    }
  return edge;
}

}  // namespace detail

/// Recursive longest-edge bisection of the marked cells with conforming
/// closure. Every marked cell is bisected at least once; the result is
/// conforming and nested. Throws MeshError if the closure fails to terminate
/// within the iteration cap (a mesh pathology).
inline Mesh refine_marked(const Mesh& mesh, const std::set<int>& marked) {
  Mesh fine;
  fine.vertices = mesh.vertices;
  fine.parent_vertex_count = mesh.vertex_count();
  fine.cells = mesh.cells;
  fine.refinement_parent.resize(mesh.cell_count());
  for (int c = 0; c < mesh.cell_count(); ++c) fine.refinement_parent[c] = c;

  if (marked.empty()) {
    fine.boundary_facets = mesh.boundary_facets;
    return fine;
  }

  std::map<std::array<int, 3>, int> facet_tag;
  for (const auto& bf : mesh.boundary_facets)
    facet_tag[detail::sorted_face(bf.v[0], bf.v[1], bf.v[2])] = bf.tag;

  std::map<std::pair<int, int>, int> split_edge;  // edge -> midpoint vertex
  auto midpoint_of = [&](std::pair<int, int> e) {
    auto it = split_edge.find(e);
    if (it != split_edge.end()) return it->second;
    int m = fine.vertex_count();
    fine.vertices.push_back((fine.vertices[e.first] + fine.vertices[e.second]) * 0.5);
    fine.edge_splits.push_back({m, e.first, e.second});
    split_edge[e] = m;
    return m;
  };

  auto bisect = [&](int c) {
    auto t = fine.cells[c];
    auto e = detail::longest_edge(fine, t);
    int m = midpoint_of(e);
    int a = e.first, b = e.second;
    std::array<int, 2> rest;
    int r = 0;
    for (int v : t)
      if (v != a && v != b) rest[r++] = v;

    // A boundary facet containing the bisected edge splits in two.
    for (int other : rest) {
      auto key = detail::sorted_face(a, b, other);
      auto it = facet_tag.find(key);
      if (it == facet_tag.end()) continue;
      int tag = it->second;
      facet_tag.erase(it);
      facet_tag[detail::sorted_face(a, m, other)] = tag;
      facet_tag[detail::sorted_face(m, b, other)] = tag;
    }

    std::array<int, 4> c1{a, m, rest[0], rest[1]};
    std::array<int, 4> c2{m, b, rest[0], rest[1]};
    detail::orient_cell(fine.vertices, c1);
    detail::orient_cell(fine.vertices, c2);
    int parent = fine.refinement_parent[c];
    fine.cells[c] = c1;
    fine.cells.push_back(c2);
    fine.refinement_parent.push_back(parent);
  };

  std::vector<int> work(marked.begin(), marked.end());
  for (int c : work)
    if (c < 0 || c >= mesh.cell_count()) throw MeshError("refine_marked: marked cell out of range");

  const std::int64_t bisection_cap =
      2048 + 512 * static_cast<std::int64_t>(mesh.cell_count());
  std::int64_t bisections = 0;
  while (!work.empty()) {
    for (int c : work) {
      if (++bisections > bisection_cap)
        throw MeshError("refine_marked: closure did not terminate (mesh pathology)");
      bisect(c);
    }
    // Closure: any cell still holding a split edge must be bisected too.
    work.clear();
    for (int c = 0; c < fine.cell_count(); ++c) {
      const auto& t = fine.cells[c];
      bool hanging = false;
      for (int i = 0; i < 4 && !hanging; ++i)
        for (int j = i + 1; j < 4 && !hanging; ++j)
          if (split_edge.count({std::min(t[i], t[j]), std::max(t[i], t[j])})) hanging = true;
      if (hanging) work.push_back(c);
    }
  }

  fine.boundary_facets.reserve(facet_tag.size());
  for (const auto& [face, tag] : facet_tag) fine.boundary_facets.push_back({{face[0], face[1], face[2]}, tag});
  return fine;
}

/// Exact nested P1 transfer of nodal values from the parent mesh this mesh
/// was refined from. Parent vertices keep their ids; each midpoint receives
/// the average of its edge endpoints (replayed in creation order).
inline std::vector<double> prolong(const Mesh& fine, const std::vector<double>& coarse_values) {
  if (static_cast<int>(coarse_values.size()) != fine.parent_vertex_count)
    throw MeshError("prolong: value vector does not match the parent mesh");
  std::vector<double> out(fine.vertex_count());
  std::copy(coarse_values.begin(), coarse_values.end(), out.begin());
  for (const auto& s : fine.edge_splits) out[s.mid] = 0.5 * (out[s.a] + out[s.b]);
  return out;
}

}  // namespace jouleheat

#endif
