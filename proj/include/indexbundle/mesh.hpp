#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "indexbundle/errors.hpp"

namespace indexbundle {

enum class MeshKind { circle, interval, sphere, product, custom };

inline const char* to_string(MeshKind kind) {
  switch (kind) {
    case MeshKind::circle: return "circle";
    case MeshKind::interval: return "interval";
    case MeshKind::sphere: return "sphere";
    case MeshKind::product: return "product";
    case MeshKind::custom: return "custom";
  }
  return "custom";
}

inline MeshKind mesh_kind_from_string(const std::string& s) {
  if (s == "circle") return MeshKind::circle;
  if (s == "interval") return MeshKind::interval;
  if (s == "sphere") return MeshKind::sphere;
  if (s == "product") return MeshKind::product;
  if (s == "custom") return MeshKind::custom;
  throw Error(ErrorCode::invalid_mesh, "unknown mesh kind '" + s + "'");
}

/// Finite combinatorial model of a compact base space: vertices, unordered
/// edges, oriented 2-cells and the closed walks used as holonomy generators.
/// Product meshes additionally remember their slice decomposition.
struct BaseMesh {
  MeshKind kind = MeshKind::custom;
  int num_vertices = 0;
  std::vector<std::array<int, 2>> edges;   // stored with lo <= hi
  std::vector<std::vector<int>> faces;     // oriented vertex cycles
  std::vector<std::vector<int>> loops;     // closed vertex walks
  // product decomposition: t_steps copies of *slice_base with matched indexing
  int t_steps = 0;
  std::shared_ptr<const BaseMesh> slice_base;
  // optional geometric embedding (spheres carry unit positions)
  std::vector<std::array<double, 3>> positions;

  bool has_edge(int a, int b) const {
    if (a > b) std::swap(a, b);
    return std::binary_search(edges.begin(), edges.end(),
                              std::array<int, 2>{a, b});
  }

  void sort_edges() { std::sort(edges.begin(), edges.end()); }

  /// Connected-component id per vertex (ids are dense, 0-based).
  std::vector<int> components() const {
    std::vector<int> parent(num_vertices);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
      while (parent[v] != v) v = parent[v] = parent[parent[v]];
      return v;
    };
    for (const auto& e : edges) {
      int a = find(e[0]), b = find(e[1]);
      if (a != b) parent[a] = b;
    }
    std::map<int, int> remap;
    std::vector<int> comp(num_vertices);
    for (int v = 0; v < num_vertices; ++v) {
      int root = find(v);
      auto [it, inserted] = remap.try_emplace(root, static_cast<int>(remap.size()));
      comp[v] = it->second;
    }
    return comp;
  }

  int component_count() const {
    auto comp = components();
    return comp.empty() ? 0 : 1 + *std::max_element(comp.begin(), comp.end());
  }

  bool is_connected() const { return component_count() <= 1; }

  /// Structural validation of all invariants. Throws on failure.
  void validate() const {
    if (num_vertices <= 0) {
      throw Error(ErrorCode::invalid_mesh, "mesh has no vertices");
    }
    auto check_vertex = [&](int v, const char* what) {
      if (v < 0 || v >= num_vertices) {
        throw Error(ErrorCode::invalid_mesh,
                    std::string(what) + " references invalid vertex " +
                        std::to_string(v));
      }
    };
    for (const auto& e : edges) {
      check_vertex(e[0], "edge");
      check_vertex(e[1], "edge");
      if (e[0] == e[1]) {
        throw Error(ErrorCode::invalid_mesh, "self-loop edge at vertex " +
                                                 std::to_string(e[0]));
      }
      if (e[0] > e[1]) {
        throw Error(ErrorCode::invalid_mesh, "edges must be stored normalized");
      }
    }
    auto check_cycle = [&](const std::vector<int>& cyc, const char* what) {
      if (cyc.size() < 3) {
        throw Error(ErrorCode::invalid_mesh,
                    std::string(what) + " must have at least 3 vertices");
      }
      for (std::size_t i = 0; i < cyc.size(); ++i) {
        check_vertex(cyc[i], what);
        int a = cyc[i], b = cyc[(i + 1) % cyc.size()];
        if (!has_edge(a, b)) {
          throw Error(ErrorCode::invalid_mesh,
                      std::string(what) + " step (" + std::to_string(a) + "," +
                          std::to_string(b) + ") is not an edge");
        }
      }
    };
    for (const auto& f : faces) check_cycle(f, "face");
    for (const auto& l : loops) check_cycle(l, "loop");
    if (kind == MeshKind::product) {
      if (!slice_base || t_steps < 2 ||
          num_vertices != t_steps * slice_base->num_vertices) {
        throw Error(ErrorCode::invalid_mesh, "broken product decomposition");
      }
    }
    if (!positions.empty() &&
        static_cast<int>(positions.size()) != num_vertices) {
      throw Error(ErrorCode::invalid_mesh, "positions/vertex count mismatch");
    }
    if (kind == MeshKind::sphere) require_closed_oriented();
  }

  /// Every edge of a closed oriented surface appears exactly once in each
  /// direction across the face cycles.
  void require_closed_oriented() const {
    std::map<std::pair<int, int>, int> directed;
    for (const auto& f : faces) {
      for (std::size_t i = 0; i < f.size(); ++i) {
        directed[{f[i], f[(i + 1) % f.size()]}]++;
      }
    }
    for (const auto& [arc, count] : directed) {
      auto rev = directed.find({arc.second, arc.first});
      if (count != 1 || rev == directed.end() || rev->second != 1) {
        throw Error(ErrorCode::invalid_mesh,
                    "faces do not form a closed oriented surface");
      }
    }
  }

  bool operator==(const BaseMesh& other) const {
    const bool base_eq =
        (slice_base == other.slice_base) ||
        (slice_base && other.slice_base && *slice_base == *other.slice_base);
    return kind == other.kind && num_vertices == other.num_vertices &&
           edges == other.edges && faces == other.faces &&
           loops == other.loops && t_steps == other.t_steps && base_eq &&
           positions == other.positions;
  }
};

using MeshPtr = std::shared_ptr<const BaseMesh>;

inline MeshPtr share(BaseMesh mesh) {
  return std::make_shared<const BaseMesh>(std::move(mesh));
}

/// Simplicial-style map between meshes: every source edge lands on a target
/// edge or collapses to a single target vertex.
struct MeshMap {
  MeshPtr source;
  MeshPtr target;
  std::vector<int> vertex_assignment;

  int operator()(int v) const { return vertex_assignment[v]; }

  void validate() const {
    if (!source || !target) {
      throw Error(ErrorCode::invalid_mesh, "mesh map with null endpoints");
    }
    if (static_cast<int>(vertex_assignment.size()) != source->num_vertices) {
      throw Error(ErrorCode::invalid_mesh, "assignment length mismatch");
    }
    for (int v : vertex_assignment) {
      if (v < 0 || v >= target->num_vertices) {
        throw Error(ErrorCode::invalid_mesh, "assignment leaves target mesh");
      }
    }
    for (const auto& e : source->edges) {
      int a = vertex_assignment[e[0]], b = vertex_assignment[e[1]];
      if (a != b && !target->has_edge(a, b)) {
        throw Error(ErrorCode::invalid_mesh,
                    "edge (" + std::to_string(e[0]) + "," +
                        std::to_string(e[1]) + ") maps to a non-edge");
      }
    }
  }
};

inline BaseMesh circle_mesh(int m) {
  if (m < 3) {
    throw Error(ErrorCode::invalid_mesh, "circle mesh needs at least 3 vertices");
  }
  BaseMesh mesh;
  mesh.kind = MeshKind::circle;
  mesh.num_vertices = m;
  for (int j = 0; j < m; ++j) {
    int a = j, b = (j + 1) % m;
    if (a > b) std::swap(a, b);
    mesh.edges.push_back({a, b});
  }
  mesh.sort_edges();
  std::vector<int> loop(m);
  std::iota(loop.begin(), loop.end(), 0);
  mesh.loops.push_back(std::move(loop));
  mesh.validate();
  return mesh;
}

inline BaseMesh interval_mesh(int m) {
  if (m < 2) {
    throw Error(ErrorCode::invalid_mesh, "interval mesh needs at least 2 vertices");
  }
  BaseMesh mesh;
  mesh.kind = MeshKind::interval;
  mesh.num_vertices = m;
  for (int j = 0; j + 1 < m; ++j) mesh.edges.push_back({j, j + 1});
  mesh.sort_edges();
  mesh.validate();
  return mesh;
}

namespace detail {

/// Icosahedron with outward-oriented faces, subdivided `level` times.
inline void icosphere(int level, std::vector<std::array<double, 3>>& verts,
                      std::vector<std::vector<int>>& faces) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<std::array<double, 3>> v = {
      {-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& p : v) {
    double n = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    p = {p[0] / n, p[1] / n, p[2] / n};
  }
  std::vector<std::vector<int>> f = {
      {0, 11, 5},  {0, 5, 1},   {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},   {5, 11, 4},  {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},   {3, 4, 2},   {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},   {2, 4, 11},  {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  // enforce outward orientation face by face
  for (auto& tri : f) {
    const auto& a = v[tri[0]];
    const auto& b = v[tri[1]];
    const auto& c = v[tri[2]];
    const double ux = b[0] - a[0], uy = b[1] - a[1], uz = b[2] - a[2];
    const double wx = c[0] - a[0], wy = c[1] - a[1], wz = c[2] - a[2];
    const double nx = uy * wz - uz * wy;
    const double ny = uz * wx - ux * wz;
    const double nz = ux * wy - uy * wx;
    const double cx = (a[0] + b[0] + c[0]) / 3.0;
    const double cy = (a[1] + b[1] + c[1]) / 3.0;
    const double cz = (a[2] + b[2] + c[2]) / 3.0;
    if (nx * cx + ny * cy + nz * cz < 0.0) std::swap(tri[1], tri[2]);
  }
  for (int step = 0; step < level; ++step) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find({key.first, key.second});
      if (it != midpoint.end()) return it->second;
      std::array<double, 3> p = {(v[a][0] + v[b][0]) / 2.0,
                                 (v[a][1] + v[b][1]) / 2.0,
                                 (v[a][2] + v[b][2]) / 2.0};
      double n = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
      p = {p[0] / n, p[1] / n, p[2] / n};
      int idx = static_cast<int>(v.size());
      v.push_back(p);
      midpoint[{key.first, key.second}] = idx;
      return idx;
    };
    std::vector<std::vector<int>> next;
    next.reserve(f.size() * 4);
    for (const auto& tri : f) {
      int a = tri[0], b = tri[1], c = tri[2];
      int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
      next.push_back({a, ab, ca});
      next.push_back({b, bc, ab});
      next.push_back({c, ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  verts = std::move(v);
  faces = std::move(f);
}

}  // namespace detail

inline BaseMesh sphere_mesh(int subdivision_level) {
  if (subdivision_level < 0) {
    throw Error(ErrorCode::invalid_mesh, "subdivision level must be >= 0");
  }
  std::vector<std::array<double, 3>> verts;
  std::vector<std::vector<int>> faces;
  detail::icosphere(subdivision_level, verts, faces);
  BaseMesh mesh;
  mesh.kind = MeshKind::sphere;
  mesh.num_vertices = static_cast<int>(verts.size());
  mesh.positions = std::move(verts);
  mesh.faces = std::move(faces);
  std::set<std::array<int, 2>> edge_set;
  for (const auto& f : mesh.faces) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      int a = f[i], b = f[(i + 1) % f.size()];
      if (a > b) std::swap(a, b);
      edge_set.insert({a, b});
    }
  }
  mesh.edges.assign(edge_set.begin(), edge_set.end());
  mesh.validate();
  return mesh;
}

/// t_steps copies of X joined by temporal edges; slice 0 keeps X's loop and
/// face generators so holonomy invariants stay measurable on the product.
inline BaseMesh product_with_interval(const MeshPtr& base, int t_steps) {
  if (!base) throw Error(ErrorCode::invalid_mesh, "null base mesh");
  if (t_steps < 2) {
    throw Error(ErrorCode::invalid_mesh, "product needs t_steps >= 2");
  }
  const int m = base->num_vertices;
  BaseMesh mesh;
  mesh.kind = MeshKind::product;
  mesh.num_vertices = m * t_steps;
  mesh.t_steps = t_steps;
  mesh.slice_base = base;
  for (int s = 0; s < t_steps; ++s) {
    for (const auto& e : base->edges) {
      mesh.edges.push_back({s * m + e[0], s * m + e[1]});
    }
    if (s + 1 < t_steps) {
      for (int v = 0; v < m; ++v) mesh.edges.push_back({s * m + v, (s + 1) * m + v});
    }
  }
  mesh.sort_edges();
  mesh.loops = base->loops;
  mesh.faces = base->faces;
  mesh.validate();
  return mesh;
}

/// The copy of X sitting at time step s (structurally equal to X).
inline BaseMesh slice_mesh(const BaseMesh& product, int s) {
  if (product.kind != MeshKind::product || !product.slice_base) {
    throw Error(ErrorCode::invalid_mesh, "slice extraction needs a product mesh");
  }
  if (s < 0 || s >= product.t_steps) {
    throw Error(ErrorCode::invalid_mesh, "slice index out of range");
  }
  return *product.slice_base;
}

/// Inclusion of X as the time-s slice of the product.
inline MeshMap slice_inclusion(const MeshPtr& product, int s) {
  if (!product || product->kind != MeshKind::product || !product->slice_base) {
    throw Error(ErrorCode::invalid_mesh, "slice inclusion needs a product mesh");
  }
  if (s < 0 || s >= product->t_steps) {
    throw Error(ErrorCode::invalid_mesh, "slice index out of range");
  }
  const int m = product->slice_base->num_vertices;
  MeshMap map;
  map.source = product->slice_base;
  map.target = product;
  map.vertex_assignment.resize(m);
  for (int v = 0; v < m; ++v) map.vertex_assignment[v] = s * m + v;
  map.validate();
  return map;
}

/// Degree-d self-cover of the circle: the source loop winds d times around
/// the target loop, one target edge per source edge.
inline MeshMap circle_power_map(int m, int d) {
  MeshMap map;
  map.target = share(circle_mesh(m));
  const int source_size = (d == 0) ? m : std::abs(d) * m;
  map.source = share(circle_mesh(source_size));
  map.vertex_assignment.resize(source_size);
  for (int j = 0; j < source_size; ++j) {
    if (d == 0) {
      map.vertex_assignment[j] = 0;
    } else if (d > 0) {
      map.vertex_assignment[j] = j % m;
    } else {
      map.vertex_assignment[j] = (m - (j % m)) % m;
    }
  }
  map.validate();
  return map;
}

/// Per-vertex smooth coordinate tuples: the natural embedding of each base
/// kind. Used to synthesize fields that vary slowly along edges.
inline std::vector<std::vector<double>> smooth_coordinates(const BaseMesh& mesh) {
  std::vector<std::vector<double>> coords(mesh.num_vertices);
  switch (mesh.kind) {
    case MeshKind::circle: {
      for (int j = 0; j < mesh.num_vertices; ++j) {
        const double theta = 2.0 * M_PI * j / mesh.num_vertices;
        coords[j] = {std::cos(theta), std::sin(theta)};
      }
      break;
    }
    case MeshKind::interval: {
      const double denom = std::max(1, mesh.num_vertices - 1);
      for (int j = 0; j < mesh.num_vertices; ++j) coords[j] = {j / denom};
      break;
    }
    case MeshKind::sphere: {
      for (int j = 0; j < mesh.num_vertices; ++j) {
        const auto& p = mesh.positions[j];
        coords[j] = {p[0], p[1], p[2]};
      }
      break;
    }
    case MeshKind::product: {
      auto base_coords = smooth_coordinates(*mesh.slice_base);
      const int m = mesh.slice_base->num_vertices;
      const double denom = std::max(1, mesh.t_steps - 1);
      for (int v = 0; v < mesh.num_vertices; ++v) {
        coords[v] = base_coords[v % m];
        coords[v].push_back((v / m) / denom);
      }
      break;
    }
    case MeshKind::custom: {
      if (!mesh.positions.empty()) {
        for (int j = 0; j < mesh.num_vertices; ++j) {
          const auto& p = mesh.positions[j];
          coords[j] = {p[0], p[1], p[2]};
        }
      } else {
        for (int j = 0; j < mesh.num_vertices; ++j) {
          coords[j] = {static_cast<double>(j) / mesh.num_vertices};
        }
      }
      break;
    }
  }
  return coords;
}

/// Signed number of times the image of `walk` traverses the target circle.
/// Only meaningful when the target is a circle mesh.
inline int circle_winding_count(const MeshMap& map, const std::vector<int>& walk) {
  const int m = map.target->num_vertices;
  long total = 0;
  for (std::size_t i = 0; i < walk.size(); ++i) {
    int a = map(walk[i]);
    int b = map(walk[(i + 1) % walk.size()]);
    int step = (b - a) % m;
    if (step > m / 2) step -= m;
    if (step < -m / 2) step += m;
    total += step;
  }
  return static_cast<int>(total / m);
}

}  // namespace indexbundle
