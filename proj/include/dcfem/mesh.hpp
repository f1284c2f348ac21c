// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dcfem/error.hpp"
#include "dcfem/geometry.hpp"

namespace dcfem {

using Triangle = std::array<std::size_t, 3>;

struct BoundaryEdge {
  std::array<std::size_t, 2> nodes{};
  int tag = 0;
};

enum class NodeFlag : std::uint8_t { interior, outer_boundary, submesh_boundary };

/// Parent of a green (bisected) triangle pair. Kept so that the pair can be
/// replaced by its parent before the region is refined again.
struct GreenParent {
  Triangle nodes{};  // counterclockwise; edge (nodes[0], nodes[1]) carries the midpoint
  std::size_t midpoint = 0;
  int region = 0;
};

namespace detail {
inline std::uint64_t edge_key(std::size_t a, std::size_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}
} // namespace detail

/// Edge-based connectivity of a triangle mesh. Local edge k of a triangle joins
/// vertex k and vertex (k+1)%3.
struct MeshTopology {
  std::vector<std::array<std::size_t, 2>> edges;          // (lo, hi)
  std::vector<std::array<std::size_t, 3>> tri_edges;
  std::vector<std::array<std::ptrdiff_t, 2>> edge_tris;   // second entry -1 on the boundary

  [[nodiscard]] bool is_boundary(std::size_t e) const { return edge_tris[e][1] < 0; }
};

inline MeshTopology build_topology(std::span<const Triangle> tris) {
  MeshTopology topo;
  std::unordered_map<std::uint64_t, std::size_t> index;
  index.reserve(tris.size() * 2);
  topo.tri_edges.resize(tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const std::size_t a = tris[t][k], b = tris[t][(k + 1) % 3];
      const auto [it, inserted] = index.try_emplace(detail::edge_key(a, b), topo.edges.size());
      if (inserted) {
        topo.edges.push_back({std::min(a, b), std::max(a, b)});
        topo.edge_tris.push_back({static_cast<std::ptrdiff_t>(t), -1});
      } else {
        auto &owners = topo.edge_tris[it->second];
        if (owners[1] >= 0)
          throw MeshError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                          ") shared by more than two triangles");
        const Triangle &other = tris[static_cast<std::size_t>(owners[0])];
        for (int j = 0; j < 3; ++j)
          if (other[j] == a && other[(j + 1) % 3] == b)
            throw MeshError("triangles " + std::to_string(owners[0]) + " and " +
                            std::to_string(t) + " have inconsistent orientation");
        owners[1] = static_cast<std::ptrdiff_t>(t);
      }
      topo.tri_edges[t][k] = it->second;
    }
  }
  return topo;
}

/// Conforming triangle mesh with region and boundary tags. Immutable once built;
/// the constructor checks orientation, manifoldness and tag consistency.
class TriMesh {
public:
  TriMesh() = default;

  TriMesh(std::vector<Vec2> nodes, std::vector<Triangle> triangles, std::vector<int> tri_region,
          std::vector<BoundaryEdge> boundary_edges, std::vector<std::ptrdiff_t> green_group = {},
          std::vector<GreenParent> green_parents = {})
      : nodes_(std::move(nodes)), triangles_(std::move(triangles)),
        tri_region_(std::move(tri_region)), boundary_edges_(std::move(boundary_edges)),
        green_group_(std::move(green_group)), green_parents_(std::move(green_parents)) {
    validate();
    node_flags_.assign(nodes_.size(), NodeFlag::interior);
    for (std::size_t e = 0; e < topology_.edges.size(); ++e)
      if (topology_.is_boundary(e))
        for (auto n : topology_.edges[e]) node_flags_[n] = NodeFlag::outer_boundary;
  }

  /// Construct with explicit node flags (submeshes).
  TriMesh(std::vector<Vec2> nodes, std::vector<Triangle> triangles, std::vector<int> tri_region,
          std::vector<BoundaryEdge> boundary_edges, std::vector<NodeFlag> flags)
      : TriMesh(std::move(nodes), std::move(triangles), std::move(tri_region),
                std::move(boundary_edges)) {
    if (flags.size() != nodes_.size()) throw InvalidArgument("node flag count mismatch");
    node_flags_ = std::move(flags);
  }

  [[nodiscard]] std::size_t num_nodes() const { return nodes_.size(); }
  [[nodiscard]] std::size_t num_triangles() const { return triangles_.size(); }
  [[nodiscard]] const std::vector<Vec2> &nodes() const { return nodes_; }
  [[nodiscard]] const std::vector<Triangle> &triangles() const { return triangles_; }
  [[nodiscard]] const std::vector<int> &tri_region() const { return tri_region_; }
  [[nodiscard]] const std::vector<BoundaryEdge> &boundary_edges() const { return boundary_edges_; }
  [[nodiscard]] const std::vector<NodeFlag> &node_flags() const { return node_flags_; }
  [[nodiscard]] const MeshTopology &topology() const { return topology_; }
  [[nodiscard]] const Vec2 &node(std::size_t i) const { return nodes_[i]; }
  [[nodiscard]] const Triangle &triangle(std::size_t t) const { return triangles_[t]; }
  [[nodiscard]] int region(std::size_t t) const { return tri_region_[t]; }

  /// Index into green_parents() for triangles created by green closure, else -1.
  [[nodiscard]] std::ptrdiff_t green_group(std::size_t t) const {
    return green_group_.empty() ? -1 : green_group_[t];
  }
  [[nodiscard]] const std::vector<GreenParent> &green_parents() const { return green_parents_; }

  [[nodiscard]] std::array<Vec2, 3> vertices(std::size_t t) const {
    const auto &tri = triangles_[t];
    return {nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]};
  }

  [[nodiscard]] double signed_area(std::size_t t) const {
    const auto v = vertices(t);
    return 0.5 * cross(v[1] - v[0], v[2] - v[0]);
  }

  [[nodiscard]] double diameter(std::size_t t) const {
    const auto v = vertices(t);
    return std::max({distance(v[0], v[1]), distance(v[1], v[2]), distance(v[2], v[0])});
  }

  [[nodiscard]] bool has_region(int tag) const {
    return std::find(tri_region_.begin(), tri_region_.end(), tag) != tri_region_.end();
  }

private:
  void validate() {
    if (triangles_.empty()) throw MeshError("mesh has no triangles");
    if (tri_region_.size() != triangles_.size())
      throw MeshError("region tag count does not match triangle count");
    if (!green_group_.empty() && green_group_.size() != triangles_.size())
      throw MeshError("green group count does not match triangle count");
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      for (auto n : triangles_[t])
        if (n >= nodes_.size())
          throw MeshError("triangle " + std::to_string(t) + " references missing node " +
                          std::to_string(n));
      const double area = signed_area(t);
      const double scale = diameter(t);
      if (!(area > 1e-14 * scale * scale))
        throw MeshError("triangle " + std::to_string(t) +
                        (area < 0.0 ? " is inverted (clockwise)" : " is degenerate"));
    }
    topology_ = build_topology(triangles_);
    std::unordered_map<std::uint64_t, std::size_t> edge_index;
    edge_index.reserve(topology_.edges.size());
    for (std::size_t e = 0; e < topology_.edges.size(); ++e)
      edge_index.emplace(detail::edge_key(topology_.edges[e][0], topology_.edges[e][1]), e);
    for (const auto &be : boundary_edges_)
      if (!edge_index.contains(detail::edge_key(be.nodes[0], be.nodes[1])))
        throw MeshError("tagged edge (" + std::to_string(be.nodes[0]) + "," +
                        std::to_string(be.nodes[1]) + ") is not a mesh edge");
  }

  std::vector<Vec2> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<int> tri_region_;
  std::vector<BoundaryEdge> boundary_edges_;
  std::vector<std::ptrdiff_t> green_group_;
  std::vector<GreenParent> green_parents_;
  std::vector<NodeFlag> node_flags_;
  MeshTopology topology_;
};

/// Index maps from a submesh back to the mesh it was extracted from.
struct SubmeshMap {
  std::vector<std::size_t> local_to_parent_node;
  std::vector<std::size_t> local_to_parent_tri;

  template <typename T>
  [[nodiscard]] std::vector<T> restrict_nodal(std::span<const T> parent_values) const {
    std::vector<T> out(local_to_parent_node.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = parent_values[local_to_parent_node[i]];
    return out;
  }
};

struct Box {
  Vec2 lo{-1.0, -1.0};
  Vec2 hi{1.0, 1.0};
};

/// Largest element diameter.
inline double mesh_size(const TriMesh &mesh) {
  double h = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) h = std::max(h, mesh.diameter(t));
  return h;
}

inline double total_area(const TriMesh &mesh) {
  double a = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) a += mesh.signed_area(t);
  return a;
}

inline double region_area(const TriMesh &mesh, int tag) {
  double a = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
    if (mesh.region(t) == tag) a += mesh.signed_area(t);
  return a;
}

/// Smallest interior angle (radians) over all triangles.
inline double min_angle(const TriMesh &mesh) {
  double best = std::numbers::pi;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto v = mesh.vertices(t);
    for (int k = 0; k < 3; ++k) {
      const Vec2 a = v[(k + 1) % 3] - v[k], b = v[(k + 2) % 3] - v[k];
      best = std::min(best, std::atan2(std::abs(cross(a, b)), dot(a, b)));
    }
  }
  return best;
}

/// n x n cells, each split along the lower-left to upper-right diagonal.
/// Boundary tags: 1 bottom, 2 right, 3 top, 4 left. All triangles get region 1.
inline TriMesh structured_square_mesh(std::size_t n, const Box &box = {}) {
  if (n == 0) throw InvalidArgument("structured_square_mesh: n must be >= 1");
  if (!(box.hi.x > box.lo.x && box.hi.y > box.lo.y))
    throw InvalidArgument("structured_square_mesh: empty box");
  const std::size_t m = n + 1;
  std::vector<Vec2> nodes(m * m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      // endpoints exact so that refined and directly generated meshes agree bit for bit
      const double sx = static_cast<double>(i) / static_cast<double>(n);
      const double sy = static_cast<double>(j) / static_cast<double>(n);
      nodes[j * m + i] = {i == n ? box.hi.x : box.lo.x + sx * (box.hi.x - box.lo.x),
                          j == n ? box.hi.y : box.lo.y + sy * (box.hi.y - box.lo.y)};
    }
  auto id = [m](std::size_t i, std::size_t j) { return j * m + i; };
  std::vector<Triangle> tris;
  tris.reserve(2 * n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  std::vector<BoundaryEdge> bnd;
  for (std::size_t i = 0; i < n; ++i) {
    bnd.push_back({{id(i, 0), id(i + 1, 0)}, 1});
    bnd.push_back({{id(n, i), id(n, i + 1)}, 2});
    bnd.push_back({{id(i + 1, n), id(i, n)}, 3});
    bnd.push_back({{id(0, i + 1), id(0, i)}, 4});
  }
  std::vector<int> region(tris.size(), 1);
  return TriMesh(std::move(nodes), std::move(tris), std::move(region), std::move(bnd));
}

namespace detail {

/// Refinement workspace shared by uniform and adaptive refinement.
class Refiner {
public:
  explicit Refiner(const TriMesh &mesh) : mesh_(mesh), nodes_(mesh.nodes()) {
    // Green pairs are represented by their parent so that they can be undone.
    std::vector<std::ptrdiff_t> group_entry(mesh.green_parents().size(), -1);
    leaf_of_.resize(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
      const auto g = mesh.green_group(t);
      if (g < 0) {
        roots_.push_back(add_entry(mesh.triangle(t), mesh.region(t)));
        leaf_of_[t] = roots_.back();
        continue;
      }
      auto &parent_entry = group_entry[static_cast<std::size_t>(g)];
      if (parent_entry < 0) {
        const auto &gp = mesh.green_parents()[static_cast<std::size_t>(g)];
        parent_entry = static_cast<std::ptrdiff_t>(add_entry(gp.nodes, gp.region));
        roots_.push_back(static_cast<std::size_t>(parent_entry));
        midpoints_[edge_key(gp.nodes[0], gp.nodes[1])] = gp.midpoint;
        entries_[static_cast<std::size_t>(parent_entry)].green_midpoint = gp.midpoint;
      }
      const auto child = add_entry(mesh.triangle(t), mesh.region(t));
      entries_[child].green_parent = parent_entry;
      entries_[child].active = true;
      entries_[static_cast<std::size_t>(parent_entry)].active = false;
      entries_[static_cast<std::size_t>(parent_entry)].children.push_back(child);
      leaf_of_[t] = child;
    }
  }

  /// Entry index of the leaf that currently represents input triangle t.
  [[nodiscard]] std::size_t leaf(std::size_t t) const { return leaf_of_[t]; }

  void refine_red(std::size_t e) {
    if (!entries_[e].active) return;
    if (entries_[e].green_parent >= 0) {
      const auto p = static_cast<std::size_t>(entries_[e].green_parent);
      for (auto c : entries_[p].children) entries_[c].active = false;
      entries_[p].children.clear();
      entries_[p].active = true;
      refine_red(p);
      return;
    }
    const Triangle v = entries_[e].nodes;
    const std::size_t m01 = midpoint(v[0], v[1]);
    const std::size_t m12 = midpoint(v[1], v[2]);
    const std::size_t m20 = midpoint(v[2], v[0]);
    const int r = entries_[e].region;
    entries_[e].active = false;
    const std::array<Triangle, 4> kids = {Triangle{v[0], m01, m20}, Triangle{m01, v[1], m12},
                                          Triangle{m20, m12, v[2]}, Triangle{m01, m12, m20}};
    for (const auto &k : kids) {
      const auto c = add_entry(k, r);
      entries_[e].children.push_back(c);
    }
  }

  /// Closes hanging nodes: triangles with two or more split edges (and green
  /// children with any) are red-refined, triangles with one are bisected.
  void close() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t e = 0; e < entries_.size(); ++e) {
        if (!entries_[e].active) continue;
        const Triangle v = entries_[e].nodes;
        int split = 0;
        int which = -1;
        for (int k = 0; k < 3; ++k)
          if (midpoints_.contains(edge_key(v[k], v[(k + 1) % 3]))) {
            ++split;
            which = k;
          }
        if (split == 0) continue;
        changed = true;
        if (split >= 2 || entries_[e].green_parent >= 0) {
          refine_red(e);
          continue;
        }
        const Triangle p = {v[which], v[(which + 1) % 3], v[(which + 2) % 3]};
        const std::size_t m = midpoints_.at(edge_key(p[0], p[1]));
        entries_[e].active = false;
        entries_[e].green_midpoint = m;
        for (const auto &k : {Triangle{p[0], m, p[2]}, Triangle{m, p[1], p[2]}}) {
          const auto c = add_entry(k, entries_[e].region);
          entries_[c].green_parent = static_cast<std::ptrdiff_t>(e);
          entries_[e].children.push_back(c);
        }
        entries_[e].green_nodes = p;
      }
    }
  }

  [[nodiscard]] TriMesh build() const {
    std::vector<Triangle> tris;
    std::vector<int> region;
    std::vector<std::ptrdiff_t> green;
    std::vector<GreenParent> parents;
    std::vector<std::ptrdiff_t> parent_id(entries_.size(), -1);
    tris.reserve(entries_.size());
    for (auto root : roots_) emit(root, tris, region, green, parents, parent_id);
    std::vector<BoundaryEdge> bnd;
    for (const auto &be : mesh_.boundary_edges()) split_edge(be.nodes[0], be.nodes[1], be.tag, bnd);
    const bool any_green = !parents.empty();
    return TriMesh(nodes_, std::move(tris), std::move(region), std::move(bnd),
                   any_green ? std::move(green) : std::vector<std::ptrdiff_t>{},
                   std::move(parents));
  }

private:
  struct Entry {
    Triangle nodes{};
    int region = 0;
    bool active = true;
    std::ptrdiff_t green_parent = -1;
    std::size_t green_midpoint = std::numeric_limits<std::size_t>::max();
    Triangle green_nodes{};
    std::vector<std::size_t> children;
  };

  std::size_t add_entry(const Triangle &t, int region) {
    entries_.push_back(Entry{t, region, true, -1, std::numeric_limits<std::size_t>::max(), t, {}});
    return entries_.size() - 1;
  }

  std::size_t midpoint(std::size_t a, std::size_t b) {
    const auto key = edge_key(a, b);
    if (auto it = midpoints_.find(key); it != midpoints_.end()) return it->second;
    nodes_.push_back(0.5 * (nodes_[a] + nodes_[b]));
    midpoints_.emplace(key, nodes_.size() - 1);
    return nodes_.size() - 1;
  }

  void emit(std::size_t e, std::vector<Triangle> &tris, std::vector<int> &region,
            std::vector<std::ptrdiff_t> &green, std::vector<GreenParent> &parents,
            std::vector<std::ptrdiff_t> &parent_id) const {
    const Entry &en = entries_[e];
    if (en.active) {
      tris.push_back(en.nodes);
      region.push_back(en.region);
      std::ptrdiff_t g = -1;
      if (en.green_parent >= 0) {
        const auto p = static_cast<std::size_t>(en.green_parent);
        if (parent_id[p] < 0) {
          parent_id[p] = static_cast<std::ptrdiff_t>(parents.size());
          parents.push_back({entries_[p].green_nodes, entries_[p].green_midpoint,
                             entries_[p].region});
        }
        g = parent_id[p];
      }
      green.push_back(g);
      return;
    }
    for (auto c : en.children) emit(c, tris, region, green, parents, parent_id);
  }

  void split_edge(std::size_t a, std::size_t b, int tag, std::vector<BoundaryEdge> &out) const {
    if (auto it = midpoints_.find(edge_key(a, b)); it != midpoints_.end()) {
      split_edge(a, it->second, tag, out);
      split_edge(it->second, b, tag, out);
    } else {
      out.push_back({{a, b}, tag});
    }
  }

  const TriMesh &mesh_;
  std::vector<Vec2> nodes_;
  std::vector<Entry> entries_;
  std::vector<std::size_t> roots_;
  std::vector<std::size_t> leaf_of_;
  std::unordered_map<std::uint64_t, std::size_t> midpoints_;
};

} // namespace detail

/// Red refinement of every triangle: four congruent children, h halves exactly.
/// Green pairs of the input are treated as ordinary triangles.
inline TriMesh uniform_refine(const TriMesh &mesh) {
  const TriMesh plain(mesh.nodes(), mesh.triangles(), mesh.tri_region(), mesh.boundary_edges());
  detail::Refiner refiner(plain);
  for (std::size_t t = 0; t < plain.num_triangles(); ++t) refiner.refine_red(refiner.leaf(t));
  return refiner.build();
}

/// Red refinement of the marked triangles followed by green closure. Green
/// pairs touched by the refinement are first merged back into their parent,
/// so repeated calls keep the minimum angle bounded.
inline TriMesh adaptive_refine(const TriMesh &mesh, std::span<const std::size_t> marked) {
  if (marked.empty()) return mesh;
  detail::Refiner refiner(mesh);
  for (auto t : marked) {
    if (t >= mesh.num_triangles())
      throw InvalidArgument("adaptive_refine: marked triangle " + std::to_string(t) +
                            " out of range");
    refiner.refine_red(refiner.leaf(t));
  }
  refiner.close();
  return refiner.build();
}

/// Uniform refinement that keeps the nodes of a circle on the circle: midpoints
/// of edges whose endpoints both lie on it are projected radially.
inline TriMesh uniform_refine_aligned(const TriMesh &mesh, Vec2 center, double radius,
                                      double tol = 1e-9) {
  TriMesh fine = uniform_refine(mesh);
  auto on_circle = [&](const Vec2 &p) { return std::abs(distance(p, center) - radius) <= tol * radius; };
  std::vector<Vec2> nodes = fine.nodes();
  const auto &topo = mesh.topology();
  std::unordered_map<std::uint64_t, bool> circle_edges;
  for (const auto &e : topo.edges)
    if (on_circle(mesh.node(e[0])) && on_circle(mesh.node(e[1])))
      circle_edges.emplace(detail::edge_key(e[0], e[1]), true);
  if (circle_edges.empty()) return fine;
  // children of a red refinement: midpoints are the vertices not in the parent
  const std::size_t n_old = mesh.num_nodes();
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto &tri = mesh.triangle(t);
    const auto &mid = fine.triangle(4 * t + 3);  // {m01, m12, m20}
    for (int k = 0; k < 3; ++k) {
      if (!circle_edges.contains(detail::edge_key(tri[k], tri[(k + 1) % 3]))) continue;
      const std::size_t m = mid[k];
      if (m < n_old) continue;
      const Vec2 d = nodes[m] - center;
      nodes[m] = center + (radius / norm(d)) * d;
    }
  }
  return TriMesh(std::move(nodes), fine.triangles(), fine.tri_region(), fine.boundary_edges());
}

/// Submesh of all triangles carrying region_tag. Nodes on edges that are
/// interior in the parent but boundary in the submesh are flagged
/// submesh_boundary; nodes on the parent's outer boundary keep outer_boundary.
inline std::pair<TriMesh, SubmeshMap> extract_submesh(const TriMesh &mesh, int region_tag) {
  if (!mesh.has_region(region_tag))
    throw InvalidArgument("extract_submesh: region tag " + std::to_string(region_tag) + " absent");
  SubmeshMap map;
  constexpr auto none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> parent_to_local(mesh.num_nodes(), none);
  std::vector<Triangle> tris;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    if (mesh.region(t) != region_tag) continue;
    map.local_to_parent_tri.push_back(t);
    Triangle local{};
    for (int k = 0; k < 3; ++k) {
      const auto p = mesh.triangle(t)[k];
      if (parent_to_local[p] == none) {
        parent_to_local[p] = map.local_to_parent_node.size();
        map.local_to_parent_node.push_back(p);
      }
      local[k] = parent_to_local[p];
    }
    tris.push_back(local);
  }
  std::vector<Vec2> nodes;
  nodes.reserve(map.local_to_parent_node.size());
  for (auto p : map.local_to_parent_node) nodes.push_back(mesh.node(p));

  const auto local_topo = build_topology(tris);
  const auto &parent_topo = mesh.topology();
  std::unordered_map<std::uint64_t, bool> parent_boundary;
  for (std::size_t e = 0; e < parent_topo.edges.size(); ++e)
    if (parent_topo.is_boundary(e))
      parent_boundary.emplace(detail::edge_key(parent_topo.edges[e][0], parent_topo.edges[e][1]), true);

  std::vector<NodeFlag> flags(nodes.size(), NodeFlag::interior);
  std::vector<BoundaryEdge> bnd;
  for (std::size_t e = 0; e < local_topo.edges.size(); ++e) {
    if (!local_topo.is_boundary(e)) continue;
    const auto a = local_topo.edges[e][0], b = local_topo.edges[e][1];
    const bool outer = parent_boundary.contains(
        detail::edge_key(map.local_to_parent_node[a], map.local_to_parent_node[b]));
    for (auto n : {a, b}) {
      if (!outer) flags[n] = NodeFlag::submesh_boundary;
      else if (flags[n] == NodeFlag::interior) flags[n] = NodeFlag::outer_boundary;
    }
  }
  // keep parent tags for edges that survive, tag 0 for new interface edges
  std::unordered_map<std::uint64_t, int> tagged;
  for (const auto &be : mesh.boundary_edges())
    tagged.emplace(detail::edge_key(be.nodes[0], be.nodes[1]), be.tag);
  for (std::size_t e = 0; e < local_topo.edges.size(); ++e) {
    const auto a = local_topo.edges[e][0], b = local_topo.edges[e][1];
    const auto key = detail::edge_key(map.local_to_parent_node[a], map.local_to_parent_node[b]);
    if (auto it = tagged.find(key); it != tagged.end()) bnd.push_back({{a, b}, it->second});
    else if (local_topo.is_boundary(e)) bnd.push_back({{a, b}, 0});
  }
  std::vector<int> region(tris.size(), region_tag);
  return {TriMesh(std::move(nodes), std::move(tris), std::move(region), std::move(bnd),
                  std::move(flags)),
          std::move(map)};
}

/// Bucket grid for locating the triangle that contains a point.
class PointLocator {
public:
  explicit PointLocator(const TriMesh &mesh) : mesh_(&mesh) {
    lo_ = hi_ = mesh.node(0);
    for (const auto &p : mesh.nodes()) {
      lo_ = {std::min(lo_.x, p.x), std::min(lo_.y, p.y)};
      hi_ = {std::max(hi_.x, p.x), std::max(hi_.y, p.y)};
    }
    const double w = std::max(hi_.x - lo_.x, 1e-300), hgt = std::max(hi_.y - lo_.y, 1e-300);
    const double cells = std::max(1.0, static_cast<double>(mesh.num_triangles()) / 2.0);
    const double cell = std::sqrt(w * hgt / cells);
    nx_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(w / cell)));
    ny_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(hgt / cell)));
    dx_ = w / static_cast<double>(nx_);
    dy_ = hgt / static_cast<double>(ny_);
    buckets_.resize(nx_ * ny_);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
      const auto v = mesh.vertices(t);
      Vec2 a = v[0], b = v[0];
      for (const auto &p : v) {
        a = {std::min(a.x, p.x), std::min(a.y, p.y)};
        b = {std::max(b.x, p.x), std::max(b.y, p.y)};
      }
      const auto [i0, j0] = cell_of(a);
      const auto [i1, j1] = cell_of(b);
      for (std::size_t j = j0; j <= j1; ++j)
        for (std::size_t i = i0; i <= i1; ++i) buckets_[j * nx_ + i].push_back(t);
    }
  }

  /// Triangle containing p (closed, with relative tolerance), or nullopt.
  [[nodiscard]] std::optional<std::size_t> locate(const Vec2 &p, double tol = 1e-12) const {
    if (p.x < lo_.x - tol || p.x > hi_.x + tol || p.y < lo_.y - tol || p.y > hi_.y + tol)
      return std::nullopt;
    const auto [i, j] = cell_of(p);
    std::optional<std::size_t> best;
    double best_min = -std::numeric_limits<double>::infinity();
    for (auto t : buckets_[j * nx_ + i]) {
      const auto l = barycentric(t, p);
      const double m = std::min({l[0], l[1], l[2]});
      if (m > best_min) {
        best_min = m;
        best = t;
      }
    }
    if (best && best_min >= -tol) return best;
    return std::nullopt;
  }

  [[nodiscard]] std::array<double, 3> barycentric(std::size_t t, const Vec2 &p) const {
    const auto v = mesh_->vertices(t);
    const double det = cross(v[1] - v[0], v[2] - v[0]);
    const double l1 = cross(p - v[0], v[2] - v[0]) / det;
    const double l2 = cross(v[1] - v[0], p - v[0]) / det;
    return {1.0 - l1 - l2, l1, l2};
  }

private:
  [[nodiscard]] std::pair<std::size_t, std::size_t> cell_of(const Vec2 &p) const {
    auto clampi = [](double v, std::size_t n) {
      if (!(v > 0.0)) return std::size_t{0};
      return std::min(static_cast<std::size_t>(v), n - 1);
    };
    return {clampi((p.x - lo_.x) / dx_, nx_), clampi((p.y - lo_.y) / dy_, ny_)};
  }

  const TriMesh *mesh_;
  Vec2 lo_, hi_;
  std::size_t nx_ = 1, ny_ = 1;
  double dx_ = 1.0, dy_ = 1.0;
  std::vector<std::vector<std::size_t>> buckets_;
};

} // namespace dcfem
