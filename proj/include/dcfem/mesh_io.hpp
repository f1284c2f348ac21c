// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dcfem/error.hpp"
#include "dcfem/mesh.hpp"

namespace dcfem {

namespace detail {

class LineReader {
public:
  explicit LineReader(std::istream &in) : in_(in) {}

  bool next(std::string &line) {
    while (std::getline(in_, line)) {
      ++number_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  }

  std::string expect(const std::string &what) {
    std::string line;
    if (!next(line)) throw ParseError("unexpected end of file, expected " + what, number_ + 1);
    return line;
  }

  [[nodiscard]] std::size_t number() const { return number_; }

private:
  std::istream &in_;
  std::size_t number_ = 0;
};

inline std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

} // namespace detail

/// Reads a Gmsh ASCII 2.2 mesh: 3-node triangles (type 2) become elements with
/// their physical tag as region, 2-node lines (type 1) become tagged edges.
/// Points (type 15) are ignored; any other element type is rejected. Nodes not
/// referenced by a triangle are dropped.
inline TriMesh read_msh(std::istream &in) {
  detail::LineReader reader(in);
  std::string line;
  bool have_format = false, have_nodes = false, have_elements = false;
  std::map<long, Vec2> raw_nodes;
  struct RawElement {
    int type;
    int tag;
    std::vector<long> nodes;
    long id;
    std::size_t line;
  };
  std::vector<RawElement> elements;

  while (reader.next(line)) {
    const std::string head = detail::trim(line);
    if (head == "$MeshFormat") {
      std::istringstream fs(reader.expect("format line"));
      double version = 0;
      int file_type = -1, data_size = 0;
      if (!(fs >> version >> file_type >> data_size))
        throw ParseError("malformed $MeshFormat line", reader.number());
      if (version < 2.0 || version >= 3.0)
        throw ParseError("unsupported Gmsh format version " + std::to_string(version) +
                             " (need 2.x ASCII)", reader.number());
      if (file_type != 0) throw ParseError("binary Gmsh files are not supported", reader.number());
      if (detail::trim(reader.expect("$EndMeshFormat")) != "$EndMeshFormat")
        throw ParseError("expected $EndMeshFormat", reader.number());
      have_format = true;
    } else if (head == "$Nodes") {
      if (!have_format) throw ParseError("$Nodes before $MeshFormat", reader.number());
      std::istringstream cs(reader.expect("node count"));
      long count = -1;
      if (!(cs >> count) || count < 0) throw ParseError("malformed node count", reader.number());
      for (long i = 0; i < count; ++i) {
        std::istringstream ns(reader.expect("node line"));
        long id;
        double x, y, z;
        if (!(ns >> id >> x >> y >> z)) throw ParseError("malformed node line", reader.number());
        if (!raw_nodes.emplace(id, Vec2{x, y}).second)
          throw ParseError("duplicate node id " + std::to_string(id), reader.number());
      }
      if (detail::trim(reader.expect("$EndNodes")) != "$EndNodes")
        throw ParseError("expected $EndNodes", reader.number());
      have_nodes = true;
    } else if (head == "$Elements") {
      if (!have_nodes) throw ParseError("$Elements before $Nodes", reader.number());
      std::istringstream cs(reader.expect("element count"));
      long count = -1;
      if (!(cs >> count) || count < 0) throw ParseError("malformed element count", reader.number());
      for (long i = 0; i < count; ++i) {
        std::istringstream es(reader.expect("element line"));
        long id;
        int type, ntags;
        if (!(es >> id >> type >> ntags) || ntags < 0)
          throw ParseError("malformed element line", reader.number());
        std::vector<long> tags(static_cast<std::size_t>(ntags));
        for (auto &t : tags)
          if (!(es >> t)) throw ParseError("malformed element tags", reader.number());
        int nn = 0;
        switch (type) {
        case 1: nn = 2; break;
        case 2: nn = 3; break;
        case 15: nn = 1; break;
        case 3: case 9: case 10: case 16:
          throw ParseError("element " + std::to_string(id) + ": non-triangle 2D element type " +
                               std::to_string(type), reader.number());
        default:
          throw ParseError("element " + std::to_string(id) + ": unsupported element type " +
                               std::to_string(type), reader.number());
        }
        RawElement el{type, ntags > 0 ? static_cast<int>(tags[0]) : 0, {}, id, reader.number()};
        for (int k = 0; k < nn; ++k) {
          long n;
          if (!(es >> n)) throw ParseError("element " + std::to_string(id) + ": missing node", reader.number());
          if (!raw_nodes.contains(n))
            throw ParseError("element " + std::to_string(id) + " references undefined node " +
                                 std::to_string(n), reader.number());
          el.nodes.push_back(n);
        }
        if (type != 15) elements.push_back(std::move(el));
      }
      if (detail::trim(reader.expect("$EndElements")) != "$EndElements")
        throw ParseError("expected $EndElements", reader.number());
      have_elements = true;
    } else if (head.size() > 1 && head[0] == '$' && head.rfind("$End", 0) != 0) {
      // unknown section ($PhysicalNames, $NodeData, ...): skip to its end marker
      const std::string end = "$End" + head.substr(1);
      std::string inner;
      bool closed = false;
      while (reader.next(inner))
        if (detail::trim(inner) == end) {
          closed = true;
          break;
        }
      if (!closed) throw ParseError("unterminated section " + head, reader.number());
    } else {
      throw ParseError("unexpected content outside a section: '" + head + "'", reader.number());
    }
  }
  if (!have_format || !have_nodes || !have_elements)
    throw ParseError("missing $MeshFormat, $Nodes or $Elements section", reader.number());

  std::map<long, std::size_t> index;
  std::vector<Vec2> nodes;
  std::vector<Triangle> tris;
  std::vector<int> region;
  auto local = [&](long id) {
    auto [it, inserted] = index.try_emplace(id, nodes.size());
    if (inserted) nodes.push_back(raw_nodes.at(id));
    return it->second;
  };
  for (const auto &el : elements) {
    if (el.type != 2) continue;
    const Triangle t{local(el.nodes[0]), local(el.nodes[1]), local(el.nodes[2])};
    const double a = cross(nodes[t[1]] - nodes[t[0]], nodes[t[2]] - nodes[t[0]]);
    if (!(a > 0.0))
      throw ParseError("element " + std::to_string(el.id) +
                           (a < 0.0 ? " is inverted (clockwise)" : " is degenerate"), el.line);
    tris.push_back(t);
    region.push_back(el.tag);
  }
  if (tris.empty()) throw ParseError("no triangles in file", reader.number());
  std::vector<BoundaryEdge> edges;
  for (const auto &el : elements) {
    if (el.type != 1) continue;
    if (!index.contains(el.nodes[0]) || !index.contains(el.nodes[1]))
      throw ParseError("line element " + std::to_string(el.id) + " is not attached to a triangle", el.line);
    edges.push_back({{index.at(el.nodes[0]), index.at(el.nodes[1])}, el.tag});
  }
  try {
    return TriMesh(std::move(nodes), std::move(tris), std::move(region), std::move(edges));
  } catch (const MeshError &e) {
    throw ParseError(e.what(), reader.number());
  }
}

inline TriMesh load_msh(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open mesh file " + path.string());
  return read_msh(in);
}

/// Writes Gmsh ASCII 2.2 with 1-based ids; coordinates round-trip exactly.
inline void write_msh(std::ostream &out, const TriMesh &mesh) {
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
  out << "$Nodes\n" << mesh.num_nodes() << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i)
    out << i + 1 << ' ' << mesh.node(i).x << ' ' << mesh.node(i).y << " 0\n";
  out << "$EndNodes\n$Elements\n" << mesh.boundary_edges().size() + mesh.num_triangles() << '\n';
  std::size_t id = 1;
  for (const auto &be : mesh.boundary_edges())
    out << id++ << " 1 2 " << be.tag << ' ' << be.tag << ' ' << be.nodes[0] + 1 << ' '
        << be.nodes[1] + 1 << '\n';
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto &tri = mesh.triangle(t);
    out << id++ << " 2 2 " << mesh.region(t) << ' ' << mesh.region(t) << ' ' << tri[0] + 1 << ' '
        << tri[1] + 1 << ' ' << tri[2] + 1 << '\n';
  }
  out << "$EndElements\n";
}

inline void save_msh(const std::filesystem::path &path, const TriMesh &mesh) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write mesh file " + path.string());
  write_msh(out, mesh);
}

/// Plain-text dump: node count, "x y" lines, triangle count, "a b c region"
/// lines (0-based), edge count, "a b tag" lines.
inline void write_mesh_dump(std::ostream &out, const TriMesh &mesh) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << mesh.num_nodes() << '\n';
  for (const auto &p : mesh.nodes()) out << p.x << ' ' << p.y << '\n';
  out << mesh.num_triangles() << '\n';
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto &tri = mesh.triangle(t);
    out << tri[0] << ' ' << tri[1] << ' ' << tri[2] << ' ' << mesh.region(t) << '\n';
  }
  out << mesh.boundary_edges().size() << '\n';
  for (const auto &be : mesh.boundary_edges())
    out << be.nodes[0] << ' ' << be.nodes[1] << ' ' << be.tag << '\n';
}

inline TriMesh read_mesh_dump(std::istream &in) {
  detail::LineReader reader(in);
  auto count = [&](const char *what) {
    std::istringstream s(reader.expect(what));
    long n = -1;
    if (!(s >> n) || n < 0) throw ParseError(std::string("malformed ") + what, reader.number());
    return static_cast<std::size_t>(n);
  };
  std::vector<Vec2> nodes(count("node count"));
  for (auto &p : nodes) {
    std::istringstream s(reader.expect("node line"));
    if (!(s >> p.x >> p.y)) throw ParseError("malformed node line", reader.number());
  }
  std::vector<Triangle> tris(count("triangle count"));
  std::vector<int> region(tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) {
    std::istringstream s(reader.expect("triangle line"));
    if (!(s >> tris[t][0] >> tris[t][1] >> tris[t][2] >> region[t]))
      throw ParseError("malformed triangle line", reader.number());
  }
  std::vector<BoundaryEdge> edges(count("edge count"));
  for (auto &e : edges) {
    std::istringstream s(reader.expect("edge line"));
    if (!(s >> e.nodes[0] >> e.nodes[1] >> e.tag)) throw ParseError("malformed edge line", reader.number());
  }
  try {
    return TriMesh(std::move(nodes), std::move(tris), std::move(region), std::move(edges));
  } catch (const MeshError &e) {
    throw ParseError(e.what(), reader.number());
  }
}

} // namespace dcfem
