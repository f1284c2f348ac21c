// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "dcfem/mesh_io.hpp"
#include "test_util.hpp"

using namespace dcfem;

namespace {

const char *two_triangles = R"($MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
6
1 1 2 7 1 1 2
2 1 2 7 1 2 3
3 1 2 7 1 3 4
4 1 2 7 1 4 1
5 2 2 5 1 1 2 3
6 2 2 6 1 1 3 4
$EndElements
)";

std::string replace(std::string s, const std::string &from, const std::string &to) {
  const auto pos = s.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return s.replace(pos, from.size(), to);
}

TriMesh parse(const std::string &text) {
  std::istringstream in(text);
  return read_msh(in);
}

std::size_t error_line(const std::string &text) {
  try {
    parse(text);
  } catch (const ParseError &e) {
    return e.line();
  }
  ADD_FAILURE() << "no ParseError";
  return 0;
}

} // namespace

TEST(ReadMsh, MinimalTwoTriangles) {
  const auto m = parse(two_triangles);
  EXPECT_EQ(m.num_nodes(), 4u);
  EXPECT_EQ(m.num_triangles(), 2u);
  EXPECT_EQ(m.boundary_edges().size(), 4u);
  EXPECT_EQ(m.region(0), 5);
  EXPECT_EQ(m.region(1), 6);
  for (const auto &be : m.boundary_edges()) EXPECT_EQ(be.tag, 7);
  EXPECT_NEAR(total_area(m), 1.0, 1e-15);
}

TEST(ReadMsh, InvertedTriangleNamesElement) {
  const auto text = replace(two_triangles, "5 2 2 5 1 1 2 3", "5 2 2 5 1 1 3 2");
  try {
    parse(text);
    FAIL() << "accepted an inverted triangle";
  } catch (const ParseError &e) {
    EXPECT_NE(std::string(e.what()).find("element 5"), std::string::npos) << e.what();
  }
}

TEST(ReadMsh, MalformedHeaderReportsLine) {
  EXPECT_EQ(error_line(replace(two_triangles, "2.2 0 8", "two point two")), 2u);
  EXPECT_EQ(error_line(replace(two_triangles, "$EndNodes", "$EndNode")), 10u);
}

TEST(ReadMsh, DanglingNodeReference) {
  const auto text = replace(two_triangles, "6 2 2 6 1 1 3 4", "6 2 2 6 1 1 3 9");
  EXPECT_EQ(error_line(text), 18u);
}

TEST(ReadMsh, NonTriangleSurfaceElement) {
  const auto text = replace(two_triangles, "6 2 2 6 1 1 3 4", "6 3 2 6 1 1 2 3 4");
  EXPECT_THROW(parse(text), ParseError);
}

TEST(ReadMsh, UnsupportedVersionAndBinary) {
  EXPECT_THROW(parse(replace(two_triangles, "2.2 0 8", "4.1 0 8")), ParseError);
  EXPECT_THROW(parse(replace(two_triangles, "2.2 0 8", "2.2 1 8")), ParseError);
}

TEST(ReadMsh, FixtureRegionsMatchFileCounts) {
  // independent count: scan the element section for triangle lines per physical tag
  const auto path = dcfem::test::source_dir() / "data" / "square_circle.msh";
  std::ifstream in(path);
  std::string line;
  std::map<int, std::size_t> expected;
  bool elements = false;
  while (std::getline(in, line)) {
    if (line == "$Elements") {
      std::getline(in, line);
      elements = true;
      continue;
    }
    if (line == "$EndElements") break;
    if (!elements) continue;
    std::istringstream s(line);
    int id, type, ntags, phys;
    s >> id >> type >> ntags >> phys;
    if (type == 2) ++expected[phys];
  }
  const auto m = load_msh(path);
  std::map<int, std::size_t> got;
  for (int r : m.tri_region()) ++got[r];
  EXPECT_EQ(got, expected);
  EXPECT_EQ(got.size(), 2u);
}

TEST(ReadMsh, MissingFile) {
  EXPECT_THROW(load_msh("/nonexistent/mesh.msh"), InvalidArgument);
}

TEST(WriteMsh, RoundTripIsIdentity) {
  for (const char *name : {"square_circle.msh", "c_magnet.msh"}) {
    const auto m = dcfem::test::load_fixture(name);
    std::stringstream buf;
    write_msh(buf, m);
    const auto back = read_msh(buf);
    EXPECT_EQ(back.nodes(), m.nodes());
    EXPECT_EQ(back.triangles(), m.triangles());
    EXPECT_EQ(back.tri_region(), m.tri_region());
    ASSERT_EQ(back.boundary_edges().size(), m.boundary_edges().size());
  }
}

TEST(MeshDump, RoundTrip) {
  const auto m = uniform_refine(structured_square_mesh(3, Box{{0.1, 0.2}, {0.7, 0.9}}));
  std::stringstream buf;
  write_mesh_dump(buf, m);
  const auto back = read_mesh_dump(buf);
  EXPECT_EQ(back.nodes(), m.nodes());
  EXPECT_EQ(back.triangles(), m.triangles());
  EXPECT_EQ(back.tri_region(), m.tri_region());
}

TEST(MeshDump, TruncatedInput) {
  std::istringstream in("3\n0 0\n1 0\n");
  EXPECT_THROW(read_mesh_dump(in), ParseError);
}
