// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "dcfem/geometry.hpp"
#include "dcfem/mesh.hpp"
#include "dcfem/mesh_io.hpp"

namespace dcfem::test {

inline std::filesystem::path source_dir() { return DCFEM_SOURCE_DIR; }

inline TriMesh load_fixture(const std::string &name) { return load_msh(source_dir() / "data" / name); }

/// Seeded generator; DCFEM_TEST_SEED shifts every stream.
class Rng {
public:
  explicit Rng(std::uint64_t stream) {
    std::uint64_t base = 20241016;
    if (const char *s = std::getenv("DCFEM_TEST_SEED")) base = std::strtoull(s, nullptr, 10);
    gen_.seed(base * 1000003u + stream);
  }
  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  Vec2 point(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi)}; }

private:
  std::mt19937_64 gen_;
};

inline double u3(const Vec2 &p) { return p.x * p.x * p.x - 3.0 * p.x * p.y * p.y; }
inline double u4(const Vec2 &p) {
  const double x2 = p.x * p.x, y2 = p.y * p.y;
  return x2 * x2 - 6.0 * x2 * y2 + y2 * y2;
}

/// Periodic trapezoid rule with n points: spectrally accurate for smooth
/// periodic integrands, independent of the library's Gauss rules.
inline double trapezoid_periodic(const std::function<double(double)> &f, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += f(2.0 * M_PI * i / n);
  return s * 2.0 * M_PI / n;
}

} // namespace dcfem::test
