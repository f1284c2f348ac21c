// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>

namespace dcfem {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 &operator+=(const Vec2 &o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2 &operator-=(const Vec2 &o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2 &operator*=(double s) { x *= s; y *= s; return *this; }
  friend constexpr Vec2 operator+(Vec2 a, const Vec2 &b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2 &b) { return a -= b; }
  friend constexpr Vec2 operator-(const Vec2 &a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr bool operator==(const Vec2 &, const Vec2 &) = default;
};

constexpr double dot(const Vec2 &a, const Vec2 &b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2 &a, const Vec2 &b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2 &a) { return std::hypot(a.x, a.y); }
inline double distance(const Vec2 &a, const Vec2 &b) { return norm(a - b); }

/// Dense 2x2 matrix, row-major: a[row][col].
struct Mat2 {
  std::array<std::array<double, 2>, 2> a{};

  static constexpr Mat2 identity(double s = 1.0) { return Mat2{{{{s, 0.0}, {0.0, s}}}}; }
  static constexpr Mat2 outer(const Vec2 &u, const Vec2 &v) {
    return Mat2{{{{u.x * v.x, u.x * v.y}, {u.y * v.x, u.y * v.y}}}};
  }

  constexpr double &operator()(int i, int j) { return a[i][j]; }
  constexpr double operator()(int i, int j) const { return a[i][j]; }

  constexpr Mat2 &operator+=(const Mat2 &o) {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) a[i][j] += o.a[i][j];
    return *this;
  }
  constexpr Mat2 &operator*=(double s) {
    for (auto &row : a)
      for (auto &v : row) v *= s;
    return *this;
  }
  friend constexpr Mat2 operator+(Mat2 l, const Mat2 &r) { return l += r; }
  friend constexpr Mat2 operator-(Mat2 l, const Mat2 &r) { return l += (r * -1.0); }
  friend constexpr Mat2 operator*(double s, Mat2 m) { return m *= s; }
  friend constexpr Mat2 operator*(Mat2 m, double s) { return m *= s; }
  friend constexpr Vec2 operator*(const Mat2 &m, const Vec2 &v) {
    return {m.a[0][0] * v.x + m.a[0][1] * v.y, m.a[1][0] * v.x + m.a[1][1] * v.y};
  }
  friend constexpr bool operator==(const Mat2 &, const Mat2 &) = default;

  [[nodiscard]] constexpr Mat2 transposed() const {
    return Mat2{{{{a[0][0], a[1][0]}, {a[0][1], a[1][1]}}}};
  }
  [[nodiscard]] constexpr double det() const { return a[0][0] * a[1][1] - a[0][1] * a[1][0]; }
};

} // namespace dcfem
