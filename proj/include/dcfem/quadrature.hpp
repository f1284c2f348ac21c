// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "dcfem/error.hpp"
#include "dcfem/geometry.hpp"

namespace dcfem {

/// Points and weights on the reference triangle {(0,0),(1,0),(0,1)}; weights sum to 1/2.
struct QuadratureRule {
  std::vector<Vec2> points;
  std::vector<double> weights;
  int degree = 0;

  [[nodiscard]] std::size_t size() const { return points.size(); }
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw InvalidArgument("gauss_legendre: need at least one point");
  GaussLegendre g;
  g.nodes.resize(static_cast<std::size_t>(n));
  g.weights.resize(static_cast<std::size_t>(n));
  // (P_n(x), P_{n-1}(x)) by the three-term recurrence
  auto legendre = [n](double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    return std::array<double, 2>{p1, p0};
  };
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, pm] = legendre(x);
      const double dx = p / (n * (x * p - pm) / (x * x - 1.0));
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const auto [p, pm] = legendre(x);
    const double dp = n * (x * p - pm) / (x * x - 1.0);
    g.nodes[static_cast<std::size_t>(i)] = x;
    g.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return g;
}

namespace detail {
inline void add_orbit3(QuadratureRule &q, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  for (const Vec2 &p : {Vec2{a, a}, Vec2{b, a}, Vec2{a, b}}) {
    q.points.push_back(p);
    q.weights.push_back(0.5 * w);
  }
}
inline void add_orbit6(QuadratureRule &q, double a, double b, double w) {
  const double c = 1.0 - a - b;
  for (const Vec2 &p : {Vec2{a, b}, Vec2{b, a}, Vec2{a, c}, Vec2{c, a}, Vec2{b, c}, Vec2{c, b}}) {
    q.points.push_back(p);
    q.weights.push_back(0.5 * w);
  }
}
} // namespace detail

/// Symmetric Gauss rules exact for polynomials of the given degree (1, 2, 4 or 6).
inline QuadratureRule gauss_rule(int degree) {
  QuadratureRule q;
  q.degree = degree;
  switch (degree) {
  case 1:
    q.points = {{1.0 / 3.0, 1.0 / 3.0}};
    q.weights = {0.5};
    break;
  case 2:
    q.points = {{1.0 / 6.0, 1.0 / 6.0}, {2.0 / 3.0, 1.0 / 6.0}, {1.0 / 6.0, 2.0 / 3.0}};
    q.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
    break;
  case 4:
    detail::add_orbit3(q, 0.44594849091596488632, 0.22338158967801146570);
    detail::add_orbit3(q, 0.09157621350977074346, 0.10995174365532186764);
    break;
  case 6:
    detail::add_orbit3(q, 0.24928674517091042129, 0.11678627572637936603);
    detail::add_orbit3(q, 0.06308901449150222834, 0.05084490637020681692);
    detail::add_orbit6(q, 0.31035245103378440542, 0.05314504984481694735, 0.08285107561837357519);
    break;
  default:
    throw InvalidArgument("gauss_rule: unsupported degree " + std::to_string(degree) +
                          " (supported: 1, 2, 4, 6)");
  }
  return q;
}

/// Collapsed (Duffy) product Gauss rule with n x n points, exact to degree 2n-2.
inline QuadratureRule collapsed_gauss_rule(int n) {
  const auto g = gauss_legendre(n);
  QuadratureRule q;
  q.degree = 2 * n - 2;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    for (std::size_t j = 0; j < g.nodes.size(); ++j) {
      const double u = 0.5 * (g.nodes[i] + 1.0), v = 0.5 * (g.nodes[j] + 1.0);
      q.points.push_back({u, v * (1.0 - u)});
      q.weights.push_back(0.25 * g.weights[i] * g.weights[j] * (1.0 - u));
    }
  return q;
}

/// Affine map of a reference point into a physical triangle.
inline Vec2 map_to_triangle(const std::array<Vec2, 3> &v, const Vec2 &ref) {
  return v[0] + ref.x * (v[1] - v[0]) + ref.y * (v[2] - v[0]);
}

} // namespace dcfem
