// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <queue>
#include <string>
#include <vector>

#include "dcfem/assembly.hpp"
#include "dcfem/error.hpp"
#include "dcfem/geometry.hpp"
#include "dcfem/mesh.hpp"
#include "dcfem/quadrature.hpp"

namespace dcfem {

enum class Parity { normal, skew };

/// Fourier coefficient of index n on the circle of radius r0 around center:
/// (1/pi) int_0^{2pi} u cos(n phi) dphi (sin for skew).
struct FourierSpec {
  int n = 1;
  double r0 = 1.0;
  Vec2 center{};
  Parity parity = Parity::normal;

  void validate() const {
    if (n < 1) throw InvalidArgument("Fourier index must be at least 1");
    if (!(r0 > 0.0)) throw InvalidArgument("reference radius must be positive");
  }
};

struct LineQuadratureOptions {
  double tol = 1e-12;
  int initial_panels = 16;
  std::size_t max_panels = 20000;
};

/// Globally adaptive composite 8-point Gauss on [0, 2 pi]. Every panel carries
/// the difference between its one-panel and two-half-panel estimates; the panel
/// with the largest difference is halved until the differences sum to at most tol.
inline double fourier_line(const FourierSpec &spec, const std::function<double(const Vec2 &)> &u,
                           const LineQuadratureOptions &opt = {}) {
  spec.validate();
  static const GaussLegendre gl = gauss_legendre(8);
  const double two_pi = 2.0 * std::numbers::pi;
  auto f = [&](double phi) {
    const double w = spec.parity == Parity::normal ? std::cos(spec.n * phi) : std::sin(spec.n * phi);
    return u(spec.center + spec.r0 * Vec2{std::cos(phi), std::sin(phi)}) * w / std::numbers::pi;
  };
  auto gauss = [&](double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) s += gl.weights[i] * f(c + h * gl.nodes[i]);
    return s * h;
  };
  struct Panel {
    double a, b, left, right, err;
    bool operator<(const Panel &o) const { return err < o.err; }
  };
  auto make = [&](double a, double b, double whole) {
    const double m = 0.5 * (a + b);
    const double l = gauss(a, m), r = gauss(m, b);
    return Panel{a, b, l, r, std::abs(l + r - whole)};
  };
  std::priority_queue<Panel> heap;
  const int np = std::max(1, opt.initial_panels);
  for (int i = 0; i < np; ++i) {
    const double a = two_pi * i / np, b = two_pi * (i + 1) / np;
    heap.push(make(a, b, gauss(a, b)));
  }
  auto total_error = [&] {
    auto copy = heap;
    double e = 0.0;
    while (!copy.empty()) {
      e += copy.top().err;
      copy.pop();
    }
    return e;
  };
  double err = total_error();
  while (err > opt.tol) {
    if (heap.size() >= opt.max_panels) {
      err = total_error();
      if (err <= opt.tol) break;
      throw ConvergenceError("fourier_line: achieved tolerance " + detail::sci(err) + " above " + detail::sci(opt.tol),
                             static_cast<int>(heap.size()), err);
    }
    const Panel p = heap.top();
    heap.pop();
    const double m = 0.5 * (p.a + p.b);
    const Panel l = make(p.a, m, p.left), r = make(m, p.b, p.right);
    err += l.err + r.err - p.err;
    heap.push(l);
    heap.push(r);
    if (err <= opt.tol) err = total_error();
  }
  double total = 0.0;
  while (!heap.empty()) {
    total += heap.top().left + heap.top().right;
    heap.pop();
  }
  return total;
}

/// Volume density g0 on the disk with int g0 u dA = F_n(u) for u harmonic in the disk:
/// g0 = (2n+2) / (pi r0^(n+2)) r^n cos(n phi) inside, 0 outside.
inline std::function<double(const Vec2 &)> fourier_volume_density(const FourierSpec &spec) {
  spec.validate();
  const double c = (2.0 * spec.n + 2.0) / (std::numbers::pi * std::pow(spec.r0, spec.n + 2));
  return [spec, c](const Vec2 &x) {
    const Vec2 d = x - spec.center;
    if (dot(d, d) >= spec.r0 * spec.r0) return 0.0;
    const std::complex<double> z = std::pow(std::complex<double>(d.x, d.y), spec.n);
    return c * (spec.parity == Parity::normal ? z.real() : z.imag());
  };
}

struct FourierVector {
  std::vector<double> coefficients; // F_1 .. F_nmax
  double distortion = 0.0;          // ||f - f_i e_i|| / |f_i|
};

inline FourierVector fourier_vector(const std::function<double(const Vec2 &)> &u, int n_max, int main_index,
                                    FourierSpec tmpl, const LineQuadratureOptions &opt = {}) {
  if (n_max < 1) throw InvalidArgument("fourier_vector: n_max must be at least 1");
  if (main_index < 1 || main_index > n_max)
    throw InvalidArgument("fourier_vector: main index " + std::to_string(main_index) + " outside 1.." +
                          std::to_string(n_max));
  FourierVector out;
  double other = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    tmpl.n = n;
    const double f = fourier_line(tmpl, u, opt);
    out.coefficients.push_back(f);
    if (n != main_index) other += f * f;
  }
  const double fi = out.coefficients[static_cast<std::size_t>(main_index - 1)];
  if (fi == 0.0) throw DegenerateField("fourier_vector: main harmonic vanishes, distortion undefined");
  out.distortion = std::sqrt(other) / std::abs(fi);
  return out;
}

/// Field with first and second derivatives at arbitrary points.
template <typename F>
concept HessianField = requires(const F &f, const Vec2 &x) {
  { f.eval_grad(x) } -> std::convertible_to<Vec2>;
  { f.eval_hess(x) } -> std::convertible_to<Mat2>;
};

inline constexpr double gradient_floor = 1e-12;

/// Average over the mesh of the directional derivative of |grad u|:
/// (1/|Omega0|) int (grad u . H d) / |grad u| dx.
template <HessianField Field>
double field_gradient(const Field &u, const TriMesh &region, Vec2 direction = {1.0, 0.0}, int quad_degree = 4) {
  const double dn = norm(direction);
  if (!(dn > 0.0)) throw InvalidArgument("field_gradient: zero direction");
  direction = direction * (1.0 / dn);
  const auto rule = gauss_rule(quad_degree);
  double s = 0.0, area = 0.0;
  for (std::size_t t = 0; t < region.num_triangles(); ++t) {
    const auto v = region.vertices(t);
    const double jac = 2.0 * region.signed_area(t);
    area += region.signed_area(t);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec2 x = map_to_triangle(v, rule.points[q]);
      const Vec2 g = u.eval_grad(x);
      const double gn = norm(g);
      if (gn < gradient_floor)
        throw DegenerateField("field_gradient: |grad u| = " + std::to_string(gn) + " below floor at (" +
                              std::to_string(x.x) + ", " + std::to_string(x.y) + ")");
      s += rule.weights[q] * jac * dot(g, u.eval_hess(x) * direction) / gn;
    }
  }
  return s / area;
}

/// True iff no triangle has vertices strictly inside and strictly outside the circle.
inline bool interface_resolution_check(const TriMesh &mesh, const FourierSpec &spec, double tol = 1e-9) {
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    bool in = false, out = false;
    for (const auto &p : mesh.vertices(t)) {
      const double d = distance(p, spec.center) - spec.r0;
      in |= d < -tol * spec.r0;
      out |= d > tol * spec.r0;
    }
    if (in && out) return false;
  }
  return true;
}

/// Point evaluation of a P1 field, for line quadrature of u_h.
inline std::function<double(const Vec2 &)> fe_evaluator(const FeSolution &u, const PointLocator &loc) {
  return [&u, &loc](const Vec2 &x) {
    const auto t = loc.locate(x, 1e-10);
    if (!t) throw InvalidArgument("point (" + std::to_string(x.x) + ", " + std::to_string(x.y) + ") outside mesh");
    return u.value(ElementPoint{*t, x});
  };
}

} // namespace dcfem
