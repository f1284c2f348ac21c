// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dcfem/assembly.hpp"
#include "dcfem/error.hpp"
#include "dcfem/geometry.hpp"
#include "dcfem/linalg.hpp"

namespace dcfem {

/// Polyharmonic kernels: k=1 thin-plate r^2 log r, k=2 cubic r^3, k=3 quintic r^5.
inline void check_kernel_order(int k) {
  if (k < 1 || k > 3) throw InvalidArgument("kernel order must be 1, 2 or 3, got " + std::to_string(k));
}

inline double kernel(int k, double r) {
  switch (k) {
  case 1: return r > 0.0 ? r * r * std::log(r) : 0.0;
  case 2: return r * r * r;
  case 3: return r * r * r * r * r;
  default: check_kernel_order(k); return 0.0;
  }
}

/// First radial derivative.
inline double kernel_d1(int k, double r) {
  switch (k) {
  case 1: return r > 0.0 ? r * (2.0 * std::log(r) + 1.0) : 0.0;
  case 2: return 3.0 * r * r;
  case 3: return 5.0 * r * r * r * r;
  default: check_kernel_order(k); return 0.0;
  }
}

/// Second radial derivative; -inf at r = 0 for k = 1.
inline double kernel_d2(int k, double r) {
  switch (k) {
  case 1: return r > 0.0 ? 2.0 * std::log(r) + 3.0 : -HUGE_VAL;
  case 2: return 6.0 * r;
  case 3: return 20.0 * r * r * r;
  default: check_kernel_order(k); return 0.0;
  }
}

/// Number of polynomial terms for kernel order k: degree < m with m = 2 (k = 1, 2) or 3 (k = 3).
constexpr std::size_t polynomial_size(int k) { return k == 3 ? 6 : 3; }

/// Isotropic affine map x -> (x - shift) * scale.
struct Normalization {
  Vec2 shift{};
  double scale = 1.0;

  [[nodiscard]] Vec2 apply(const Vec2 &x) const { return (x - shift) * scale; }

  /// Maps the bounding box of the points into [-1, 1]^2, preserving aspect ratio.
  static Normalization fit(std::span<const Vec2> pts) {
    if (pts.empty()) return {};
    Vec2 lo = pts[0], hi = pts[0];
    for (const auto &p : pts) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    const double w = std::max(hi.x - lo.x, hi.y - lo.y);
    return {0.5 * (lo + hi), w > 0.0 ? 2.0 / w : 1.0};
  }
};

namespace detail {

inline void monomials(int k, const Vec2 &p, double *out) {
  out[0] = 1.0;
  out[1] = p.x;
  out[2] = p.y;
  if (k == 3) {
    out[3] = p.x * p.x;
    out[4] = p.x * p.y;
    out[5] = p.y * p.y;
  }
}

struct RbfCenters {
  int k;
  Normalization norm;
  std::vector<Vec2> points; // normalized
};

} // namespace detail

class RbfInterpolant;

/// LU-factorized saddle system [[F, P^T], [P, 0]] for fixed centers and kernel.
/// One factorization serves any number of data vectors.
class RbfSystem {
public:
  RbfSystem(int k, std::span<const Vec2> centers, bool normalize = true) {
    check_kernel_order(k);
    const std::size_t n = centers.size();
    const std::size_t m = polynomial_size(k);
    auto data = std::make_shared<detail::RbfCenters>();
    data->k = k;
    data->norm = normalize ? Normalization::fit(centers) : Normalization{};
    data->points.reserve(n);
    for (const auto &c : centers) data->points.push_back(data->norm.apply(c));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return centers[a].x < centers[b].x || (centers[a].x == centers[b].x && centers[a].y < centers[b].y);
    });
    for (std::size_t i = 1; i < n; ++i)
      if (centers[order[i]] == centers[order[i - 1]])
        throw InvalidArgument("rbf fit: duplicate center at index " + std::to_string(order[i]));
    check_polynomial_rank(k, data->points);

    DenseMatrix a(n + m);
    std::vector<double> row(m);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 &xi = data->points[i];
      for (std::size_t j = i; j < n; ++j) {
        const double dx = xi.x - data->points[j].x, dy = xi.y - data->points[j].y;
        const double v = kernel(k, std::sqrt(dx * dx + dy * dy));
        a(i, j) = v;
        a(j, i) = v;
      }
      detail::monomials(k, xi, row.data());
      for (std::size_t q = 0; q < m; ++q) {
        a(i, n + q) = row[q];
        a(n + q, i) = row[q];
      }
    }
    try {
      lu_ = std::make_shared<LuFactorization>(std::move(a));
    } catch (const SingularMatrix &e) {
      throw SingularMatrix(std::string("rbf fit: singular saddle matrix (") + e.what() + ")");
    }
    centers_ = std::move(data);
  }

  [[nodiscard]] int kernel_order() const { return centers_->k; }
  [[nodiscard]] std::size_t num_centers() const { return centers_->points.size(); }
  [[nodiscard]] const Normalization &normalization() const { return centers_->norm; }

  [[nodiscard]] RbfInterpolant fit(std::span<const double> values) const;

private:
  static void check_polynomial_rank(int k, std::span<const Vec2> pts) {
    const std::size_t m = polynomial_size(k);
    if (pts.size() < m)
      throw InvalidArgument("rbf fit: " + std::to_string(pts.size()) + " centers cannot determine " +
                            std::to_string(m) + " polynomial coefficients");
    DenseMatrix gram(m);
    std::vector<double> row(m);
    for (const auto &p : pts) {
      detail::monomials(k, p, row.data());
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) gram(a, b) += row[a] * row[b];
    }
    try {
      LuFactorization check(std::move(gram));
      const auto u = check.upper();
      double lo = HUGE_VAL, hi = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        lo = std::min(lo, std::abs(u(i, i)));
        hi = std::max(hi, std::abs(u(i, i)));
      }
      if (lo < 1e-12 * hi) throw SingularMatrix("small pivot");
    } catch (const SingularMatrix &) {
      throw InvalidArgument(k == 3 ? "rbf fit: polynomial block is rank-deficient (centers lie on a conic)"
                                   : "rbf fit: polynomial block is rank-deficient (centers are collinear)");
    }
  }

  std::shared_ptr<const detail::RbfCenters> centers_;
  std::shared_ptr<const LuFactorization> lu_;
};

/// Polyharmonic spline s(x) = sum_i alpha_i Phi(|x - x_i|) + p(x), evaluated in
/// normalized coordinates with derivatives mapped back to physical ones.
class RbfInterpolant {
public:
  [[nodiscard]] int kernel_order() const { return centers_->k; }
  [[nodiscard]] std::size_t num_centers() const { return centers_->points.size(); }
  [[nodiscard]] const std::vector<double> &alpha() const { return alpha_; }
  [[nodiscard]] const std::vector<double> &poly_coeffs() const { return poly_; }
  [[nodiscard]] const Normalization &normalization() const { return centers_->norm; }
  /// Centers in normalized coordinates.
  [[nodiscard]] const std::vector<Vec2> &normalized_centers() const { return centers_->points; }

  [[nodiscard]] double eval(const Vec2 &x) const {
    const int k = centers_->k;
    const Vec2 p = centers_->norm.apply(x);
    const auto &c = centers_->points;
    const std::size_t n = alpha_.size();
    double s = 0.0;
    // hot loop of every QoI and error integral: one branch per call, same kernel expressions as the fit
    switch (k) {
    case 1:
      for (std::size_t i = 0; i < n; ++i) {
        const double dx = p.x - c[i].x, dy = p.y - c[i].y, r2 = dx * dx + dy * dy;
        if (r2 > 0.0) {
          const double r = std::sqrt(r2);
          s += alpha_[i] * (r * r * std::log(r));
        }
      }
      break;
    case 2:
      for (std::size_t i = 0; i < n; ++i) {
        const double dx = p.x - c[i].x, dy = p.y - c[i].y, r2 = dx * dx + dy * dy;
        const double r = std::sqrt(r2);
        s += alpha_[i] * (r * r * r);
      }
      break;
    default:
      for (std::size_t i = 0; i < n; ++i) {
        const double dx = p.x - c[i].x, dy = p.y - c[i].y, r2 = dx * dx + dy * dy;
        const double r = std::sqrt(r2);
        s += alpha_[i] * (r * r * r * r * r);
      }
    }
    double mono[6];
    detail::monomials(k, p, mono);
    for (std::size_t q = 0; q < poly_.size(); ++q) s += poly_[q] * mono[q];
    return s;
  }

  [[nodiscard]] Vec2 eval_grad(const Vec2 &x) const {
    const int k = centers_->k;
    const Vec2 p = centers_->norm.apply(x);
    Vec2 g{};
    for (std::size_t i = 0; i < alpha_.size(); ++i) {
      const Vec2 d = p - centers_->points[i];
      const double r = norm(d);
      if (r == 0.0) continue;
      g += (alpha_[i] * kernel_d1(k, r) / r) * d;
    }
    g += Vec2{poly_[1], poly_[2]};
    if (k == 3) g += Vec2{2.0 * poly_[3] * p.x + poly_[4] * p.y, poly_[4] * p.x + 2.0 * poly_[5] * p.y};
    return g * centers_->norm.scale;
  }

  [[nodiscard]] Mat2 eval_hess(const Vec2 &x) const {
    const int k = centers_->k;
    const Vec2 p = centers_->norm.apply(x);
    Mat2 h{};
    for (std::size_t i = 0; i < alpha_.size(); ++i) {
      const Vec2 d = p - centers_->points[i];
      const double r = norm(d);
      if (r == 0.0) {
        if (k == 1) throw InvalidArgument("eval_hess: thin-plate Hessian is singular at a center");
        continue;
      }
      const double d1r = kernel_d1(k, r) / r;
      h += alpha_[i] * (Mat2::identity(d1r) + ((kernel_d2(k, r) - d1r) / (r * r)) * Mat2::outer(d, d));
    }
    if (k == 3) h += Mat2{{{{2.0 * poly_[3], poly_[4]}, {poly_[4], 2.0 * poly_[5]}}}};
    const double s = centers_->norm.scale;
    return h * (s * s);
  }

  [[nodiscard]] double value(const ElementPoint &p) const { return eval(p.x); }
  [[nodiscard]] Vec2 gradient(const ElementPoint &p) const { return eval_grad(p.x); }

  /// max_q |sum_i alpha_i q(x_i)| over the polynomial basis, relative to max|alpha|.
  [[nodiscard]] double moment_residual() const {
    const std::size_t m = poly_.size();
    std::vector<double> sums(m, 0.0);
    double mono[6];
    double amax = 0.0;
    for (std::size_t i = 0; i < alpha_.size(); ++i) {
      detail::monomials(centers_->k, centers_->points[i], mono);
      for (std::size_t q = 0; q < m; ++q) sums[q] += alpha_[i] * mono[q];
      amax = std::max(amax, std::abs(alpha_[i]));
    }
    return amax > 0.0 ? norm_inf(sums) / amax : norm_inf(sums);
  }

private:
  friend class RbfSystem;
  RbfInterpolant(std::shared_ptr<const detail::RbfCenters> c, std::vector<double> alpha, std::vector<double> poly)
      : centers_(std::move(c)), alpha_(std::move(alpha)), poly_(std::move(poly)) {}

  std::shared_ptr<const detail::RbfCenters> centers_;
  std::vector<double> alpha_;
  std::vector<double> poly_;
};

inline RbfInterpolant RbfSystem::fit(std::span<const double> values) const {
  const std::size_t n = num_centers();
  if (values.size() != n)
    throw InvalidArgument("rbf fit: " + std::to_string(values.size()) + " values for " + std::to_string(n) +
                          " centers");
  Vector rhs(n + polynomial_size(centers_->k), 0.0);
  std::copy(values.begin(), values.end(), rhs.begin());
  Vector sol = lu_->solve(rhs);
  std::vector<double> poly(sol.begin() + static_cast<std::ptrdiff_t>(n), sol.end());
  sol.resize(n);
  return RbfInterpolant(centers_, std::move(sol), std::move(poly));
}

/// One-shot fit; prefer RbfSystem when several data vectors share the centers.
inline RbfInterpolant fit(int k, std::span<const Vec2> centers, std::span<const double> values,
                          bool normalize = true) {
  return RbfSystem(k, centers, normalize).fit(values);
}

} // namespace dcfem
