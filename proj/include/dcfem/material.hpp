// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "dcfem/error.hpp"
#include "dcfem/geometry.hpp"

namespace dcfem {

inline constexpr double mu0 = 4.0e-7 * std::numbers::pi;

/// Magnetic reluctivity as a function of s = |grad u| = |B|.
///
/// Two kinds are supported: a constant (linear material) and the Brauer curve
/// nu(s) = k1 exp(k2 s^2) + k3, which is smooth so nu' is exact.
class ReluctivityModel {
public:
  enum class Kind { linear, brauer };

  static ReluctivityModel linear(double nu0) {
    if (!(nu0 > 0.0)) throw InvalidArgument("linear reluctivity must be positive");
    return ReluctivityModel(Kind::linear, nu0, 0.0, 0.0);
  }
  static ReluctivityModel linear_mu_r(double mu_r) { return linear(1.0 / (mu0 * mu_r)); }
  static ReluctivityModel brauer(double k1, double k2, double k3) {
    if (!(k1 + k3 > 0.0) || k1 < 0.0 || k2 < 0.0)
      throw InvalidArgument("Brauer coefficients must give a positive, monotone reluctivity");
    return ReluctivityModel(Kind::brauer, k1, k2, k3);
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] bool is_linear() const { return kind_ == Kind::linear; }
  [[nodiscard]] double k1() const { return c1_; }
  [[nodiscard]] double k2() const { return c2_; }
  [[nodiscard]] double k3() const { return c3_; }

  [[nodiscard]] double nu(double s) const {
    return kind_ == Kind::linear ? c1_ : c1_ * std::exp(c2_ * s * s) + c3_;
  }
  /// d nu / ds
  [[nodiscard]] double dnu(double s) const {
    return kind_ == Kind::linear ? 0.0 : 2.0 * c1_ * c2_ * s * std::exp(c2_ * s * s);
  }

  friend bool operator==(const ReluctivityModel &, const ReluctivityModel &) = default;

  [[nodiscard]] std::string describe() const {
    if (kind_ == Kind::linear) return "linear(nu=" + std::to_string(c1_) + ")";
    return "brauer(" + std::to_string(c1_) + "," + std::to_string(c2_) + "," + std::to_string(c3_) + ")";
  }

private:
  ReluctivityModel(Kind k, double a, double b, double c) : kind_(k), c1_(a), c2_(b), c3_(c) {}
  Kind kind_;
  double c1_, c2_, c3_;
};

/// Below this norm the rank-one part of the linearization is dropped.
inline constexpr double small_gradient = 1e-14;

/// Newton linearization tensor nu(|r|) I + nu'(|r|)/|r| r (x) r, with the
/// rank-one part dropped for |r| below small_gradient.
inline Mat2 nu_l_tensor(const ReluctivityModel &model, const Vec2 &r) {
  const double s = norm(r);
  Mat2 t = Mat2::identity(model.nu(s));
  if (s >= small_gradient && !model.is_linear()) t += (model.dnu(s) / s) * Mat2::outer(r, r);
  return t;
}

/// Flux density of the 2D potential formulation, B = curl(u e_z) = (du/dy, -du/dx).
constexpr Vec2 flux_density(const Vec2 &grad_u) { return {grad_u.y, -grad_u.x}; }

/// Differential reluctivity: Jacobian of b -> nu(|b|) b.
inline Mat2 differential_tensor(const ReluctivityModel &model, const Vec2 &b) {
  const double s = norm(b);
  Mat2 t = Mat2::identity(model.nu(s));
  if (s >= small_gradient && !model.is_linear()) t += (model.dnu(s) / s) * Mat2::outer(b, b);
  return t;
}

/// Right-hand side of the Newton step in weak form: the step solves
/// (nu_L grad u_new, grad v) = (volume, v) + (flux, grad v).
struct NewtonSource {
  double volume = 0.0;
  Vec2 flux{};
};

/// Newton source J + div(nu(|r|) r - nu_L(r) r), the divergence moved onto the
/// test function: flux = nu_L(r) r - nu(|r|) r.
inline NewtonSource newton_source(const ReluctivityModel &model, const Vec2 &r, double current_density) {
  if (model.is_linear()) return {current_density, {}};
  const Vec2 lin = nu_l_tensor(model, r) * r;
  const Vec2 secant = model.nu(norm(r)) * r;
  return {current_density, lin - secant};
}

} // namespace dcfem
