// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dcfem/error.hpp"
#include "dcfem/geometry.hpp"
#include "dcfem/linalg.hpp"
#include "dcfem/mesh.hpp"
#include "dcfem/quadrature.hpp"

namespace dcfem {

/// A point together with the triangle it is evaluated in. Piecewise fields use
/// the triangle to pick the branch on element boundaries; smooth fields ignore it.
struct ElementPoint {
  std::size_t tri;
  Vec2 x;
};

/// Anything that can be evaluated (value and gradient) at an element point.
template <typename F>
concept ElementField = requires(const F &f, const ElementPoint &p) {
  { f.value(p) } -> std::convertible_to<double>;
  { f.gradient(p) } -> std::convertible_to<Vec2>;
};

/// Gradients of the three barycentric coordinates of triangle t.
inline std::array<Vec2, 3> shape_gradients(const TriMesh &mesh, std::size_t t) {
  const auto v = mesh.vertices(t);
  const double two_area = cross(v[1] - v[0], v[2] - v[0]);
  if (!(two_area > 0.0)) throw MeshError("degenerate triangle " + std::to_string(t));
  return {Vec2{v[1].y - v[2].y, v[2].x - v[1].x} * (1.0 / two_area),
          Vec2{v[2].y - v[0].y, v[0].x - v[2].x} * (1.0 / two_area),
          Vec2{v[0].y - v[1].y, v[1].x - v[0].x} * (1.0 / two_area)};
}

/// Partition of the nodes into unknowns and Dirichlet-constrained nodes.
class DofMap {
public:
  static constexpr std::ptrdiff_t constrained_marker = -1;

  /// Constrains every node flagged as boundary (outer or submesh) to g(x).
  static DofMap dirichlet(const TriMesh &mesh, const std::function<double(const Vec2 &)> &g) {
    DofMap d(mesh);
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
      if (mesh.node_flags()[i] == NodeFlag::interior) {
        d.node_to_dof_[i] = static_cast<std::ptrdiff_t>(d.interior_.size());
        d.interior_.push_back(i);
      } else {
        d.node_to_constrained_[i] = static_cast<std::ptrdiff_t>(d.constrained_.size());
        d.constrained_.push_back(i);
        d.values_.push_back(g ? g(mesh.node(i)) : 0.0);
      }
    }
    return d;
  }

  static DofMap homogeneous(const TriMesh &mesh) { return dirichlet(mesh, nullptr); }

  /// Same partition with all prescribed values set to zero.
  [[nodiscard]] DofMap with_zero_data() const {
    DofMap d = *this;
    std::fill(d.values_.begin(), d.values_.end(), 0.0);
    return d;
  }

  [[nodiscard]] const TriMesh &mesh() const { return *mesh_; }
  [[nodiscard]] std::size_t num_interior() const { return interior_.size(); }
  [[nodiscard]] const std::vector<std::size_t> &interior() const { return interior_; }
  [[nodiscard]] const std::vector<std::size_t> &constrained() const { return constrained_; }
  [[nodiscard]] const std::vector<double> &constrained_values() const { return values_; }
  [[nodiscard]] std::ptrdiff_t dof(std::size_t node) const { return node_to_dof_[node]; }
  [[nodiscard]] std::ptrdiff_t constrained_index(std::size_t node) const {
    return node_to_constrained_[node];
  }

private:
  explicit DofMap(const TriMesh &mesh)
      : mesh_(&mesh), node_to_dof_(mesh.num_nodes(), constrained_marker),
        node_to_constrained_(mesh.num_nodes(), -1) {}

  const TriMesh *mesh_;
  std::vector<std::size_t> interior_;
  std::vector<std::size_t> constrained_;
  std::vector<double> values_;
  std::vector<std::ptrdiff_t> node_to_dof_;
  std::vector<std::ptrdiff_t> node_to_constrained_;
};

/// Continuous piecewise-linear field given by nodal values on a mesh.
class FeSolution {
public:
  FeSolution(const TriMesh &mesh, Vector nodal) : mesh_(&mesh), nodal_(std::move(nodal)) {
    if (nodal_.size() != mesh.num_nodes()) throw InvalidArgument("FeSolution: size mismatch");
  }

  [[nodiscard]] const TriMesh &mesh() const { return *mesh_; }
  [[nodiscard]] const Vector &nodal() const { return nodal_; }
  [[nodiscard]] double operator[](std::size_t i) const { return nodal_[i]; }

  [[nodiscard]] Vec2 gradient(std::size_t t) const {
    const auto g = shape_gradients(*mesh_, t);
    const auto &tri = mesh_->triangle(t);
    return nodal_[tri[0]] * g[0] + nodal_[tri[1]] * g[1] + nodal_[tri[2]] * g[2];
  }
  [[nodiscard]] Vec2 gradient(const ElementPoint &p) const { return gradient(p.tri); }

  [[nodiscard]] double value(const ElementPoint &p) const {
    const auto v = mesh_->vertices(p.tri);
    const double det = cross(v[1] - v[0], v[2] - v[0]);
    const double l1 = cross(p.x - v[0], v[2] - v[0]) / det;
    const double l2 = cross(v[1] - v[0], p.x - v[0]) / det;
    const auto &tri = mesh_->triangle(p.tri);
    return (1.0 - l1 - l2) * nodal_[tri[0]] + l1 * nodal_[tri[1]] + l2 * nodal_[tri[2]];
  }

private:
  const TriMesh *mesh_;
  Vector nodal_;
};

/// Stiffness matrix split into the unknown-unknown block and the
/// unknown-constrained block used to lift Dirichlet data into the right-hand side.
struct StiffnessOperator {
  CsrMatrix interior;  // |interior| x |interior|
  CsrMatrix lifting;   // |interior| x |constrained|
};

/// Element-wise tensor coefficient, evaluated at quadrature points.
using TensorField = std::function<Mat2(std::size_t tri, const Vec2 &x)>;
using ScalarField = std::function<double(std::size_t tri, const Vec2 &x)>;

inline TensorField constant_tensor(double nu) {
  return [m = Mat2::identity(nu)](std::size_t, const Vec2 &) { return m; };
}

/// Galerkin matrix K_ij = int (nu grad phi_j) . grad phi_i over unknown rows.
inline StiffnessOperator assemble_stiffness(const DofMap &dofs, const TensorField &nu,
                                            int quad_degree = 2) {
  const TriMesh &mesh = dofs.mesh();
  const auto rule = gauss_rule(quad_degree);
  std::vector<Triplet> ii, ic;
  ii.reserve(9 * mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = shape_gradients(mesh, t);
    const auto v = mesh.vertices(t);
    const double jac = 2.0 * mesh.signed_area(t);
    Mat2 avg{};
    for (std::size_t q = 0; q < rule.size(); ++q)
      avg += (rule.weights[q] * jac) * nu(t, map_to_triangle(v, rule.points[q]));
    const auto &tri = mesh.triangle(t);
    for (int i = 0; i < 3; ++i) {
      const auto row = dofs.dof(tri[i]);
      if (row < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const double k = dot(avg * g[j], g[i]);
        if (const auto col = dofs.dof(tri[j]); col >= 0)
          ii.push_back({static_cast<std::size_t>(row), static_cast<std::size_t>(col), k});
        else
          ic.push_back({static_cast<std::size_t>(row),
                        static_cast<std::size_t>(dofs.constrained_index(tri[j])), k});
      }
    }
  }
  return {CsrMatrix(dofs.num_interior(), dofs.num_interior(), std::move(ii)),
          CsrMatrix(dofs.num_interior(), dofs.constrained().size(), std::move(ic))};
}

/// Nodal load vector int j phi_i (all nodes).
inline Vector assemble_load(const TriMesh &mesh, const ScalarField &j, int quad_degree = 2) {
  Vector b(mesh.num_nodes(), 0.0);
  if (!j) return b;
  const auto rule = gauss_rule(quad_degree);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto v = mesh.vertices(t);
    const double jac = 2.0 * mesh.signed_area(t);
    const auto &tri = mesh.triangle(t);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec2 &r = rule.points[q];
      const double f = j(t, map_to_triangle(v, r)) * rule.weights[q] * jac;
      if (f == 0.0) continue;
      b[tri[0]] += f * (1.0 - r.x - r.y);
      b[tri[1]] += f * r.x;
      b[tri[2]] += f * r.y;
    }
  }
  return b;
}

/// Nodal vector int flux . grad phi_i for an element-wise constant vector field.
inline Vector assemble_flux_load(const TriMesh &mesh, std::span<const Vec2> flux) {
  Vector b(mesh.num_nodes(), 0.0);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    if (flux[t] == Vec2{}) continue;
    const auto g = shape_gradients(mesh, t);
    const double area = mesh.signed_area(t);
    const auto &tri = mesh.triangle(t);
    for (int i = 0; i < 3; ++i) b[tri[i]] += area * dot(flux[t], g[i]);
  }
  return b;
}

/// Right-hand side of the correction problem:
///   load_i - int (nu grad recon) . grad phi_i,
/// with the integral evaluated by the given Gauss rule.
template <ElementField Recon>
Vector assemble_corrected_rhs(const TriMesh &mesh, const Recon &recon, const TensorField &nu,
                              std::span<const double> load, int quad_degree = 4) {
  if (load.size() != mesh.num_nodes()) throw InvalidArgument("corrected rhs: load size mismatch");
  Vector b(load.begin(), load.end());
  const auto rule = gauss_rule(quad_degree);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = shape_gradients(mesh, t);
    const auto v = mesh.vertices(t);
    const double jac = 2.0 * mesh.signed_area(t);
    Vec2 flux{};
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec2 x = map_to_triangle(v, rule.points[q]);
      flux += (rule.weights[q] * jac) * (nu(t, x) * recon.gradient(ElementPoint{t, x}));
    }
    const auto &tri = mesh.triangle(t);
    for (int i = 0; i < 3; ++i) b[tri[i]] -= dot(flux, g[i]);
  }
  return b;
}

template <ElementField Recon>
Vector assemble_corrected_rhs(const TriMesh &mesh, const Recon &recon, const TensorField &nu,
                              const ScalarField &j, int quad_degree = 4) {
  const Vector load = assemble_load(mesh, j, quad_degree);
  return assemble_corrected_rhs(mesh, recon, nu, load, quad_degree);
}

struct SolveOptions {
  double tol = 1e-12;
  int maxit = 20000;
  Preconditioner precond = Preconditioner::jacobi;
};

/// Restricts a nodal right-hand side to the unknowns and subtracts the lifting
/// of the Dirichlet data.
inline Vector reduced_rhs(const StiffnessOperator &op, const DofMap &dofs, std::span<const double> rhs) {
  Vector b(dofs.num_interior());
  for (std::size_t k = 0; k < b.size(); ++k) b[k] = rhs[dofs.interior()[k]];
  const Vector lift = op.lifting * std::span<const double>(dofs.constrained_values());
  for (std::size_t k = 0; k < b.size(); ++k) b[k] -= lift[k];
  return b;
}

/// Solves K u = rhs with the Dirichlet data of dofs. The returned nodal vector
/// carries the prescribed values exactly at constrained nodes.
inline FeSolution solve_dirichlet(const StiffnessOperator &op, std::span<const double> rhs,
                                  const DofMap &dofs, const SolveOptions &opt = {}) {
  const TriMesh &mesh = dofs.mesh();
  if (rhs.size() != mesh.num_nodes()) throw InvalidArgument("solve_dirichlet: rhs size mismatch");
  Vector nodal(mesh.num_nodes(), 0.0);
  for (std::size_t c = 0; c < dofs.constrained().size(); ++c)
    nodal[dofs.constrained()[c]] = dofs.constrained_values()[c];
  if (dofs.num_interior() > 0) {
    const Vector b = reduced_rhs(op, dofs, rhs);
    const auto res = cg_solve(op.interior, b, opt.tol, opt.maxit, opt.precond);
    if (res.relative_residual > std::max(1e-10, opt.tol))
      throw ConvergenceError("solve_dirichlet: residual above 1e-10", res.iterations,
                             res.relative_residual);
    for (std::size_t k = 0; k < res.x.size(); ++k) nodal[dofs.interior()[k]] = res.x[k];
  }
  return FeSolution(mesh, std::move(nodal));
}

/// Element-wise quadrature of f(t, x) over the mesh.
template <typename F>
double integrate(const TriMesh &mesh, F &&f, int quad_degree = 6) {
  const auto rule = gauss_rule(quad_degree);
  double s = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto v = mesh.vertices(t);
    const double jac = 2.0 * mesh.signed_area(t);
    double local = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q)
      local += rule.weights[q] * f(t, map_to_triangle(v, rule.points[q]));
    s += jac * local;
  }
  return s;
}

/// Quadrature of f(t, x) over the listed triangles, each split into s^2 congruent
/// subtriangles. For integrands that are only piecewise smooth inside elements.
template <typename F>
double integrate_subdivided(const TriMesh &mesh, const std::vector<std::size_t> &tris, F &&f, int quad_degree,
                            int s) {
  if (s < 1) throw InvalidArgument("integrate_subdivided: subdivisions must be positive");
  const auto rule = gauss_rule(quad_degree);
  double total = 0.0;
  for (const std::size_t t : tris) {
    const auto v = mesh.vertices(t);
    const Vec2 e1 = (1.0 / s) * (v[1] - v[0]), e2 = (1.0 / s) * (v[2] - v[0]);
    const double jac = 2.0 * mesh.signed_area(t) / (s * s);
    double local = 0.0;
    for (int i = 0; i < s; ++i)
      for (int j = 0; i + j < s; ++j) {
        const Vec2 p = v[0] + static_cast<double>(i) * e1 + static_cast<double>(j) * e2;
        const std::array<Vec2, 3> lower{p, p + e1, p + e2};
        for (std::size_t q = 0; q < rule.size(); ++q) local += rule.weights[q] * f(t, map_to_triangle(lower, rule.points[q]));
        if (i + j + 1 < s) {
          const std::array<Vec2, 3> upper{p + e1, p + e1 + e2, p + e2};
          for (std::size_t q = 0; q < rule.size(); ++q)
            local += rule.weights[q] * f(t, map_to_triangle(upper, rule.points[q]));
        }
      }
    total += jac * local;
  }
  return total;
}

/// ||field - exact||_{L2}
template <ElementField Field>
double l2_error(const TriMesh &mesh, const Field &field, const std::function<double(const Vec2 &)> &exact,
                int quad_degree = 6) {
  return std::sqrt(integrate(
      mesh,
      [&](std::size_t t, const Vec2 &x) {
        const double d = field.value(ElementPoint{t, x}) - exact(x);
        return d * d;
      },
      quad_degree));
}

/// |field - exact|_{H1} seminorm
template <ElementField Field>
double h1_seminorm_error(const TriMesh &mesh, const Field &field,
                         const std::function<Vec2(const Vec2 &)> &exact_grad, int quad_degree = 6) {
  return std::sqrt(integrate(
      mesh,
      [&](std::size_t t, const Vec2 &x) {
        const Vec2 d = field.gradient(ElementPoint{t, x}) - exact_grad(x);
        return dot(d, d);
      },
      quad_degree));
}

} // namespace dcfem
