// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dcfem/assembly.hpp"
#include "dcfem/error.hpp"
#include "dcfem/material.hpp"
#include "dcfem/mesh.hpp"

namespace dcfem {

/// Boundary value problem -div(nu grad u) = J with u = g_D on the outer boundary.
struct Problem {
  std::shared_ptr<const TriMesh> mesh;
  std::map<int, ReluctivityModel> materials;             // region tag -> model
  std::function<double(int region, const Vec2 &)> source; // J; empty means zero
  std::function<double(const Vec2 &)> dirichlet;          // g_D; empty means zero
  int quad_degree = 2;

  [[nodiscard]] const ReluctivityModel &material(int region) const {
    const auto it = materials.find(region);
    if (it == materials.end()) throw InvalidArgument("no material for region " + std::to_string(region));
    return it->second;
  }

  [[nodiscard]] bool is_linear() const {
    for (const auto &[tag, m] : materials)
      if (!m.is_linear()) return false;
    return true;
  }

  [[nodiscard]] ScalarField source_field() const {
    if (!source) return {};
    return [m = mesh, j = source](std::size_t t, const Vec2 &x) { return j(m->region(t), x); };
  }

  void validate() const {
    if (!mesh) throw InvalidArgument("problem has no mesh");
    for (std::size_t t = 0; t < mesh->num_triangles(); ++t) (void)material(mesh->region(t));
  }
};

inline Problem linear_problem(std::shared_ptr<const TriMesh> mesh, double nu,
                              std::function<double(const Vec2 &)> g = {},
                              std::function<double(int, const Vec2 &)> j = {}) {
  Problem p;
  p.mesh = std::move(mesh);
  for (int tag : p.mesh->tri_region()) p.materials.try_emplace(tag, ReluctivityModel::linear(nu));
  p.dirichlet = std::move(g);
  p.source = std::move(j);
  return p;
}

struct NewtonOptions {
  double tol = 1e-10;
  int max_iterations = 50;
  int max_halvings = 10;
  SolveOptions linear{1e-13, 20000, Preconditioner::jacobi};
};

struct NewtonReport {
  int iterations = 0;
  int damped_steps = 0;
  std::vector<double> residuals; // relative residual after each iterate, starting with the initial guess
};

/// A converged FE solution together with the linearization it was computed with.
/// The per-element tensor and flux are frozen at the final iterate; the stiffness
/// operator and load are the ones the correction and adjoint solves reuse.
struct PrimalSolution {
  std::shared_ptr<const TriMesh> mesh_owner;
  DofMap dofs;
  std::vector<Mat2> tensor;  // nu_L per triangle
  std::vector<Vec2> flux;    // nu_L r - nu(|r|) r per triangle
  StiffnessOperator op;
  Vector load;               // int J phi + int flux . grad phi, all nodes
  FeSolution u;
  NewtonReport newton;

  [[nodiscard]] TensorField tensor_field() const {
    return [t = &tensor](std::size_t tri, const Vec2 &) { return (*t)[tri]; };
  }
  [[nodiscard]] const TriMesh &mesh() const { return dofs.mesh(); }
};

namespace detail {

inline void linearize(const Problem &p, const FeSolution &u, std::vector<Mat2> &tensor,
                      std::vector<Vec2> &flux) {
  const TriMesh &mesh = *p.mesh;
  tensor.resize(mesh.num_triangles());
  flux.resize(mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto &model = p.material(mesh.region(t));
    const Vec2 r = u.gradient(t);
    tensor[t] = nu_l_tensor(model, r);
    flux[t] = newton_source(model, r, 0.0).flux;
  }
}

/// Nonlinear residual int nu(|grad u|) grad u . grad phi_i - int J phi_i on unknowns.
inline Vector nonlinear_residual(const Problem &p, const DofMap &dofs, const FeSolution &u,
                                 std::span<const double> j_load) {
  const TriMesh &mesh = *p.mesh;
  Vector r(mesh.num_nodes(), 0.0);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const Vec2 g = u.gradient(t);
    const Vec2 f = p.material(mesh.region(t)).nu(norm(g)) * g;
    const auto sg = shape_gradients(mesh, t);
    const double area = mesh.signed_area(t);
    const auto &tri = mesh.triangle(t);
    for (int i = 0; i < 3; ++i) r[tri[i]] += area * dot(f, sg[i]);
  }
  Vector out(dofs.num_interior());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = r[dofs.interior()[k]] - j_load[dofs.interior()[k]];
  return out;
}

} // namespace detail

/// Solves the (possibly nonlinear) problem by Newton iteration on the P1 space.
/// Undamped steps; a step that increases the residual is halved until it does not.
/// Converges when the residual drops below tol relative to the initial guess,
/// which is the Dirichlet lifting with zero interior values.
inline PrimalSolution solve(const Problem &p, const NewtonOptions &opt = {}) {
  p.validate();
  const TriMesh &mesh = *p.mesh;
  DofMap dofs = DofMap::dirichlet(mesh, p.dirichlet);
  const Vector j_load = assemble_load(mesh, p.source_field(), p.quad_degree);

  Vector nodal(mesh.num_nodes(), 0.0);
  for (std::size_t c = 0; c < dofs.constrained().size(); ++c)
    nodal[dofs.constrained()[c]] = dofs.constrained_values()[c];
  FeSolution u(mesh, nodal);

  NewtonReport report;
  const double r0 = norm2(detail::nonlinear_residual(p, dofs, u, j_load));
  report.residuals.push_back(r0 > 0.0 ? 1.0 : 0.0);

  std::vector<Mat2> tensor;
  std::vector<Vec2> flux;
  auto assemble_at = [&](const FeSolution &at) {
    detail::linearize(p, at, tensor, flux);
    StiffnessOperator op = assemble_stiffness(dofs, [&](std::size_t t, const Vec2 &) { return tensor[t]; }, 1);
    Vector load = assemble_flux_load(mesh, flux);
    for (std::size_t i = 0; i < load.size(); ++i) load[i] += j_load[i];
    return std::pair{std::move(op), std::move(load)};
  };

  auto [op, load] = assemble_at(u);
  double rel = report.residuals.back();
  while (rel > opt.tol) {
    if (report.iterations >= opt.max_iterations)
      throw ConvergenceError("Newton did not converge", report.iterations, rel);
    const FeSolution next = solve_dirichlet(op, load, dofs, opt.linear);
    FeSolution trial = next;
    double trial_rel = norm2(detail::nonlinear_residual(p, dofs, trial, j_load)) / r0;
    for (int h = 0; h < opt.max_halvings && trial_rel > rel && !p.is_linear(); ++h) {
      const double lambda = std::ldexp(1.0, -(h + 1));
      Vector mix(mesh.num_nodes());
      for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = u[i] + lambda * (next[i] - u[i]);
      trial = FeSolution(mesh, std::move(mix));
      trial_rel = norm2(detail::nonlinear_residual(p, dofs, trial, j_load)) / r0;
      if (h == 0) ++report.damped_steps;
    }
    u = std::move(trial);
    rel = trial_rel;
    ++report.iterations;
    report.residuals.push_back(rel);
    // a linear problem is solved by its first step; the residual only measures the linear solver
    if (p.is_linear()) break;
    std::tie(op, load) = assemble_at(u);
  }
  return PrimalSolution{p.mesh, std::move(dofs), std::move(tensor), std::move(flux), std::move(op),
                        std::move(load), std::move(u), std::move(report)};
}

} // namespace dcfem
