// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>

#include "dcfem/assembly.hpp"
#include "dcfem/defect.hpp"
#include "dcfem/error.hpp"
#include "dcfem/problem.hpp"
#include "dcfem/quadrature.hpp"
#include "dcfem/rbf.hpp"

namespace dcfem {

struct AdjointSolution {
  FeSolution xi;
  RbfInterpolant reconstruction;
  std::function<double(const Vec2 &)> density;
};

/// Solves K^T xi = int g phi with homogeneous Dirichlet data on the primal
/// mesh and reconstructs xi with the corrected solution's RBF system.
/// K is required to be symmetric, so the primal operator is reused.
inline AdjointSolution solve_adjoint(const CorrectedSolution &corrected, std::function<double(const Vec2 &)> g,
                                     int quad_degree = 6) {
  const auto &ctx = *corrected.context;
  if (corrected.submesh) throw InvalidArgument("solve_adjoint: needs a global correction");
  const double asym = ctx.op.interior.asymmetry();
  if (asym > 1e-12 * std::max(ctx.op.interior.max_abs(), 1e-300))
    throw PreconditionViolation("solve_adjoint: stiffness matrix is not symmetric (asymmetry " +
                                std::to_string(asym) + ")");
  const TriMesh &mesh = *ctx.mesh;
  const Vector b = assemble_load(
      mesh, g ? ScalarField([&g](std::size_t, const Vec2 &x) { return g(x); }) : ScalarField{}, quad_degree);
  FeSolution xi = solve_dirichlet(ctx.op, b, ctx.zero_dofs, ctx.options.linear);
  RbfInterpolant recon = ctx.system.fit(xi.nodal());
  return AdjointSolution{std::move(xi), std::move(recon), std::move(g)};
}

namespace detail {

/// Calls f(tri, x, w, n) at Gauss points of every outer boundary edge, with
/// w the physical weight and n the outward unit normal.
template <typename F>
void for_boundary_points(const TriMesh &mesh, int points, F &&f) {
  const auto gl = gauss_legendre(points);
  const auto &topo = mesh.topology();
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto &tri = mesh.triangle(t);
    for (int k = 0; k < 3; ++k) {
      if (!topo.is_boundary(topo.tri_edges[t][k])) continue;
      const Vec2 a = mesh.node(tri[k]), b = mesh.node(tri[(k + 1) % 3]);
      const Vec2 d = b - a;
      const double len = norm(d);
      const Vec2 n{d.y / len, -d.x / len};
      for (std::size_t q = 0; q < gl.nodes.size(); ++q)
        f(t, a + (0.5 * (gl.nodes[q] + 1.0)) * d, 0.5 * len * gl.weights[q], n);
    }
  }
}

} // namespace detail

/// (pi xi, j + div(nu grad u~ - flux)), with flux the frozen Newton flux (zero
/// for linear materials). Equal to the weak form
///   int j pi xi + int (flux - nu grad u~) . grad pi xi + int_{boundary} pi xi n . (nu grad u~ - flux) ds
/// but evaluated elementwise after integrating by parts:
///   sum_K int_K pi xi (j + nu_K : Hess u~) + sum_{interior e} int_e pi xi [(flux - nu grad u~) . n_K] ds.
/// The weak form cancels O(1) volume and boundary contributions down to the
/// size of the error, which loses most digits on fine meshes.
inline double error_estimate(const Problem &problem, const PrimalSolution &sol, const AdjointSolution &adj,
                             const CorrectedSolution &corrected, int quad_degree = 6, int edge_points = 6) {
  const TriMesh &mesh = sol.mesh();
  const auto &u = corrected.reconstruction;
  const auto &xi = adj.reconstruction;
  const auto jf = problem.source_field();
  double vol = integrate(
      mesh,
      [&](std::size_t t, const Vec2 &x) {
        const Mat2 h = u.eval_hess(x);
        const Mat2 &nu = sol.tensor[t];
        double r = nu(0, 0) * h(0, 0) + nu(0, 1) * h(0, 1) + nu(1, 0) * h(1, 0) + nu(1, 1) * h(1, 1);
        if (jf) r += jf(t, x);
        return r * xi.eval(x);
      },
      quad_degree);
  const auto gl = gauss_legendre(edge_points);
  const auto &topo = mesh.topology();
  double jumps = 0.0;
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    if (topo.is_boundary(e)) continue;
    const auto t0 = static_cast<std::size_t>(topo.edge_tris[e][0]);
    const auto t1 = static_cast<std::size_t>(topo.edge_tris[e][1]);
    if (sol.tensor[t0] == sol.tensor[t1] && sol.flux[t0] == sol.flux[t1]) continue;
    const Vec2 a = mesh.node(topo.edges[e][0]), d = mesh.node(topo.edges[e][1]) - a;
    const double len = norm(d);
    Vec2 n{d.y / len, -d.x / len};
    const auto v0 = mesh.vertices(t0);
    if (dot(n, (1.0 / 3.0) * (v0[0] + v0[1] + v0[2]) - a) > 0.0) n = -1.0 * n;
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const Vec2 x = a + (0.5 * (gl.nodes[q] + 1.0)) * d;
      const Vec2 g = u.eval_grad(x);
      const double jump = dot(n, (sol.flux[t0] - sol.tensor[t0] * g) - (sol.flux[t1] - sol.tensor[t1] * g));
      jumps += 0.5 * len * gl.weights[q] * xi.eval(x) * jump;
    }
  }
  return vol + jumps;
}

/// int_{boundary} n . (nu^T grad pi xi) (u~ - g_D) ds: the part of the QoI error
/// carried by the reconstruction's mismatch with the Dirichlet data.
inline double boundary_term(const Problem &problem, const PrimalSolution &sol, const AdjointSolution &adj,
                            const CorrectedSolution &corrected, int edge_points = 6) {
  const auto &u = corrected.reconstruction;
  const auto &xi = adj.reconstruction;
  double s = 0.0;
  detail::for_boundary_points(sol.mesh(), edge_points, [&](std::size_t t, const Vec2 &x, double w, const Vec2 &n) {
    const double gd = problem.dirichlet ? problem.dirichlet(x) : 0.0;
    s += w * dot(n, sol.tensor[t].transposed() * xi.eval_grad(x)) * (u.eval(x) - gd);
  });
  return s;
}

} // namespace dcfem
