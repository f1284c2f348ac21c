// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "dcfem/assembly.hpp"
#include "dcfem/error.hpp"
#include "dcfem/problem.hpp"

namespace dcfem {

struct ErrorEstimate {
  double eta_global = 0.0;
  std::vector<double> eta_per_element; // eta_K, not squared
  double eta_rel = 0.0;                // eta / ||nu grad u_h||_{L2}
};

/// Explicit residual estimator for P1:
///   eta_K^2 = h_K^2 ||J||^2_K + sum over interior edges e of K of h_K |e| (1/2 [nu grad u_h . n])^2.
/// The element residual reduces to
/// J because div(nu grad u_h) vanishes elementwise for P1 and elementwise-constant nu.
inline ErrorEstimate residual_estimate(const Problem &problem, const FeSolution &u, int quad_degree = 4) {
  const TriMesh &mesh = u.mesh();
  const std::size_t nt = mesh.num_triangles();
  std::vector<Vec2> flux(nt);
  double energy = 0.0;
  for (std::size_t t = 0; t < nt; ++t) {
    const Vec2 g = u.gradient(t);
    flux[t] = problem.material(mesh.region(t)).nu(norm(g)) * g;
    energy += mesh.signed_area(t) * dot(flux[t], flux[t]);
  }
  std::vector<double> eta2(nt, 0.0);
  if (const auto jf = problem.source_field()) {
    const auto rule = gauss_rule(quad_degree);
    for (std::size_t t = 0; t < nt; ++t) {
      const auto v = mesh.vertices(t);
      double s = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double j = jf(t, map_to_triangle(v, rule.points[q]));
        s += rule.weights[q] * j * j;
      }
      const double h = mesh.diameter(t);
      eta2[t] += h * h * 2.0 * mesh.signed_area(t) * s;
    }
  }
  const auto &topo = mesh.topology();
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    if (topo.is_boundary(e)) continue;
    const auto t0 = static_cast<std::size_t>(topo.edge_tris[e][0]);
    const auto t1 = static_cast<std::size_t>(topo.edge_tris[e][1]);
    const Vec2 d = mesh.node(topo.edges[e][1]) - mesh.node(topo.edges[e][0]);
    const double len = norm(d);
    const Vec2 n{d.y / len, -d.x / len};
    const double half_jump = 0.5 * dot(flux[t0] - flux[t1], n);
    const double c = len * half_jump * half_jump;
    eta2[t0] += mesh.diameter(t0) * c;
    eta2[t1] += mesh.diameter(t1) * c;
  }
  ErrorEstimate est;
  est.eta_per_element.resize(nt);
  double total = 0.0;
  for (std::size_t t = 0; t < nt; ++t) {
    est.eta_per_element[t] = std::sqrt(eta2[t]);
    total += eta2[t];
  }
  est.eta_global = std::sqrt(total);
  est.eta_rel = energy > 0.0 ? est.eta_global / std::sqrt(energy) : 0.0;
  return est;
}

/// Triangles with eta_K >= gamma * max eta (and eta_K > 0).
inline std::vector<std::size_t> mark_elements(const ErrorEstimate &est, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("mark_elements: gamma must lie in (0, 1]");
  const auto &eta = est.eta_per_element;
  const double mx = eta.empty() ? 0.0 : *std::max_element(eta.begin(), eta.end());
  std::vector<std::size_t> marked;
  for (std::size_t t = 0; t < eta.size(); ++t)
    if (eta[t] > 0.0 && eta[t] >= gamma * mx) marked.push_back(t);
  return marked;
}

} // namespace dcfem
