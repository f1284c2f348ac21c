// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dcfem/assembly.hpp"
#include "dcfem/error.hpp"
#include "dcfem/mesh.hpp"
#include "dcfem/problem.hpp"
#include "dcfem/rbf.hpp"

namespace dcfem {

struct CorrectionOptions {
  int quad_degree = 4;
  std::size_t max_centers = 12000; // dense saddle matrix of this size needs ~1.2 GB
  bool normalize = true;
  SolveOptions linear{};
};

/// Everything a correction pass needs: the discrete operator with zero
/// Dirichlet data, the load it was solved with, the frozen coefficient and the
/// factorized RBF system over the mesh nodes.
struct CorrectionContext {
  std::shared_ptr<const TriMesh> mesh;
  DofMap zero_dofs;
  StiffnessOperator op;
  Vector load;
  std::vector<Mat2> tensor;
  RbfSystem system;
  CorrectionOptions options;

  [[nodiscard]] TensorField tensor_field() const {
    return [t = &tensor](std::size_t tri, const Vec2 &) { return (*t)[tri]; };
  }
};

/// u_h, the correction e_h (zero on constrained nodes) and the reconstruction
/// of u_h + e_h. For a local correction the fields live on the submesh and
/// `submesh` maps them back to the parent.
struct CorrectedSolution {
  std::shared_ptr<const CorrectionContext> context;
  FeSolution base;
  FeSolution correction;
  RbfInterpolant base_reconstruction; // reconstruction of u_h alone, without the correction solve
  RbfInterpolant reconstruction;
  int rounds = 0;
  std::optional<SubmeshMap> submesh;

  [[nodiscard]] const TriMesh &mesh() const { return *context->mesh; }
  [[nodiscard]] int kernel_order() const { return reconstruction.kernel_order(); }
};

namespace detail {

inline void check_center_cap(std::size_t n, const CorrectionOptions &opt) {
  if (n > opt.max_centers)
    throw InvalidArgument("reconstruction needs " + std::to_string(n) + " centers, above the cap of " +
                          std::to_string(opt.max_centers) +
                          " for the dense RBF solve; use a coarser mesh or a smaller correction region");
}

inline Vector add(std::span<const double> a, std::span<const double> b) {
  Vector s(a.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = a[i] + b[i];
  return s;
}

/// One pass w <- w + K^{-1}(load - int nu grad pi(w) . grad phi).
inline Vector correction_pass(const CorrectionContext &ctx, const RbfInterpolant &recon_w) {
  const Vector rhs =
      assemble_corrected_rhs(*ctx.mesh, recon_w, ctx.tensor_field(), ctx.load, ctx.options.quad_degree);
  return solve_dirichlet(ctx.op, rhs, ctx.zero_dofs, ctx.options.linear).nodal();
}

inline CorrectedSolution run_correction(std::shared_ptr<const CorrectionContext> ctx, Vector base,
                                        int rounds, std::optional<SubmeshMap> submap) {
  if (rounds < 1) throw InvalidArgument("correction rounds must be at least 1");
  const TriMesh &mesh = *ctx->mesh;
  RbfInterpolant base_recon = ctx->system.fit(base);
  Vector w = base;
  RbfInterpolant recon = base_recon;
  for (int r = 0; r < rounds; ++r) {
    w = add(w, correction_pass(*ctx, recon));
    recon = ctx->system.fit(w);
  }
  Vector e(w.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = w[i] - base[i];
  // constrained nodes carry u_h's data exactly
  for (std::size_t c : ctx->zero_dofs.constrained()) e[c] = 0.0;
  return CorrectedSolution{ctx,
                           FeSolution(mesh, std::move(base)),
                           FeSolution(mesh, std::move(e)),
                           std::move(base_recon),
                           std::move(recon),
                           rounds,
                           std::move(submap)};
}

} // namespace detail

/// Reconstruction of u_h alone (no correction solve).
inline RbfInterpolant reconstruct(const FeSolution &u, int k, const CorrectionOptions &opt = {}) {
  detail::check_center_cap(u.mesh().num_nodes(), opt);
  return RbfSystem(k, u.mesh().nodes(), opt.normalize).fit(u.nodal());
}

/// Global defect correction: solve K e = load - int nu grad pi(u_h) . grad phi
/// with the stiffness operator of the converged solve, then reconstruct u_h + e.
inline CorrectedSolution primal_correct(const PrimalSolution &sol, int k, const CorrectionOptions &opt = {},
                                        int rounds = 1) {
  const TriMesh &mesh = sol.mesh();
  detail::check_center_cap(mesh.num_nodes(), opt);
  auto owner = sol.mesh_owner ? sol.mesh_owner : std::make_shared<const TriMesh>(mesh);
  auto ctx = std::make_shared<const CorrectionContext>(CorrectionContext{
      owner, DofMap::homogeneous(*owner), sol.op, sol.load, sol.tensor,
      RbfSystem(k, owner->nodes(), opt.normalize), opt});
  if (ctx->zero_dofs.num_interior() != sol.dofs.num_interior())
    throw InvalidArgument("primal_correct: dof layout differs from the solved problem");
  return detail::run_correction(ctx, sol.u.nodal(), rounds, std::nullopt);
}

/// Local defect correction on the triangles tagged region_tag: zero Dirichlet
/// data on the whole submesh boundary and right-hand side -int nu0 grad pi0(u_h) . grad v.
/// Requires a vanishing source and one constant linear reluctivity on the region.
inline CorrectedSolution local_correct(const Problem &problem, const PrimalSolution &sol, int region_tag, int k,
                                       const CorrectionOptions &opt = {}, int rounds = 1) {
  const TriMesh &mesh = sol.mesh();
  const auto &model = problem.material(region_tag);
  if (!model.is_linear())
    throw PreconditionViolation("local_correct: region " + std::to_string(region_tag) +
                                " must have a linear (constant) reluctivity");
  auto [sub, map] = extract_submesh(mesh, region_tag);
  detail::check_center_cap(sub.num_nodes(), opt);
  if (problem.source) {
    const auto rule = gauss_rule(opt.quad_degree);
    for (std::size_t lt = 0; lt < sub.num_triangles(); ++lt) {
      const auto v = sub.vertices(lt);
      for (const auto &q : rule.points)
        if (const double j = problem.source(region_tag, map_to_triangle(v, q)); std::abs(j) > 0.0)
          throw PreconditionViolation("local_correct: source current " + std::to_string(j) +
                                      " is nonzero in region " + std::to_string(region_tag));
    }
  }
  auto owner = std::make_shared<const TriMesh>(std::move(sub));
  std::vector<Mat2> tensor(owner->num_triangles(), Mat2::identity(model.nu(0.0)));
  DofMap zero = DofMap::homogeneous(*owner);
  StiffnessOperator op = assemble_stiffness(zero, constant_tensor(model.nu(0.0)), 1);
  auto ctx = std::make_shared<const CorrectionContext>(CorrectionContext{
      owner, std::move(zero), std::move(op), Vector(owner->num_nodes(), 0.0), std::move(tensor),
      RbfSystem(k, owner->nodes(), opt.normalize), opt});
  Vector base = map.restrict_nodal<double>(sol.u.nodal());
  return detail::run_correction(ctx, std::move(base), rounds, std::move(map));
}

/// Continues a correction until `rounds` passes have been applied in total,
/// re-fitting the reconstruction after each pass.
inline CorrectedSolution repeat_correct(const CorrectedSolution &c, int rounds) {
  if (rounds < 1) throw InvalidArgument("correction rounds must be at least 1");
  if (rounds < c.rounds)
    throw InvalidArgument("repeat_correct: " + std::to_string(c.rounds) + " rounds already applied");
  if (rounds == c.rounds) return c;
  const auto &ctx = *c.context;
  Vector w = detail::add(c.base.nodal(), c.correction.nodal());
  RbfInterpolant recon = c.reconstruction;
  for (int r = c.rounds; r < rounds; ++r) {
    w = detail::add(w, detail::correction_pass(ctx, recon));
    recon = ctx.system.fit(w);
  }
  Vector e(w.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = w[i] - c.base[i];
  for (std::size_t n : ctx.zero_dofs.constrained()) e[n] = 0.0;
  return CorrectedSolution{c.context,     c.base, FeSolution(*ctx.mesh, std::move(e)), c.base_reconstruction,
                           std::move(recon), rounds, c.submesh};
}

} // namespace dcfem
