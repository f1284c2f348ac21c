// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <gtest/gtest.h>

#include "dcfem/assembly.hpp"
#include "dcfem/linalg.hpp"
#include "test_util.hpp"

using namespace dcfem;

namespace {

CsrMatrix from_dense(const DenseMatrix &a) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if (a(i, j) != 0.0) t.push_back({i, j, a(i, j)});
  return CsrMatrix(a.size(), a.size(), std::move(t));
}

DenseMatrix random_matrix(std::size_t n, dcfem::test::Rng &rng) {
  DenseMatrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = rng.uniform(-1, 1);
  return a;
}

DenseMatrix random_spd(std::size_t n, dcfem::test::Rng &rng) {
  const DenseMatrix b = random_matrix(n, rng);
  DenseMatrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = i == j ? static_cast<double>(n) : 0.0;
      for (std::size_t k = 0; k < n; ++k) s += b(i, k) * b(j, k);
      a(i, j) = s;
    }
  return a;
}

// Thomas algorithm for tridiagonal systems, the independent oracle for the 1D Laplacian
Vector thomas(std::vector<double> lo, std::vector<double> d, std::vector<double> up, Vector b) {
  const std::size_t n = d.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = lo[i] / d[i - 1];
    d[i] -= w * up[i - 1];
    b[i] -= w * b[i - 1];
  }
  Vector x(n);
  x[n - 1] = b[n - 1] / d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (b[i] - up[i] * x[i + 1]) / d[i];
  return x;
}

} // namespace

TEST(Cg, IdentityInOneIteration) {
  const auto id = from_dense(DenseMatrix::identity(6));
  const Vector b{1, -2, 3, 0.5, 7, 1e-3};
  const auto r = cg_solve(id, b, 1e-14, 100, Preconditioner::none);
  EXPECT_EQ(r.iterations, 1);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(r.x[i], b[i], 1e-15);
}

TEST(Cg, OneDimensionalLaplacian) {
  DenseMatrix a(4);
  for (std::size_t i = 0; i < 4; ++i) {
    a(i, i) = 2.0;
    if (i > 0) a(i, i - 1) = -1.0;
    if (i < 3) a(i, i + 1) = -1.0;
  }
  const Vector b{1, 1, 1, 1};
  const Vector oracle = thomas({0, -1, -1, -1}, {2, 2, 2, 2}, {-1, -1, -1, 0}, b);
  ASSERT_NEAR(oracle[0], 2.0, 1e-14);
  ASSERT_NEAR(oracle[1], 3.0, 1e-14);
  for (auto pc : {Preconditioner::none, Preconditioner::jacobi}) {
    const auto r = cg_solve(from_dense(a), b, 1e-14, 100, pc);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(r.x[i], oracle[i], 1e-12);
    EXPECT_LE(r.relative_residual, 1e-14);
  }
}

TEST(Cg, JacobiIsExactForDiagonal) {
  DenseMatrix a(5);
  for (std::size_t i = 0; i < 5; ++i) a(i, i) = static_cast<double>(i + 1);
  const Vector b{1, 1, 1, 1, 1};
  const auto r = cg_solve(from_dense(a), b, 1e-14, 100, Preconditioner::jacobi);
  EXPECT_EQ(r.iterations, 1);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(r.x[i], 1.0 / static_cast<double>(i + 1), 1e-15);
}

TEST(Cg, NonConvergenceCarriesResidual) {
  const auto m = structured_square_mesh(16);
  const auto dofs = DofMap::homogeneous(m);
  const auto op = assemble_stiffness(dofs, constant_tensor(1.0));
  const Vector b(dofs.num_interior(), 1.0);
  try {
    (void)cg_solve(op.interior, b, 1e-12, 3);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError &e) {
    EXPECT_EQ(e.iterations(), 3);
    // CG residuals are not monotone, so only finiteness and the missed target are checked
    EXPECT_GT(e.residual(), 1e-12);
    EXPECT_TRUE(std::isfinite(e.residual()));
  }
}

TEST(Cg, ZeroRightHandSide) {
  const auto r = cg_solve(from_dense(DenseMatrix::identity(3)), Vector{0, 0, 0});
  EXPECT_EQ(r.x, (Vector{0, 0, 0}));
}

TEST(Cg, IterationsGrowLikeInverseMeshSize) {
  std::vector<double> h, its;
  for (std::size_t n : {16u, 32u, 64u, 128u}) {
    const auto m = structured_square_mesh(n);
    const auto dofs = DofMap::homogeneous(m);
    const auto op = assemble_stiffness(dofs, constant_tensor(1.0));
    const Vector b = reduced_rhs(op, dofs, assemble_load(m, [](std::size_t, const Vec2 &) { return 1.0; }));
    const auto r = cg_solve(op.interior, b, 1e-10, 100000);
    h.push_back(mesh_size(m));
    its.push_back(r.iterations);
  }
  // least-squares slope of log(iterations) against log(1/h)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = -std::log(h[i]), y = std::log(its[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double k = static_cast<double>(h.size());
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  EXPECT_NEAR(slope, 1.0, 0.3);
}

TEST(Lu, Identity) {
  const Vector b{3, -1, 2};
  const Vector x = lu_solve(DenseMatrix::identity(3), b);
  EXPECT_EQ(x, b);
}

TEST(Lu, RequiresPivoting) {
  DenseMatrix a(2);
  a(0, 1) = 1.0;
  a(1, 0) = 1.0;
  const Vector x = lu_solve(a, Vector{4, 9});
  EXPECT_DOUBLE_EQ(x[0], 9.0);
  EXPECT_DOUBLE_EQ(x[1], 4.0);
}

TEST(Lu, SingularDetected) {
  DenseMatrix a(3, 1.0);
  EXPECT_THROW(lu_solve(a, Vector{1, 2, 3}), SingularMatrix);
  EXPECT_THROW(lu_solve(DenseMatrix(2), Vector{1, 1}), SingularMatrix);
}

TEST(Lu, AgreesWithCgOnSpd) {
  dcfem::test::Rng rng(21);
  const DenseMatrix a = random_spd(50, rng);
  Vector b(50);
  for (auto &v : b) v = rng.uniform(-1, 1);
  const Vector x_lu = lu_solve(a, b);
  const Vector x_cg = cg_solve(from_dense(a), b, 1e-14, 1000).x;
  for (std::size_t i = 0; i < 50; ++i) EXPECT_NEAR(x_lu[i], x_cg[i], 1e-8);
}

TEST(Lu, FactorsReproducePermutedMatrix) {
  dcfem::test::Rng rng(22);
  for (std::size_t n : {5u, 12u, 50u, 120u}) {
    const DenseMatrix a = random_matrix(n, rng);
    const LuFactorization f(a);
    const DenseMatrix l = f.lower(), u = f.upper();
    const auto perm = f.permutation();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += l(i, k) * u(k, j);
        worst = std::max(worst, std::abs(a(perm[i], j) - s));
      }
    EXPECT_LE(worst, 1e-12 * a.max_abs()) << "n = " << n;
    Vector b(n);
    for (auto &v : b) v = rng.uniform(-1, 1);
    const Vector x = f.solve(b);
    const Vector ax = a * std::span<const double>(x);
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(ax[i] - b[i]));
    EXPECT_LE(res, 1e-10 * norm_inf(b) * static_cast<double>(n));
  }
}

TEST(Csr, DuplicatesSummedAndTranspose) {
  const CsrMatrix a(2, 3, {{0, 1, 1.0}, {1, 2, 2.0}, {0, 1, 0.5}});
  EXPECT_EQ(a.at(0, 1), 1.5);
  EXPECT_EQ(a.at(1, 2), 2.0);
  EXPECT_EQ(a.at(1, 0), 0.0);
  const CsrMatrix t = a.transposed();
  EXPECT_EQ(t.rows(), 3u);
  EXPECT_EQ(t.at(1, 0), 1.5);
  EXPECT_THROW(CsrMatrix(2, 2, {{2, 0, 1.0}}), InvalidArgument);
}
