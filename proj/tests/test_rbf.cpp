// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <gtest/gtest.h>

#include "dcfem/assembly.hpp"
#include "dcfem/rbf.hpp"
#include "test_util.hpp"

using namespace dcfem;

namespace {

std::vector<Vec2> random_points(std::size_t n, double lo, double hi, std::uint64_t stream) {
  dcfem::test::Rng rng(stream);
  std::vector<Vec2> p(n);
  for (auto &x : p) x = rng.point(lo, hi);
  return p;
}

std::vector<double> sample(const std::vector<Vec2> &pts, const std::function<double(const Vec2 &)> &f) {
  std::vector<double> v;
  for (const auto &p : pts) v.push_back(f(p));
  return v;
}

double reconstruction_error(int k, std::size_t n, const std::function<double(const Vec2 &)> &f) {
  const auto m = structured_square_mesh(n);
  const auto recon = fit(k, m.nodes(), sample(m.nodes(), f));
  return l2_error(m, recon, f, 6);
}

} // namespace

TEST(Kernel, ClosedFormValues) {
  EXPECT_EQ(kernel(1, 1.0), 0.0);
  EXPECT_EQ(kernel(1, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(kernel(1, 2.0), 4.0 * std::log(2.0));
  EXPECT_DOUBLE_EQ(kernel(2, 2.0), 8.0);
  EXPECT_DOUBLE_EQ(kernel(3, 2.0), 32.0);
  EXPECT_THROW(kernel(4, 1.0), InvalidArgument);
}

TEST(Kernel, RadialDerivatives) {
  for (int k : {1, 2, 3})
    for (double r : {0.3, 1.0, 1.7}) {
      const double h = 1e-5;
      EXPECT_NEAR(kernel_d1(k, r), (kernel(k, r + h) - kernel(k, r - h)) / (2 * h), 1e-8);
      EXPECT_NEAR(kernel_d2(k, r), (kernel_d1(k, r + h) - kernel_d1(k, r - h)) / (2 * h), 1e-7);
    }
}

TEST(Fit, LinearPolynomialReproduction) {
  const auto q = [](const Vec2 &x) { return 1.0 + 2.0 * x.x - x.y; };
  const auto c = random_points(40, -1, 1, 31);
  const auto s = fit(2, c, sample(c, q));
  for (double a : s.alpha()) EXPECT_NEAR(a, 0.0, 1e-10);
  for (const auto &x : random_points(100, -1, 1, 32)) {
    EXPECT_NEAR(s.eval(x), q(x), 1e-9 * 4.0);
    const Vec2 g = s.eval_grad(x);
    EXPECT_NEAR(g.x, 2.0, 1e-9);
    EXPECT_NEAR(g.y, -1.0, 1e-9);
  }
}

TEST(Fit, PolynomialReproductionAllKernels) {
  // deg q < m: linear for k = 1, 2 and quadratic for k = 3, on a physical-scale cloud
  const auto c = random_points(60, 0.02, 0.05, 33);
  const auto lin = [](const Vec2 &x) { return 0.5 - 30.0 * x.x + 12.0 * x.y; };
  const auto quad = [](const Vec2 &x) { return 0.5 - 30.0 * x.x + 12.0 * x.y + 400.0 * x.x * x.y - 900.0 * x.y * x.y; };
  for (int k : {1, 2, 3}) {
    const auto &q = k == 3 ? std::function<double(const Vec2 &)>(quad) : std::function<double(const Vec2 &)>(lin);
    const auto s = fit(k, c, sample(c, q));
    double qmax = 0.0, err = 0.0;
    for (const auto &x : random_points(100, 0.02, 0.05, 34)) {
      qmax = std::max(qmax, std::abs(q(x)));
      err = std::max(err, std::abs(s.eval(x) - q(x)));
    }
    EXPECT_LE(err, 1e-9 * qmax) << "k = " << k;
  }
}

TEST(Fit, ThreePointsSquareSystem) {
  const std::vector<Vec2> c{{0, 0}, {1, 0}, {0.2, 0.9}};
  const std::vector<double> v{1.0, -2.0, 0.5};
  const auto s = fit(2, c, v);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(s.eval(c[i]), v[i], 1e-12);
}

TEST(Fit, InterpolationAndMomentConditions) {
  // jittered 12 x 12 grid: separation stays above 0.07, unlike a raw random cloud
  dcfem::test::Rng rng(36);
  std::vector<Vec2> c;
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j)
      c.push_back({-1.0 + (i + 0.5 + rng.uniform(-0.3, 0.3)) / 6.0, -1.0 + (j + 0.5 + rng.uniform(-0.3, 0.3)) / 6.0});
  std::vector<double> v;
  for (std::size_t i = 0; i < c.size(); ++i) v.push_back(rng.uniform(-1, 1));
  for (int k : {1, 2, 3}) {
    const auto s = fit(k, c, v);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(s.eval(c[i]), v[i], 1e-9) << "k = " << k;
    EXPECT_LE(s.moment_residual(), 1e-9) << "k = " << k;
  }
}

TEST(Fit, RankDeficientPolynomialBlock) {
  const std::vector<Vec2> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  EXPECT_THROW(fit(2, line, std::vector<double>(4, 1.0)), InvalidArgument);
  // six points on the unit circle lie on a conic: rank-deficient for the quadratic basis
  std::vector<Vec2> circle;
  for (int i = 0; i < 6; ++i) circle.push_back({std::cos(i * 1.0), std::sin(i * 1.0)});
  EXPECT_THROW(fit(3, circle, std::vector<double>(6, 1.0)), InvalidArgument);
  EXPECT_NO_THROW(fit(2, circle, std::vector<double>(6, 1.0)));
}

TEST(Fit, DuplicateCenters) {
  const std::vector<Vec2> c{{0, 0}, {1, 0}, {0, 1}, {1, 0}};
  EXPECT_THROW(fit(2, c, std::vector<double>(4, 1.0)), InvalidArgument);
}

TEST(Eval, GradientAndHessianMatchFiniteDifferences) {
  const auto c = random_points(80, -1, 1, 37);
  const auto f = [](const Vec2 &x) { return std::sin(2 * x.x) * std::cos(x.y) + x.x * x.y; };
  for (int k : {2, 3}) {
    const auto s = fit(k, c, sample(c, f));
    for (const auto &x : random_points(20, -0.9, 0.9, 38)) {
      const double h = 1e-5;
      const Vec2 ex{h, 0}, ey{0, h};
      const Vec2 fd{(s.eval(x + ex) - s.eval(x - ex)) / (2 * h), (s.eval(x + ey) - s.eval(x - ey)) / (2 * h)};
      const Vec2 g = s.eval_grad(x);
      EXPECT_LT(norm(g - fd), 1e-6 * std::max(1.0, norm(g))) << "k = " << k;
      const Mat2 hs = s.eval_hess(x);
      const Vec2 hx = (1.0 / (2 * h)) * (s.eval_grad(x + ex) - s.eval_grad(x - ex));
      const Vec2 hy = (1.0 / (2 * h)) * (s.eval_grad(x + ey) - s.eval_grad(x - ey));
      const double scale = std::max(1.0, std::abs(hs(0, 0)) + std::abs(hs(1, 1)));
      EXPECT_NEAR(hs(0, 0), hx.x, 1e-6 * scale);
      EXPECT_NEAR(hs(1, 0), hx.y, 1e-6 * scale);
      EXPECT_NEAR(hs(0, 1), hy.x, 1e-6 * scale);
      EXPECT_NEAR(hs(1, 1), hy.y, 1e-6 * scale);
    }
  }
}

TEST(Eval, ThinPlateHessianAtCenterRejected) {
  const auto c = random_points(10, -1, 1, 39);
  const auto s = fit(1, c, sample(c, [](const Vec2 &x) { return x.x * x.x; }));
  EXPECT_THROW((void)s.eval_hess(c[3]), InvalidArgument);
  EXPECT_NO_THROW((void)s.eval_hess({0.123456, -0.654321}));
}

TEST(Eval, OctupoleHessianConverges) {
  const Vec2 x{0.1, 0.1};
  // analytic Hessian of x^4 - 6 x^2 y^2 + y^4
  const double hxx = 12 * x.x * x.x - 12 * x.y * x.y, hxy = -24 * x.x * x.y, hyy = 12 * x.y * x.y - 12 * x.x * x.x;
  double prev = HUGE_VAL;
  for (std::size_t n : {5u, 10u, 20u}) {
    const auto m = structured_square_mesh(n);
    const auto s = fit(3, m.nodes(), sample(m.nodes(), dcfem::test::u4));
    const Mat2 h = s.eval_hess(x);
    const double err = std::abs(h(0, 0) - hxx) + std::abs(h(0, 1) - hxy) + std::abs(h(1, 1) - hyy);
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 0.1);
}

TEST(Normalization, TranslationAndScalingEquivariance) {
  const auto c = random_points(70, -1, 1, 40);
  std::vector<double> v;
  dcfem::test::Rng rng(41);
  for (std::size_t i = 0; i < c.size(); ++i) v.push_back(rng.uniform(-1, 1));
  const Vec2 shift{0.37, -12.0};
  const double scale = 0.013;
  std::vector<Vec2> moved;
  for (const auto &p : c) moved.push_back(shift + scale * p);
  for (int k : {1, 2, 3}) {
    const auto a = fit(k, c, v), b = fit(k, moved, v);
    for (const auto &x : random_points(30, -1, 1, 42)) {
      const double va = a.eval(x), vb = b.eval(shift + scale * x);
      EXPECT_NEAR(vb, va, 1e-8 * std::max(1.0, std::abs(va))) << "k = " << k;
      const Vec2 ga = a.eval_grad(x), gb = b.eval_grad(shift + scale * x);
      EXPECT_LT(norm(scale * gb - ga), 1e-8 * std::max(1.0, norm(ga))) << "k = " << k;
    }
  }
}

TEST(RbfSystem, OneFactorizationManyFits) {
  const auto m = structured_square_mesh(6);
  const RbfSystem sys(3, m.nodes());
  const auto a = sys.fit(sample(m.nodes(), dcfem::test::u3));
  const auto b = fit(3, m.nodes(), sample(m.nodes(), dcfem::test::u3));
  for (const auto &x : random_points(10, -1, 1, 43)) EXPECT_EQ(a.eval(x), b.eval(x));
  EXPECT_THROW(sys.fit(std::vector<double>(3, 0.0)), InvalidArgument);
}

TEST(ApproximationOrder, SmoothFunctionOnStructuredFamily) {
  const auto f = [](const Vec2 &x) { return std::exp(0.5 * x.x) * std::sin(1.3 * x.y + 0.2); };
  const double threshold[] = {0.0, 2.3, 2.7, 3.6};
  for (int k : {1, 2, 3}) {
    const double e1 = reconstruction_error(k, 10, f), e2 = reconstruction_error(k, 20, f);
    const double e3 = reconstruction_error(k, 40, f);
    EXPECT_GE(std::log2(e2 / e3), threshold[k]) << "k = " << k << " errors " << e1 << " " << e2 << " " << e3;
  }
}
