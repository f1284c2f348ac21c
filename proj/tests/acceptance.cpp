// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion. Criteria listed in
// known_failures are reported as FAIL but do not change the exit status.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>

#include "dcfem/dcfem.hpp"

using namespace dcfem;

namespace {

const std::filesystem::path root = DCFEM_SOURCE_DIR;
const std::set<std::string> known_failures = {"5"};

int unexpected = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const std::string &id, bool pass, const std::string &detail, double secs) {
  const bool known = known_failures.count(id) > 0;
  std::printf("criterion %-2s %s%s  %s  [%.0f s]\n", id.c_str(), pass ? "PASS" : "FAIL",
              !pass && known ? " (known)" : "", detail.c_str(), secs);
  std::fflush(stdout);
  if (!pass && !known) ++unexpected;
}

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double u3(const Vec2 &p) { return p.x * p.x * p.x - 3.0 * p.x * p.y * p.y; }
double u4(const Vec2 &p) {
  const double x2 = p.x * p.x, y2 = p.y * p.y;
  return x2 * x2 - 6.0 * x2 * y2 + y2 * y2;
}

// ---------------------------------------------------------------------------
// 1: L2 orders of primal defect correction on the structured family

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  // reference errors per level, [k-1][field][level]
  const double table[3][2][5] = {
      {{1.11e-1, 2.50e-2, 5.00e-3, 9.49e-4, 1.76e-4}, {2.26e-1, 5.45e-2, 1.13e-2, 2.19e-3, 4.15e-4}},
      {{7.79e-2, 1.25e-2, 1.78e-3, 2.39e-4, 3.13e-5}, {2.22e-1, 3.62e-2, 5.28e-3, 7.16e-4, 9.36e-5}},
      {{1.47e-2, 1.14e-3, 7.78e-5, 5.15e-6, 3.36e-7}, {1.48e-1, 1.11e-2, 8.07e-4, 5.44e-5, 3.54e-6}}};
  const double orders[3] = {2.43, 2.94, 3.94};
  const double orders_u4[3] = {2.40, 2.94, 3.94};
  bool pass = true;
  std::string detail;
  for (int k = 1; k <= 3; ++k)
    for (int f = 0; f < 2; ++f) {
      const auto cfg = load_config(root / "configs" / fmt("table_u%d_k%d.ini", f + 3, k));
      QoiReport rep;
      run_study(cfg, rep);
      double worst_ratio = 1.0;
      for (std::size_t l = 0; l < rep.rows.size() && l < 5; ++l) {
        const double r = rep.rows[l].true_error / table[k - 1][f][l];
        worst_ratio = std::max(worst_ratio, std::max(r, 1.0 / r));
      }
      const double order = rep.rows.back().order;
      const double target = f == 0 ? orders[k - 1] : orders_u4[k - 1];
      const bool ok = rep.rows.size() == 5 && std::abs(order - target) <= 0.15 && worst_ratio <= 3.0;
      pass &= ok;
      detail += fmt("k%d/u%d order %.2f (%.2f) x%.2f%s; ", k, f + 3, order, target, worst_ratio, ok ? "" : " !");
    }
  const double secs = seconds_since(t0);
  pass &= secs < 300.0;
  report("1", pass, detail, secs);
}

// ---------------------------------------------------------------------------
// 2: analytic Fourier coefficients

void criterion_2() {
  const auto t0 = std::chrono::steady_clock::now();
  FourierSpec s3{3, 0.2, {0, 0}, Parity::normal}, s4{4, 0.2, {0, 0}, Parity::normal};
  const double f3 = fourier_line(s3, u3), f4 = fourier_line(s4, u4);
  const double e3 = std::abs(f3 - 0.008), e4 = std::abs(f4 - 0.0016);
  report("2", e3 <= 1e-10 && e4 <= 1e-10, fmt("F3 %.15f (err %.1e), F4 %.15f (err %.1e)", f3, e3, f4, e4),
         seconds_since(t0));
}

// ---------------------------------------------------------------------------
// 3, 4, 5: F_3 of u_3 on the circle-aligned family

struct FourierLevel {
  std::size_t nodes;
  double raw, reconstructed, corrected; // errors exact - F
  double estimate, boundary, truth;     // truth: volume functional of u - reconstruction
};

std::vector<FourierLevel> fourier_family(int k, int levels) {
  const FourierSpec spec{3, 0.2, {0, 0}, Parity::normal};
  const double exact = 0.008;
  const auto g0 = fourier_volume_density(spec);
  const LineQuadratureOptions line{1e-10};
  std::vector<FourierLevel> out;
  TriMesh m = load_msh(root / "data" / "square_circle.msh");
  for (int l = 0; l < levels; ++l) {
    if (l > 0) m = uniform_refine_aligned(m, {0, 0}, 0.2);
    const auto mesh = std::make_shared<const TriMesh>(m);
    const Problem p = linear_problem(mesh, 1.0, u3);
    const auto sol = solve(p);
    const auto c = primal_correct(sol, k);
    const PointLocator loc(*mesh);
    FourierLevel r{};
    r.nodes = mesh->num_nodes();
    r.raw = exact - fourier_line(spec, fe_evaluator(sol.u, loc), line);
    r.reconstructed = exact - fourier_line(spec, [&](const Vec2 &x) { return c.base_reconstruction.eval(x); }, line);
    r.corrected = exact - fourier_line(spec, [&](const Vec2 &x) { return c.reconstruction.eval(x); }, line);
    const auto adj = solve_adjoint(c, g0);
    r.boundary = boundary_term(p, sol, adj, c);
    r.estimate = error_estimate(p, sol, adj, c) + r.boundary;
    std::vector<std::size_t> disk;
    for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
      const auto v = mesh->vertices(t);
      if (norm((1.0 / 3.0) * (v[0] + v[1] + v[2])) < 0.2) disk.push_back(t);
    }
    r.truth = integrate_subdivided(
        *mesh, disk, [&](std::size_t, const Vec2 &x) { return g0(x) * (u3(x) - c.reconstruction.eval(x)); }, 6, 4);
    std::printf("    k=%d level %d N=%zu raw %.3e recon %.3e corr %.3e est %.3e B %.3e truth %.3e\n", k, l, r.nodes,
                r.raw, r.reconstructed, r.corrected, r.estimate, r.boundary, r.truth);
    std::fflush(stdout);
    out.push_back(r);
  }
  return out;
}

void criteria_3_4_5() {
  const auto t0 = std::chrono::steady_clock::now();
  const int levels = 4;
  const auto k2 = fourier_family(2, levels);
  const auto k3 = fourier_family(3, levels);
  const double secs = seconds_since(t0);

  const double ratio2 = std::abs(k2.back().raw / k2.back().corrected);
  const double ratio3 = std::abs(k3.back().raw / k3.back().corrected);
  report("3", ratio2 >= 10.0 && ratio3 >= 10.0 && secs < 600.0,
         fmt("finest uncorrected/corrected: k=2 %.1f, k=3 %.1f", ratio2, ratio3), secs);

  auto order = [](double a, double b) { return std::log2(std::abs(a) / std::abs(b)); };
  const auto &a = k3[levels - 2], &b = k3[levels - 1];
  const double gap = order(a.reconstructed, b.reconstructed) - order(a.raw, b.raw);
  report("4a", gap < 0.3,
         fmt("reconstruction-only order %.2f vs P1 %.2f (gap %.2f)", order(a.reconstructed, b.reconstructed),
             order(a.raw, b.raw), gap),
         0.0);

  const double eff_a = a.estimate / a.truth, eff_b = b.estimate / b.truth;
  const bool in_band = eff_a >= 0.5 && eff_a <= 2.0 && eff_b >= 0.5 && eff_b <= 2.0;
  report("4b", in_band && std::abs(eff_b - 1.0) < std::abs(eff_a - 1.0),
         fmt("k=3 effectivity on the two finest meshes %.3f, %.3f", eff_a, eff_b), 0.0);

  double worst = 0.0;
  for (const auto *family : {&k2, &k3})
    for (const auto &r : *family) worst = std::max(worst, std::abs(r.boundary / (r.estimate - r.boundary)));
  report("5", worst <= 0.1, fmt("max |boundary_term| / |error_estimate| = %.3f (limit 0.1)", worst), 0.0);
}

// ---------------------------------------------------------------------------
// 6: property suites

void criterion_6() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(20241016);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  auto point = [&] { return Vec2{unif(gen), unif(gen)}; };
  std::string failed;
  auto check = [&](const char *name, bool ok) {
    if (!ok) failed += std::string(failed.empty() ? "" : ", ") + name;
  };

  // RBF polynomial reproduction and moment conditions
  std::vector<Vec2> centers(60);
  for (auto &c : centers) c = point();
  {
    double worst = 0.0, moments = 0.0;
    for (int k = 1; k <= 3; ++k) {
      const auto q = [k](const Vec2 &x) { return 0.5 + 2.0 * x.x - x.y + (k == 3 ? 0.7 * x.x * x.y - x.y * x.y : 0.0); };
      std::vector<double> v;
      for (const auto &c : centers) v.push_back(q(c));
      const auto s = fit(k, centers, v);
      for (int i = 0; i < 100; ++i) {
        const Vec2 x = point();
        worst = std::max(worst, std::abs(s.eval(x) - q(x)));
      }
      std::vector<double> noise;
      for (std::size_t i = 0; i < centers.size(); ++i) noise.push_back(unif(gen));
      moments = std::max(moments, fit(k, centers, noise).moment_residual());
    }
    check("rbf reproduction", worst <= 1e-9);
    check("moment conditions", moments <= 1e-9);
  }
  // RBF derivatives against central differences
  {
    std::vector<double> v;
    for (const auto &c : centers) v.push_back(std::sin(2.0 * c.x) * std::cos(c.y));
    double worst = 0.0;
    for (int k = 2; k <= 3; ++k) {
      const auto s = fit(k, centers, v);
      for (int i = 0; i < 20; ++i) {
        const Vec2 x = 0.9 * point();
        const double h = 1e-5;
        const Vec2 ex{h, 0}, ey{0, h};
        const Vec2 g = s.eval_grad(x);
        const Vec2 fd{(s.eval(x + ex) - s.eval(x - ex)) / (2 * h), (s.eval(x + ey) - s.eval(x - ey)) / (2 * h)};
        worst = std::max(worst, norm(g - fd) / std::max(1.0, norm(g)));
        const Mat2 hs = s.eval_hess(x);
        const Vec2 hx = (1.0 / (2 * h)) * (s.eval_grad(x + ex) - s.eval_grad(x - ex));
        const Vec2 hy = (1.0 / (2 * h)) * (s.eval_grad(x + ey) - s.eval_grad(x - ey));
        const double scale = std::max(1.0, std::abs(hs(0, 0)) + std::abs(hs(1, 1)));
        worst = std::max({worst, std::abs(hs(0, 0) - hx.x) / scale, std::abs(hs(1, 0) - hx.y) / scale,
                          std::abs(hs(0, 1) - hy.x) / scale, std::abs(hs(1, 1) - hy.y) / scale});
      }
    }
    check("rbf derivatives", worst < 1e-6);
  }
  // patch test, zero correction and symmetry on both fixtures
  for (const char *name : {"square_circle.msh", "c_magnet.msh"}) {
    const auto mesh = std::make_shared<const TriMesh>(load_msh(root / "data" / name));
    const auto g = [](const Vec2 &x) { return 0.3 - 1.7 * x.x + 2.2 * x.y; };
    const auto sol = solve(linear_problem(mesh, 2.0, g));
    double patch = 0.0;
    for (std::size_t i = 0; i < mesh->num_nodes(); ++i) patch = std::max(patch, std::abs(sol.u[i] - g(mesh->node(i))));
    check("patch test", patch <= 1e-10);
    const auto c = primal_correct(sol, 2);
    double corr = 0.0;
    for (double e : c.correction.nodal()) corr = std::max(corr, std::abs(e));
    check("zero correction", corr <= 1e-9);
    check("stiffness symmetry", sol.op.interior.asymmetry() <= 1e-14 * sol.op.interior.max_abs());
  }
  // volume vs line Fourier pairing on random harmonic polynomials
  {
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> a(13);
      for (auto &v : a) v = unif(gen);
      const auto u = [&a](const Vec2 &x) {
        std::complex<double> z(x.x, x.y), p = 1.0;
        double s = a[0];
        for (int m = 1; m <= 6; ++m) {
          p *= z;
          s += a[2 * m - 1] * p.real() + a[2 * m] * p.imag();
        }
        return s;
      };
      const FourierSpec spec{1 + trial % 6, 0.2, {0, 0}, trial % 2 ? Parity::skew : Parity::normal};
      const auto g0 = fourier_volume_density(spec);
      // polar product rule: Gauss-Legendre in r, trapezoid in phi
      const auto gl = gauss_legendre(16);
      double vol = 0.0;
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double r = 0.1 * (gl.nodes[i] + 1.0);
        double ring = 0.0;
        for (int j = 0; j < 64; ++j) {
          const double phi = 2.0 * M_PI * j / 64;
          const Vec2 x{r * std::cos(phi), r * std::sin(phi)};
          ring += g0(x) * u(x);
        }
        vol += 0.1 * gl.weights[i] * r * ring * 2.0 * M_PI / 64;
      }
      worst = std::max(worst, std::abs(vol - fourier_line(spec, u)));
    }
    check("volume-line pairing", worst <= 1e-9);
  }
  // linearization tensor identity
  {
    double worst = 0.0;
    const auto iron = ReluctivityModel::brauer(388.0, 0.3774, 396.2);
    for (int i = 0; i < 200; ++i) {
      const Vec2 r = 2.0 * point();
      const Mat2 l = nu_l_tensor(iron, r), d = differential_tensor(iron, flux_density(r));
      const double s = std::max({std::abs(l(0, 0)), std::abs(l(0, 1)), std::abs(l(1, 1))});
      worst = std::max({worst, std::abs(l(0, 0) - d(1, 1)) / s, std::abs(l(0, 1) + d(1, 0)) / s,
                        std::abs(l(1, 0) + d(0, 1)) / s, std::abs(l(1, 1) - d(0, 0)) / s});
    }
    check("tensor identity", worst <= 1e-12);
  }
  // F_tau of a uniform field
  {
    const auto mesh = structured_square_mesh(8);
    std::vector<double> v;
    for (const auto &p : mesh.nodes()) v.push_back(0.4 * p.x - 1.3 * p.y);
    check("ftau uniform", std::abs(field_gradient(fit(3, mesh.nodes(), v), mesh)) <= 1e-9);
  }
  report("6", failed.empty(), failed.empty() ? "all property checks within tolerance" : "failed: " + failed,
         seconds_since(t0));
}

// ---------------------------------------------------------------------------
// 7: adaptive pipeline on the C-magnet fixture

void criterion_7() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load_config(root / "configs" / "c_magnet_adaptive.ini");
  QoiReport rep;
  run_adaptive(cfg, rep);
  std::vector<double> eta, ftau;
  double reference = std::nan("");
  for (const auto &r : rep.rows) {
    if (r.qoi == "eta" && (r.level == 10 || r.level == 20 || r.level == 30)) eta.push_back(r.eta_rel);
    if (r.qoi == "ftau") ftau.push_back(r.corrected);
    if (r.qoi == "ftau_rich") reference = r.corrected;
  }
  bool decreasing = eta.size() == 3;
  for (std::size_t i = 1; i < eta.size(); ++i) decreasing &= eta[i] < eta[i - 1];
  const double rel = ftau.empty() ? HUGE_VAL : std::abs(ftau.back() / reference - 1.0);
  const double secs = seconds_since(t0);
  report("7", decreasing && rel < 0.01 && secs < 900.0,
         fmt("eta_rel %.4f/%.4f/%.4f, F_tau %.6f vs reference %.6f (%.3f%%)", eta.size() > 0 ? eta[0] : NAN,
             eta.size() > 1 ? eta[1] : NAN, eta.size() > 2 ? eta[2] : NAN, ftau.empty() ? NAN : ftau.back(),
             reference, 100.0 * rel),
         secs);
}

// ---------------------------------------------------------------------------
// 8: Newton on the Brauer model

void criterion_8() {
  const auto t0 = std::chrono::steady_clock::now();
  Problem p;
  p.mesh = std::make_shared<const TriMesh>(structured_square_mesh(8, Box{{0, 0}, {0.1, 0.1}}));
  p.materials.emplace(1, ReluctivityModel::brauer(388.0, 0.3774, 396.2));
  p.source = [](int, const Vec2 &) { return 1e5; };
  const auto sol = solve(p);
  std::vector<double> r;
  for (double v : sol.newton.residuals)
    if (v > 1e-13) r.push_back(v);
  double order = 0.0;
  if (r.size() >= 3) {
    const std::size_t j = r.size() - 2;
    order = std::log(r[j + 1] / r[j]) / std::log(r[j] / r[j - 1]);
  }
  const auto lin = solve(linear_problem(std::make_shared<const TriMesh>(structured_square_mesh(10)), 1.0, u3));
  report("8", order >= 1.8 && lin.newton.iterations == 1,
         fmt("Brauer order %.2f over the last 3 residuals (%d iterations), linear run %d step(s)", order,
             sol.newton.iterations, lin.newton.iterations),
         seconds_since(t0));
}

} // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::pair<const char *, std::function<void()>> steps[] = {
      {"1", criterion_1}, {"2", criterion_2}, {"3-5", criteria_3_4_5}, {"6", criterion_6}, {"7", criterion_7},
      {"8", criterion_8}};
  for (const auto &[id, run] : steps) {
    try {
      run();
    } catch (const std::exception &e) {
      std::printf("criterion %-2s FAIL  exception: %s\n", id, e.what());
      ++unexpected;
    }
  }
  std::printf("total %.0f s, %d unexpected failure(s)\n", seconds_since(t0), unexpected);
  return unexpected == 0 ? 0 : 1;
}
