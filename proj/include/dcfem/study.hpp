// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "dcfem/adjoint.hpp"
#include "dcfem/defect.hpp"
#include "dcfem/error.hpp"
#include "dcfem/estimator.hpp"
#include "dcfem/mesh.hpp"
#include "dcfem/mesh_io.hpp"
#include "dcfem/problem.hpp"
#include "dcfem/qoi.hpp"

namespace dcfem {

class ConfigError : public Error {
public:
  using Error::Error;
};

/// Polynomial sum of c x^i y^j. Named fields u3, u4 and zero are shorthands.
struct AnalyticField {
  struct Term {
    double c;
    int i, j;
  };
  std::string name = "zero";
  std::vector<Term> terms;

  [[nodiscard]] double operator()(const Vec2 &x) const {
    double s = 0.0;
    for (const auto &t : terms) s += t.c * std::pow(x.x, t.i) * std::pow(x.y, t.j);
    return s;
  }
  [[nodiscard]] bool is_zero() const { return terms.empty(); }

  static AnalyticField named(const std::string &name, const std::string &polynomial = {}) {
    AnalyticField f;
    f.name = name;
    if (name == "zero") return f;
    if (name == "u3") {
      f.terms = {{1.0, 3, 0}, {-3.0, 1, 2}};
    } else if (name == "u4") {
      f.terms = {{1.0, 4, 0}, {-6.0, 2, 2}, {1.0, 0, 4}};
    } else if (name == "poly") {
      // "c i j; c i j; ..."
      std::stringstream all(polynomial);
      std::string item;
      while (std::getline(all, item, ';')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        std::istringstream in(item);
        Term t{};
        if (!(in >> t.c >> t.i >> t.j) || t.i < 0 || t.j < 0)
          throw ConfigError("polynomial term '" + item + "' is not 'coefficient power_x power_y'");
        f.terms.push_back(t);
      }
      if (f.terms.empty()) throw ConfigError("boundary = poly needs a nonempty 'polynomial' key");
    } else {
      throw ConfigError("unknown boundary field '" + name + "' (u3, u4, poly, zero)");
    }
    return f;
  }
};

struct StudyConfig {
  // problem
  std::filesystem::path mesh_file; // empty: structured square family
  std::size_t structured_n = 5;
  Box box{};
  AnalyticField boundary{};
  bool exact_solution = false; // the boundary field solves the problem everywhere
  std::map<int, ReluctivityModel> materials;
  std::optional<ReluctivityModel> default_material = ReluctivityModel::linear(1.0);
  std::map<int, double> sources;
  double default_source = 0.0;
  // correction
  int k = 3;
  int rounds = 1;
  CorrectionOptions correction{};
  // refinement
  bool adaptive = false;
  int levels = 4;
  std::optional<std::pair<Vec2, double>> align; // circle kept resolved under uniform refinement
  double gamma = 0.5;
  int n_ref = 10;
  std::vector<int> report_at;
  int reference_refinements = 0;
  // qoi
  bool l2 = false;
  std::optional<FourierSpec> fourier;
  bool adjoint = false;
  LineQuadratureOptions line{1e-10};
  int ftau_region = 0;
  Vec2 ftau_direction{1.0, 0.0};
  // solver
  NewtonOptions newton{};

  void validate() const {
    if (k < 1 || k > 3) throw ConfigError("k must be 1, 2 or 3");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
    if (levels < 1) throw ConfigError("levels must be at least 1");
    if (n_ref < 0) throw ConfigError("n_ref must be nonnegative");
    if (rounds < 1) throw ConfigError("rounds must be at least 1");
    if (!mesh_file.empty() && !std::filesystem::exists(mesh_file))
      throw ConfigError("mesh file " + mesh_file.string() + " does not exist");
    if (mesh_file.empty() && structured_n == 0) throw ConfigError("structured_n must be positive");
    if (adjoint && !fourier) throw ConfigError("adjoint estimate needs a Fourier QoI");
    if (adaptive && ftau_region == 0 && !fourier) throw ConfigError("adaptive run without a QoI");
    for (int r : report_at)
      if (r < 0 || r > n_ref) throw ConfigError("report_at entries must lie in 0..n_ref");
  }
};

namespace detail {

inline std::vector<double> numbers(const std::string &s, const std::string &key, std::size_t expect) {
  std::istringstream in(s);
  std::vector<double> v;
  double x;
  while (in >> x) v.push_back(x);
  if (!in.eof() || (expect && v.size() != expect))
    throw ConfigError("key '" + key + "': expected " + (expect ? std::to_string(expect) + " " : "") + "numbers, got '" +
                      s + "'");
  return v;
}

inline ReluctivityModel parse_material(const std::string &s) {
  std::istringstream in(s);
  std::string kind;
  in >> kind;
  std::vector<double> v;
  double x;
  while (in >> x) v.push_back(x);
  if (kind == "nu" && v.size() == 1) return ReluctivityModel::linear(v[0]);
  if (kind == "mu_r" && v.size() == 1) return ReluctivityModel::linear_mu_r(v[0]);
  if (kind == "brauer" && v.size() == 3) return ReluctivityModel::brauer(v[0], v[1], v[2]);
  throw ConfigError("material '" + s + "' is not 'nu <v>', 'mu_r <v>' or 'brauer <k1> <k2> <k3>'");
}

inline bool parse_bool(const std::string &s, const std::string &key) {
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + s + "'");
}

template <typename T>
T parse_number(const std::string &s, const std::string &key) {
  std::istringstream in(s);
  T v{};
  if (!(in >> v) || !(in >> std::ws).eof()) throw ConfigError("key '" + key + "': bad number '" + s + "'");
  return v;
}

inline int parse_tag(const std::string &key, const std::string &section) {
  try {
    std::size_t pos = 0;
    const int tag = std::stoi(key, &pos);
    if (pos == key.size()) return tag;
  } catch (const std::exception &) {
  }
  throw ConfigError("[" + section + "]: key '" + key + "' is neither 'default' nor a region tag");
}

} // namespace detail

/// Reads the INI-style configuration. Relative mesh paths resolve against base_dir.
inline StudyConfig parse_config(std::istream &in, const std::filesystem::path &base_dir = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error &e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  static const std::map<std::string, std::set<std::string>> known = {
      {"problem", {"mesh", "structured_n", "box", "boundary", "polynomial", "exact_solution"}},
      {"correction", {"k", "rounds", "quad_degree", "max_centers"}},
      {"refinement",
       {"mode", "levels", "align_center", "align_radius", "gamma", "n_ref", "report_at", "reference_refinements"}},
      {"qoi",
       {"l2", "fourier_n", "fourier_r0", "fourier_center", "fourier_parity", "adjoint", "line_tol", "ftau_region",
        "ftau_direction"}},
      {"solver", {"newton_tol", "newton_max_iterations", "cg_tol", "cg_max_iterations"}},
  };
  StudyConfig c;
  std::string boundary = "zero", polynomial;
  std::optional<Vec2> align_center;
  std::optional<double> align_radius;
  int fourier_n = 0;
  FourierSpec fs;
  for (const auto &[section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
    if (section == "material" || section == "source") {
      for (const auto &[key, node] : body) {
        const std::string v = node.data();
        if (section == "material") {
          if (key == "default")
            c.default_material = v == "none" ? std::nullopt : std::optional(detail::parse_material(v));
          else
            c.materials.insert_or_assign(detail::parse_tag(key, section), detail::parse_material(v));
        } else {
          const double j = detail::parse_number<double>(v, key);
          if (key == "default")
            c.default_source = j;
          else
            c.sources[detail::parse_tag(key, section)] = j;
        }
      }
      continue;
    }
    const auto sec = known.find(section);
    if (sec == known.end()) throw ConfigError("unknown section [" + section + "]");
    for (const auto &[key, node] : body) {
      if (!sec->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
      const std::string v = node.data();
      const std::string name = section + "." + key;
      if (name == "problem.mesh") {
        c.mesh_file = v.empty() ? std::filesystem::path{} : std::filesystem::path(v);
        if (!c.mesh_file.empty() && c.mesh_file.is_relative() && !base_dir.empty()) c.mesh_file = base_dir / c.mesh_file;
      } else if (name == "problem.structured_n") {
        c.structured_n = detail::parse_number<std::size_t>(v, key);
      } else if (name == "problem.box") {
        const auto b = detail::numbers(v, key, 4);
        c.box = Box{{b[0], b[1]}, {b[2], b[3]}};
      } else if (name == "problem.boundary") {
        boundary = v;
      } else if (name == "problem.polynomial") {
        polynomial = v;
      } else if (name == "problem.exact_solution") {
        c.exact_solution = detail::parse_bool(v, key);
      } else if (name == "correction.k") {
        c.k = detail::parse_number<int>(v, key);
      } else if (name == "correction.rounds") {
        c.rounds = detail::parse_number<int>(v, key);
      } else if (name == "correction.quad_degree") {
        c.correction.quad_degree = detail::parse_number<int>(v, key);
      } else if (name == "correction.max_centers") {
        c.correction.max_centers = detail::parse_number<std::size_t>(v, key);
      } else if (name == "refinement.mode") {
        if (v != "uniform" && v != "adaptive") throw ConfigError("refinement mode must be uniform or adaptive");
        c.adaptive = v == "adaptive";
      } else if (name == "refinement.levels") {
        c.levels = detail::parse_number<int>(v, key);
      } else if (name == "refinement.align_center") {
        const auto p = detail::numbers(v, key, 2);
        align_center = Vec2{p[0], p[1]};
      } else if (name == "refinement.align_radius") {
        align_radius = detail::parse_number<double>(v, key);
      } else if (name == "refinement.gamma") {
        c.gamma = detail::parse_number<double>(v, key);
      } else if (name == "refinement.n_ref") {
        c.n_ref = detail::parse_number<int>(v, key);
      } else if (name == "refinement.report_at") {
        for (double x : detail::numbers(v, key, 0)) c.report_at.push_back(static_cast<int>(x));
      } else if (name == "refinement.reference_refinements") {
        c.reference_refinements = detail::parse_number<int>(v, key);
      } else if (name == "qoi.l2") {
        c.l2 = detail::parse_bool(v, key);
      } else if (name == "qoi.fourier_n") {
        fourier_n = detail::parse_number<int>(v, key);
      } else if (name == "qoi.fourier_r0") {
        fs.r0 = detail::parse_number<double>(v, key);
      } else if (name == "qoi.fourier_center") {
        const auto p = detail::numbers(v, key, 2);
        fs.center = {p[0], p[1]};
      } else if (name == "qoi.fourier_parity") {
        if (v != "normal" && v != "skew") throw ConfigError("fourier_parity must be normal or skew");
        fs.parity = v == "normal" ? Parity::normal : Parity::skew;
      } else if (name == "qoi.adjoint") {
        c.adjoint = detail::parse_bool(v, key);
      } else if (name == "qoi.line_tol") {
        c.line.tol = detail::parse_number<double>(v, key);
      } else if (name == "qoi.ftau_region") {
        c.ftau_region = detail::parse_number<int>(v, key);
      } else if (name == "qoi.ftau_direction") {
        const auto p = detail::numbers(v, key, 2);
        c.ftau_direction = {p[0], p[1]};
      } else if (name == "solver.newton_tol") {
        c.newton.tol = detail::parse_number<double>(v, key);
      } else if (name == "solver.newton_max_iterations") {
        c.newton.max_iterations = detail::parse_number<int>(v, key);
      } else if (name == "solver.cg_tol") {
        c.newton.linear.tol = detail::parse_number<double>(v, key);
        c.correction.linear.tol = c.newton.linear.tol;
      } else if (name == "solver.cg_max_iterations") {
        c.newton.linear.maxit = detail::parse_number<int>(v, key);
        c.correction.linear.maxit = c.newton.linear.maxit;
      }
    }
  }
  c.boundary = AnalyticField::named(boundary, polynomial);
  if (align_center.has_value() != align_radius.has_value())
    throw ConfigError("align_center and align_radius go together");
  if (align_center) c.align = std::pair{*align_center, *align_radius};
  if (fourier_n > 0) {
    fs.n = fourier_n;
    try {
      fs.validate();
    } catch (const InvalidArgument &e) {
      throw ConfigError(e.what());
    }
    c.fourier = fs;
  }
  if (c.report_at.empty()) c.report_at.push_back(c.n_ref);
  c.validate();
  return c;
}

inline StudyConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, path.parent_path());
}

/// One row per QoI and mesh. Cells that do not apply stay NaN.
struct ReportRow {
  static constexpr double none = std::numeric_limits<double>::quiet_NaN();
  std::string qoi;
  int level = 0;
  double h = none;
  std::size_t nodes = 0, dofs = 0;
  double raw = none, reconstructed = none, corrected = none;
  double estimate = none, boundary_term = none;
  double eta_rel = none, true_error = none, order = none;
};

inline constexpr const char *report_format = "dcfem-report-v1";

struct QoiReport {
  std::vector<ReportRow> rows;

  /// order_l = log2(|err_{l-1}| / |err_l|) between consecutive rows of the same QoI.
  void compute_orders() {
    std::map<std::string, const ReportRow *> last;
    for (auto &r : rows) {
      r.order = ReportRow::none;
      const auto it = last.find(r.qoi);
      if (it != last.end()) {
        const double a = std::abs(it->second->true_error), b = std::abs(r.true_error);
        if (a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b)) r.order = std::log2(a / b);
      }
      last[r.qoi] = &r;
    }
  }

  void write_csv(std::ostream &out) const {
    out << "# " << report_format << '\n';
    out << "qoi,level,h,nodes,dofs,raw,reconstructed,corrected,estimate,boundary_term,eta_rel,true_error,order\n";
    auto cell = [&out](double v) {
      out << ',';
      if (std::isnan(v)) return;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.10e", v);
      out << buf;
    };
    for (const auto &r : rows) {
      out << r.qoi << ',' << r.level;
      cell(r.h);
      out << ',' << r.nodes << ',' << r.dofs;
      for (double v : {r.raw, r.reconstructed, r.corrected, r.estimate, r.boundary_term, r.eta_rel, r.true_error})
        cell(v);
      if (std::isnan(r.order)) {
        out << ",-";
      } else {
        char buf[32];
        std::snprintf(buf, sizeof buf, ",%.4f", r.order);
        out << buf;
      }
      out << '\n';
    }
  }

  void write_table(std::ostream &out) const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-8s %5s %9s %8s %12s %12s %12s %12s %9s %11s %7s\n", "qoi", "level", "h", "nodes",
                  "raw", "recon", "corrected", "estimate", "eta_rel", "error", "order");
    out << buf;
    auto f = [](double v, const char *fmt) {
      char b[32];
      if (std::isnan(v)) return std::string("-");
      std::snprintf(b, sizeof b, fmt, v);
      return std::string(b);
    };
    for (const auto &r : rows) {
      std::snprintf(buf, sizeof buf, "%-8s %5d %9s %8zu %12s %12s %12s %12s %9s %11s %7s\n", r.qoi.c_str(), r.level,
                    f(r.h, "%.4f").c_str(), r.nodes, f(r.raw, "%.5e").c_str(), f(r.reconstructed, "%.5e").c_str(),
                    f(r.corrected, "%.5e").c_str(), f(r.estimate, "%.3e").c_str(), f(r.eta_rel, "%.4f").c_str(),
                    f(r.true_error, "%.3e").c_str(), f(r.order, "%.2f").c_str());
      out << buf;
    }
  }
};

/// Fields of the last solved mesh, for VTK output.
struct StudyArtifacts {
  std::shared_ptr<const TriMesh> mesh;
  std::vector<double> u_h;
  std::vector<double> corrected; // u_h + e_h where a global correction ran
  std::vector<double> eta;       // per triangle
};

inline Problem build_problem(const StudyConfig &c, std::shared_ptr<const TriMesh> mesh) {
  Problem p;
  p.mesh = mesh;
  for (int tag : mesh->tri_region()) {
    if (p.materials.count(tag)) continue;
    const auto it = c.materials.find(tag);
    if (it != c.materials.end())
      p.materials.emplace(tag, it->second);
    else if (c.default_material)
      p.materials.emplace(tag, *c.default_material);
    else
      throw ConfigError("no material for region " + std::to_string(tag));
  }
  bool any_source = c.default_source != 0.0;
  for (const auto &[tag, j] : c.sources) any_source |= j != 0.0;
  if (any_source)
    p.source = [s = c.sources, d = c.default_source](int region, const Vec2 &) {
      const auto it = s.find(region);
      return it == s.end() ? d : it->second;
    };
  if (!c.boundary.is_zero()) p.dirichlet = c.boundary;
  return p;
}

namespace detail {

inline ReportRow base_row(const std::string &qoi, int level, const TriMesh &mesh, const PrimalSolution &sol,
                          const ErrorEstimate &est) {
  ReportRow r;
  r.qoi = qoi;
  r.level = level;
  r.h = mesh_size(mesh);
  r.nodes = mesh.num_nodes();
  r.dofs = sol.dofs.interior().size();
  r.eta_rel = est.eta_rel;
  return r;
}

inline double ftau_local(const StudyConfig &c, const Problem &p, const PrimalSolution &sol) {
  const auto corrected = local_correct(p, sol, c.ftau_region, c.k, c.correction, c.rounds);
  return field_gradient(corrected.reconstruction, corrected.mesh(), c.ftau_direction);
}

inline TriMesh initial_mesh(const StudyConfig &c) {
  return c.mesh_file.empty() ? structured_square_mesh(c.structured_n, c.box) : load_msh(c.mesh_file);
}

} // namespace detail

/// Uniform family: the structured square with n * 2^l subdivisions, or the mesh
/// file refined l times (circle-aligned when configured). Rows are appended to
/// `report` as soon as they are known, so a failure leaves a partial report.
inline void run_study(const StudyConfig &c, QoiReport &report, StudyArtifacts *artifacts = nullptr,
                      const std::function<void(const ReportRow &)> &on_row = {}) {
  c.validate();
  auto push = [&](ReportRow r) {
    report.rows.push_back(std::move(r));
    report.compute_orders();
    if (on_row) on_row(report.rows.back());
  };
  double fourier_exact = ReportRow::none;
  std::function<double(const Vec2 &)> g0;
  if (c.fourier) {
    if (c.exact_solution) fourier_exact = fourier_line(*c.fourier, c.boundary, LineQuadratureOptions{1e-13});
    g0 = fourier_volume_density(*c.fourier);
  }
  TriMesh current = detail::initial_mesh(c);
  for (int level = 0; level < c.levels; ++level) {
    if (level > 0) {
      if (c.mesh_file.empty())
        current = structured_square_mesh(c.structured_n << level, c.box);
      else if (c.align)
        current = uniform_refine_aligned(current, c.align->first, c.align->second);
      else
        current = uniform_refine(current);
    }
    auto mesh = std::make_shared<const TriMesh>(current);
    const Problem p = build_problem(c, mesh);
    const PrimalSolution sol = solve(p, c.newton);
    const ErrorEstimate est = residual_estimate(p, sol.u);
    std::optional<CorrectedSolution> corrected;
    if (c.l2 || c.fourier) corrected = primal_correct(sol, c.k, c.correction, c.rounds);
    if (c.l2) {
      ReportRow r = detail::base_row("l2", level, *mesh, sol, est);
      if (c.exact_solution) {
        r.raw = l2_error(*mesh, sol.u, c.boundary, 6);
        r.reconstructed = l2_error(*mesh, corrected->base_reconstruction, c.boundary, 6);
        r.corrected = l2_error(*mesh, corrected->reconstruction, c.boundary, 6);
        r.true_error = r.corrected;
      }
      push(r);
    }
    if (c.fourier) {
      ReportRow r = detail::base_row("fourier", level, *mesh, sol, est);
      const PointLocator locator(*mesh);
      r.raw = fourier_line(*c.fourier, fe_evaluator(sol.u, locator), c.line);
      r.reconstructed =
          fourier_line(*c.fourier, [&](const Vec2 &x) { return corrected->base_reconstruction.eval(x); }, c.line);
      r.corrected = fourier_line(*c.fourier, [&](const Vec2 &x) { return corrected->reconstruction.eval(x); }, c.line);
      if (c.adjoint) {
        const AdjointSolution adj = solve_adjoint(*corrected, g0);
        r.boundary_term = boundary_term(p, sol, adj, *corrected);
        r.estimate = error_estimate(p, sol, adj, *corrected) + r.boundary_term;
      }
      if (c.exact_solution) r.true_error = fourier_exact - r.corrected;
      push(r);
    }
    if (c.ftau_region != 0) {
      ReportRow r = detail::base_row("ftau", level, *mesh, sol, est);
      r.corrected = detail::ftau_local(c, p, sol);
      push(r);
    }
    if (!c.l2 && !c.fourier && c.ftau_region == 0) push(detail::base_row("eta", level, *mesh, sol, est));
    if (artifacts) {
      artifacts->mesh = mesh;
      artifacts->u_h = sol.u.nodal();
      artifacts->corrected.clear();
      if (corrected) artifacts->corrected = detail::add(corrected->base.nodal(), corrected->correction.nodal());
      artifacts->eta = est.eta_per_element;
    }
  }
}

/// Global-adaptive loop: solve, estimate, mark eta_K >= gamma max eta, refine,
/// for n_ref iterations. QoIs on Omega0 are evaluated at the report_at
/// iterations. With reference_refinements >= 2 the final mesh is refined
/// uniformly and F_tau is Richardson-extrapolated from the last three values.
inline void run_adaptive(const StudyConfig &c, QoiReport &report, StudyArtifacts *artifacts = nullptr,
                         const std::function<void(const ReportRow &)> &on_row = {}) {
  c.validate();
  auto push = [&](ReportRow r) {
    report.rows.push_back(std::move(r));
    if (on_row) on_row(report.rows.back());
  };
  const std::set<int> checkpoints(c.report_at.begin(), c.report_at.end());
  TriMesh current = detail::initial_mesh(c);
  std::vector<std::size_t> ftau_rows;
  std::function<double(const Vec2 &)> g0;
  if (c.fourier) g0 = fourier_volume_density(*c.fourier);
  for (int it = 0;; ++it) {
    auto mesh = std::make_shared<const TriMesh>(current);
    const Problem p = build_problem(c, mesh);
    const PrimalSolution sol = solve(p, c.newton);
    const ErrorEstimate est = residual_estimate(p, sol.u);
    push(detail::base_row("eta", it, *mesh, sol, est));
    if (checkpoints.count(it)) {
      if (c.ftau_region != 0) {
        ReportRow r = detail::base_row("ftau", it, *mesh, sol, est);
        r.corrected = detail::ftau_local(c, p, sol);
        ftau_rows.push_back(report.rows.size());
        push(r);
      }
      if (c.fourier) {
        const auto corrected = primal_correct(sol, c.k, c.correction, c.rounds);
        ReportRow r = detail::base_row("fourier", it, *mesh, sol, est);
        const PointLocator locator(*mesh);
        r.raw = fourier_line(*c.fourier, fe_evaluator(sol.u, locator), c.line);
        r.corrected = fourier_line(*c.fourier, [&](const Vec2 &x) { return corrected.reconstruction.eval(x); }, c.line);
        push(r);
      }
    }
    if (artifacts) {
      artifacts->mesh = mesh;
      artifacts->u_h = sol.u.nodal();
      artifacts->corrected.clear();
      artifacts->eta = est.eta_per_element;
    }
    if (it == c.n_ref) break;
    current = adaptive_refine(current, mark_elements(est, c.gamma));
  }
  if (c.ftau_region == 0 || c.reference_refinements <= 0 || ftau_rows.empty() ||
      report.rows[ftau_rows.back()].level != c.n_ref)
    return;
  std::vector<double> f{report.rows[ftau_rows.back()].corrected};
  for (int l = 1; l <= c.reference_refinements; ++l) {
    current = uniform_refine(current);
    auto mesh = std::make_shared<const TriMesh>(current);
    const Problem p = build_problem(c, mesh);
    const PrimalSolution sol = solve(p, c.newton);
    const ErrorEstimate est = residual_estimate(p, sol.u);
    ReportRow r = detail::base_row("ftau_ref", l, *mesh, sol, est);
    r.corrected = detail::ftau_local(c, p, sol);
    f.push_back(r.corrected);
    push(r);
  }
  if (f.size() < 3) return;
  const double f0 = f[f.size() - 3], f1 = f[f.size() - 2], f2 = f.back();
  const double q = (f1 - f0) / (f2 - f1);
  if (!std::isfinite(q) || q == 1.0) return;
  ReportRow r;
  r.qoi = "ftau_rich";
  r.level = c.reference_refinements;
  r.corrected = f2 + (f2 - f1) / (q - 1.0);
  r.order = std::log2(std::abs(q));
  for (const std::size_t i : ftau_rows) report.rows[i].true_error = r.corrected - report.rows[i].corrected;
  push(r);
}

/// Legacy ASCII VTK unstructured grid with point and cell scalars.
struct VtkField {
  std::string name;
  std::vector<double> values;
  bool cell = false;
};

inline void write_vtk(std::ostream &out, const TriMesh &mesh, const std::vector<VtkField> &fields) {
  out << "# vtk DataFile Version 3.0\ndcfem\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_nodes() << " double\n";
  char buf[96];
  for (const auto &p : mesh.nodes()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", p.x, p.y);
    out << buf;
  }
  out << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
  for (const auto &t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << mesh.num_triangles() << '\n';
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) out << "5\n";
  for (const bool cell : {false, true}) {
    bool header = false;
    for (const auto &f : fields) {
      if (f.cell != cell) continue;
      const std::size_t n = cell ? mesh.num_triangles() : mesh.num_nodes();
      if (f.values.size() != n)
        throw InvalidArgument("vtk field '" + f.name + "' has " + std::to_string(f.values.size()) + " values, expected " +
                              std::to_string(n));
      if (!header) {
        out << (cell ? "CELL_DATA " : "POINT_DATA ") << n << '\n';
        header = true;
      }
      out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : f.values) {
        std::snprintf(buf, sizeof buf, "%.17g\n", v);
        out << buf;
      }
    }
  }
}

inline void emit_vtk(const std::filesystem::path &path, const TriMesh &mesh, const std::vector<VtkField> &fields) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_vtk(out, mesh, fields);
  if (!out) throw Error("write failed: " + path.string());
}

} // namespace dcfem
