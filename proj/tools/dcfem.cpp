// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "dcfem/dcfem.hpp"

namespace {

enum Exit { ok = 0, config_failure = 1, numerical_failure = 2 };

struct Outputs {
  std::string csv;
  std::string vtk_dir;
};

void write_outputs(const dcfem::QoiReport &report, const dcfem::StudyArtifacts &art, const Outputs &out) {
  report.write_table(std::cout);
  std::cout.flush();
  if (!out.csv.empty()) {
    std::ofstream f(out.csv);
    if (!f) throw dcfem::Error("cannot write " + out.csv);
    report.write_csv(f);
  }
  if (!out.vtk_dir.empty() && art.mesh) {
    std::filesystem::create_directories(out.vtk_dir);
    std::vector<dcfem::VtkField> fields{{"u_h", art.u_h, false}};
    if (!art.corrected.empty()) fields.push_back({"u_corrected", art.corrected, false});
    if (!art.eta.empty()) fields.push_back({"eta", art.eta, true});
    dcfem::emit_vtk(std::filesystem::path(out.vtk_dir) / "solution.vtk", *art.mesh, fields);
  }
}

int run(const std::string &config_path, bool adaptive, const Outputs &out) {
  dcfem::StudyConfig cfg;
  try {
    cfg = dcfem::load_config(config_path);
    if (adaptive != cfg.adaptive)
      throw dcfem::ConfigError(std::string("config refinement mode is ") + (cfg.adaptive ? "adaptive" : "uniform") +
                               "; use the '" + (cfg.adaptive ? "adaptive" : "study") + "' subcommand");
  } catch (const dcfem::Error &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_failure;
  }
  dcfem::QoiReport report;
  dcfem::StudyArtifacts art;
  auto progress = [](const dcfem::ReportRow &r) {
    std::fprintf(stderr, "[%s] level %d: %zu nodes\n", r.qoi.c_str(), r.level, r.nodes);
  };
  int code = ok;
  try {
    if (adaptive)
      dcfem::run_adaptive(cfg, report, &art, progress);
    else
      dcfem::run_study(cfg, report, &art, progress);
  } catch (const dcfem::ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    code = config_failure;
  } catch (const dcfem::InvalidArgument &e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    code = config_failure;
  } catch (const dcfem::ParseError &e) {
    std::cerr << "mesh error: " << e.what() << '\n';
    code = config_failure;
  } catch (const std::exception &e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    code = numerical_failure;
  }
  try {
    write_outputs(report, art, out);
  } catch (const std::exception &e) {
    std::cerr << "output failed: " << e.what() << '\n';
    if (code == ok) code = numerical_failure;
  }
  if (code != ok && !report.rows.empty()) std::cerr << "partial report: " << report.rows.size() << " rows\n";
  return code;
}

int mesh_info(const std::string &path) {
  dcfem::TriMesh mesh;
  try {
    mesh = dcfem::load_msh(path);
  } catch (const dcfem::Error &e) {
    std::cerr << "mesh error: " << e.what() << '\n';
    return config_failure;
  }
  std::map<int, std::size_t> count;
  for (int tag : mesh.tri_region()) ++count[tag];
  std::printf("nodes           %zu\n", mesh.num_nodes());
  std::printf("triangles       %zu\n", mesh.num_triangles());
  std::printf("boundary edges  %zu\n", mesh.boundary_edges().size());
  std::printf("h (max diam)    %.6g\n", dcfem::mesh_size(mesh));
  std::printf("min angle (deg) %.4g\n", dcfem::min_angle(mesh) * 180.0 / 3.141592653589793);
  std::printf("area            %.6g\n", dcfem::total_area(mesh));
  for (const auto &[tag, n] : count)
    std::printf("region %-8d %zu triangles, area %.6g\n", tag, n, dcfem::region_area(mesh, tag));
  return ok;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"dcfem: 2D magnetostatic FEM with RBF defect correction"};
  app.require_subcommand(1);
  Outputs out;
  unsigned seed = 0;
  bool deterministic = false;
  app.add_option("--csv", out.csv, "write the report as CSV");
  app.add_option("--vtk", out.vtk_dir, "write solution.vtk of the last mesh into this directory");
  app.add_option("--seed", seed, "seed for randomized checks (the solver itself draws no random numbers)");
  app.add_flag("--deterministic", deterministic, "fixed accumulation order (always the case in this build)");

  std::string config, mesh_path;
  auto *study = app.add_subcommand("study", "uniform refinement study");
  study->add_option("config", config, "INI config")->required();
  auto *adaptive = app.add_subcommand("adaptive", "global-adaptive refinement run");
  adaptive->add_option("config", config, "INI config")->required();
  auto *info = app.add_subcommand("mesh-info", "summary of a Gmsh .msh file");
  info->add_option("file", mesh_path, ".msh file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? ok : config_failure;
  }
  (void)seed;
  (void)deterministic;
  if (*info) return mesh_info(mesh_path);
  return run(config, static_cast<bool>(*adaptive), out);
}
