// Command-line front end: standalone adaptation, fixed-point Poisson solves,
// convergence studies and mesh statistics reports.

#include <CLI11.hpp>
#include <iostream>
#include <sstream>

#include "anisomesh/driver.hpp"
#include "anisomesh/mesh_io.hpp"
#include "anisomesh/partition.hpp"
#include "anisomesh/recovery.hpp"
#include "anisomesh/remesh.hpp"

namespace {

using namespace aniso;

struct CommonFlags {
  double target = 1000.0;
  std::string p_norm = "1";
  double h_min = 1e-8;
  double h_max = 0.5;
  double gradation = 1.3;
  int iters = 3;
  int parallel_iters = 3;
  int parts = 1;
  int seed = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--target", flags.target, "Target metric complexity");
  cmd->add_option("--p-norm", flags.p_norm, "Normalization order (integer or 'inf')");
  cmd->add_option("--h-min", flags.h_min, "Minimum edge length bound");
  cmd->add_option("--h-max", flags.h_max, "Maximum edge length bound");
  cmd->add_option("--gradation", flags.gradation, "Metric gradation factor (> 1)");
  cmd->add_option("--iters", flags.iters, "Fixed-point iterations");
  cmd->add_option("--parallel-iters", flags.parallel_iters, "Partition-adapt iterations");
  cmd->add_option("--parts", flags.parts, "Number of mesh partitions");
  cmd->add_option("--seed", flags.seed, "Partition axis seed");
}

AdaptOptions to_options(const CommonFlags& flags) {
  AdaptOptions opts;
  opts.target_complexity = flags.target;
  opts.p_norm = flags.p_norm == "inf" ? AdaptOptions::infinity() : std::stod(flags.p_norm);
  opts.h_min = flags.h_min;
  opts.h_max = flags.h_max;
  opts.gradation_beta = flags.gradation;
  opts.fixed_point_iters = flags.iters;
  opts.parallel_iters = flags.parallel_iters;
  opts.num_parts = flags.parts;
  opts.seed = flags.seed;
  opts.validate();
  return opts;
}

PoissonProblem make_problem(const std::string& name) {
  if (name == "quadratic") return manufactured_quadratic(2);
  if (name == "interface") return manufactured_interface(2, 500.0, 0.15, Vec3{0.5, 0.5, 0.0});
  throw CLI::ValidationError("--problem", "unknown problem '" + name + "'");
}

std::vector<double> parse_targets(const std::string& csv) {
  std::vector<double> targets;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) targets.push_back(std::stod(item));
  return targets;
}

int cmd_adapt(const std::string& mesh_path, const std::string& sol_path,
              const std::string& out_path, const std::string& vtk_path, bool normalize,
              const CommonFlags& flags) {
  const AdaptOptions opts = to_options(flags);
  SimplicialMesh mesh = read_medit(mesh_path);
  MetricField metric = read_sol(sol_path, mesh);
  for (auto& m : metric.values) m = enforce_spd(m, opts);
  if (normalize) {
    metric = lp_normalize(mesh, metric, opts);
    metric = gradate(mesh, metric, opts.gradation_beta);
  }

  AdaptResult result;
  if (opts.num_parts > 1) {
    result = parallel_adapt(mesh, metric, opts);
  } else {
    result = adapt(mesh, metric, RemeshParams{});
  }
  write_medit(result.mesh, out_path);
  if (!vtk_path.empty()) write_vtk(result.mesh, vtk_path, {{}, {}, {{"metric", &result.metric}}});
  std::cout << kStatsCsvHeader << "\n" << stats_csv_row(statistics(result.mesh)) << "\n";
  return 0;
}

int cmd_solve(const std::string& problem_name, const std::string& out_path,
              const std::string& vtk_path, const std::string& csv_path,
              const CommonFlags& flags) {
  const AdaptOptions opts = to_options(flags);
  const PoissonProblem problem = make_problem(problem_name);
  FixedPointResult result = run_fixed_point(problem, opts);

  if (!csv_path.empty()) write_records_csv(result.records, "adaptive", problem, opts, csv_path);
  if (!out_path.empty()) write_medit(result.mesh, out_path);
  if (!vtk_path.empty()) write_vtk(result.mesh, vtk_path, {{{"u", &result.solution}}, {}, {}});

  std::cout << options_comment(problem, opts) << "\n";
  for (const auto& rec : result.records)
    std::cout << "iteration " << rec.iteration << ": vertices=" << rec.vertices
              << " elements=" << rec.elements << " l2_error=" << rec.l2 << "\n";
  return 0;
}

int cmd_converge(const std::string& problem_name, const std::string& targets_csv,
                 const std::string& csv_path, const CommonFlags& flags) {
  const AdaptOptions opts = to_options(flags);
  const PoissonProblem problem = make_problem(problem_name);
  const std::vector<double> targets = parse_targets(targets_csv);
  StudyResult study = convergence_study(problem, targets, opts);
  if (!csv_path.empty()) write_study_csv(study, problem, opts, csv_path);

  std::cout << options_comment(problem, opts) << "\n";
  std::cout << "adaptive slope: " << study.adaptive.fitted_slope << "\n";
  std::cout << "uniform slope:  " << study.uniform.fitted_slope << "\n";
  return 0;
}

int cmd_stats(const std::string& mesh_path, const std::string& csv_path) {
  SimplicialMesh mesh = read_medit(mesh_path);
  const MeshStatistics s = statistics(mesh);
  if (!csv_path.empty()) write_stats_csv(s, csv_path);
  std::cout << kStatsCsvHeader << "\n" << stats_csv_row(s) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anisomesh: metric-based anisotropic mesh adaptation"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* adapt_cmd = app.add_subcommand("adapt", "Adapt a mesh to a metric field");
  std::string mesh_path, sol_path, out_path = "out.mesh", vtk_path, csv_path;
  bool normalize = false;
  adapt_cmd->add_option("--mesh", mesh_path, "Input Medit mesh")->required();
  adapt_cmd->add_option("--sol", sol_path, "Input Medit metric (.sol)")->required();
  adapt_cmd->add_option("--out", out_path, "Output mesh path");
  adapt_cmd->add_option("--vtk", vtk_path, "Optional VTK output");
  adapt_cmd->add_flag("--normalize", normalize, "Normalize and gradate the metric first");
  add_common(adapt_cmd, flags);

  auto* solve_cmd = app.add_subcommand("solve", "Fixed-point solve/adapt loop");
  std::string problem_name = "quadratic";
  solve_cmd->add_option("--problem", problem_name, "quadratic|interface");
  solve_cmd->add_option("--out", out_path, "Output mesh path");
  solve_cmd->add_option("--vtk", vtk_path, "Optional VTK output");
  solve_cmd->add_option("--csv", csv_path, "Per-iteration statistics CSV");
  add_common(solve_cmd, flags);

  auto* converge_cmd = app.add_subcommand("converge", "Convergence study over targets");
  std::string targets_csv = "1000,4000,16000";
  converge_cmd->add_option("--problem", problem_name, "quadratic|interface");
  converge_cmd->add_option("--targets", targets_csv, "Comma-separated complexity targets");
  converge_cmd->add_option("--csv", csv_path, "Study CSV output");
  add_common(converge_cmd, flags);

  auto* stats_cmd = app.add_subcommand("stats", "Mesh statistics report");
  stats_cmd->add_option("--mesh", mesh_path, "Input Medit mesh")->required();
  stats_cmd->add_option("--csv", csv_path, "Statistics CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (adapt_cmd->parsed())
      return cmd_adapt(mesh_path, sol_path, out_path, vtk_path, normalize, flags);
    if (solve_cmd->parsed()) return cmd_solve(problem_name, out_path, vtk_path, csv_path, flags);
    if (converge_cmd->parsed()) return cmd_converge(problem_name, targets_csv, csv_path, flags);
    if (stats_cmd->parsed()) return cmd_stats(mesh_path, csv_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
