#include "anisomesh/driver.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "anisomesh/partition.hpp"
#include "anisomesh/recovery.hpp"
#include "anisomesh/remesh.hpp"

namespace aniso {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ConvergenceRecord make_record(const PoissonProblem& problem, const SimplicialMesh& mesh,
                              const ScalarField& u, double target, int iteration, double wall) {
  ConvergenceRecord rec;
  rec.target = target;
  rec.iteration = iteration;
  rec.vertices = mesh.vertex_count();
  rec.elements = mesh.cell_count();
  rec.l2 = problem.exact ? l2_error(mesh, u, problem.exact) : 0.0;
  rec.stats = statistics(mesh);
  rec.wall_seconds = wall;
  return rec;
}

}  // namespace

FixedPointResult run_fixed_point(const PoissonProblem& problem, const AdaptOptions& opts) {
  opts.validate();
  if (problem.dim != 2)
    throw std::invalid_argument("run_fixed_point: the adaptation loop is 2D only");

  FixedPointResult result;
  SimplicialMesh mesh = structured_mesh(problem.dim, 10);
  ScalarField u;
  const auto t0 = std::chrono::steady_clock::now();

  for (int it = 0; it < opts.fixed_point_iters; ++it) {
    u = solve_poisson(mesh, problem);
    result.records.push_back(
        make_record(problem, mesh, u, opts.target_complexity, it, seconds_since(t0)));

    MetricField metric = hessian_metric(mesh, u, opts);
    if (opts.num_parts > 1) {
      mesh = parallel_adapt(mesh, metric, opts).mesh;
    } else {
      mesh = adapt(mesh, metric, RemeshParams{}).mesh;
    }
  }

  u = solve_poisson(mesh, problem);
  result.records.push_back(make_record(problem, mesh, u, opts.target_complexity,
                                       opts.fixed_point_iters, seconds_since(t0)));
  result.mesh = std::move(mesh);
  result.solution = std::move(u);
  return result;
}

double fit_loglog_slope(const std::vector<double>& sizes, const std::vector<double>& errors) {
  if (sizes.size() != errors.size() || sizes.size() < 2)
    throw std::invalid_argument("fit_loglog_slope: need at least two points");
  const size_t n = sizes.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    const double x = std::log(sizes[i]), y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double fitted_error_at(const StudySeries& series, double vertices) {
  double sx = 0, sy = 0;
  for (const auto& rec : series.finals) {
    sx += std::log((double)rec.vertices);
    sy += std::log(rec.l2);
  }
  const double n = (double)series.finals.size();
  const double intercept = sy / n - series.fitted_slope * sx / n;
  return std::exp(intercept + series.fitted_slope * std::log(vertices));
}

StudyResult convergence_study(const PoissonProblem& problem, const std::vector<double>& targets,
                              const AdaptOptions& opts) {
  if (targets.size() < 3) throw std::invalid_argument("convergence_study: need >= 3 targets");
  for (size_t i = 1; i < targets.size(); ++i)
    if (!(targets[i] > targets[i - 1]))
      throw std::invalid_argument("convergence_study: targets must increase");

  StudyResult study;
  const auto t0 = std::chrono::steady_clock::now();

  for (double target : targets) {
    AdaptOptions run_opts = opts;
    run_opts.target_complexity = target;
    FixedPointResult fp = run_fixed_point(problem, run_opts);
    study.adaptive.finals.push_back(fp.records.back());
  }

  // Uniform baseline at matched vertex counts.
  for (const auto& rec : study.adaptive.finals) {
    const int n = std::max(2, (int)std::lround(std::sqrt((double)rec.vertices)) - 1);
    SimplicialMesh mesh = structured_mesh(problem.dim, n);
    const ScalarField u = solve_poisson(mesh, problem);
    study.uniform.finals.push_back(
        make_record(problem, mesh, u, rec.target, 0, seconds_since(t0)));
  }

  auto fit = [](StudySeries& series) {
    std::vector<double> sizes, errors;
    for (const auto& rec : series.finals) {
      sizes.push_back(rec.vertices);
      errors.push_back(rec.l2);
    }
    series.fitted_slope = fit_loglog_slope(sizes, errors);
  };
  fit(study.adaptive);
  fit(study.uniform);
  return study;
}

std::string options_comment(const PoissonProblem& problem, const AdaptOptions& opts) {
  std::ostringstream os;
  os << "# options: problem=" << problem.name << " target=" << opts.target_complexity
     << " p_norm=" << opts.p_norm << " h_min=" << opts.h_min << " h_max=" << opts.h_max
     << " a_max=" << (opts.a_max ? std::to_string(*opts.a_max) : std::string("none"))
     << " gradation_beta=" << opts.gradation_beta
     << " fixed_point_iters=" << opts.fixed_point_iters
     << " parallel_iters=" << opts.parallel_iters << " num_parts=" << opts.num_parts
     << " degree=" << opts.degree << " seed=" << opts.seed;
  return os.str();
}

namespace {

constexpr const char* kRecordHeader =
    "series,target,iteration,vertices,elements,l2_error,ar_max,ar_mean,ar_std,frac_ar_gt2,"
    "measure_min,measure_max,wall_seconds";

void write_record_row(std::ostream& out, const ConvergenceRecord& rec, const std::string& series) {
  out << series << ',' << rec.target << ',' << rec.iteration << ',' << rec.vertices << ','
      << rec.elements << ',' << rec.l2 << ',' << rec.stats.ar_max << ',' << rec.stats.ar_mean
      << ',' << rec.stats.ar_std << ',' << rec.stats.frac_ar_gt2 << ',' << rec.stats.measure_min
      << ',' << rec.stats.measure_max << ',' << rec.wall_seconds << '\n';
}

}  // namespace

void write_records_csv(const std::vector<ConvergenceRecord>& records, const std::string& series,
                       const PoissonProblem& problem, const AdaptOptions& opts,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << options_comment(problem, opts) << '\n' << kRecordHeader << '\n';
  for (const auto& rec : records) write_record_row(out, rec, series);
}

void write_study_csv(const StudyResult& study, const PoissonProblem& problem,
                     const AdaptOptions& opts, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << options_comment(problem, opts) << '\n' << kRecordHeader << '\n';
  for (const auto& rec : study.adaptive.finals) write_record_row(out, rec, "adaptive");
  for (const auto& rec : study.uniform.finals) write_record_row(out, rec, "uniform");
  out << "# slope,adaptive," << study.adaptive.fitted_slope << '\n';
  out << "# slope,uniform," << study.uniform.fitted_slope << '\n';
}

}  // namespace aniso
