#pragma once

#include <string>
#include <vector>

#include "anisomesh/fem.hpp"
#include "anisomesh/mesh.hpp"
#include "anisomesh/metric.hpp"

namespace aniso {

/// One row of a solve/adapt history: the solve on the current mesh plus its
/// statistics snapshot.
struct ConvergenceRecord {
  double target = 0.0;
  int iteration = 0;
  int vertices = 0;
  int elements = 0;
  double l2 = 0.0;
  MeshStatistics stats;
  double wall_seconds = 0.0;
};

struct FixedPointResult {
  SimplicialMesh mesh;
  ScalarField solution;
  std::vector<ConvergenceRecord> records;  // one per solve, final last
};

/// Solve -> recover Hessian metric -> adapt, opts.fixed_point_iters times,
/// starting from a structured 10x10 box, re-solving from scratch on each new
/// mesh. Partitioned adaptation is used when opts.num_parts > 1.
FixedPointResult run_fixed_point(const PoissonProblem& problem, const AdaptOptions& opts);

struct StudySeries {
  std::vector<ConvergenceRecord> finals;  // one per target
  double fitted_slope = 0.0;              // log(l2) vs log(vertices)
};

struct StudyResult {
  StudySeries adaptive;
  StudySeries uniform;  // structured baseline at matched vertex counts
};

/// Adaptive runs for each target plus a uniform-refinement baseline series;
/// slopes fitted by least squares in log-log space.
StudyResult convergence_study(const PoissonProblem& problem, const std::vector<double>& targets,
                              const AdaptOptions& opts);

double fit_loglog_slope(const std::vector<double>& sizes, const std::vector<double>& errors);

/// Evaluate a series' fitted log-log line at the given size.
double fitted_error_at(const StudySeries& series, double vertices);

std::string options_comment(const PoissonProblem& problem, const AdaptOptions& opts);
void write_records_csv(const std::vector<ConvergenceRecord>& records, const std::string& series,
                       const PoissonProblem& problem, const AdaptOptions& opts,
                       const std::string& path);
void write_study_csv(const StudyResult& study, const PoissonProblem& problem,
                     const AdaptOptions& opts, const std::string& path);

}  // namespace aniso
