#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "anisomesh/vec.hpp"

namespace aniso {

struct SimplicialMesh;

/// Symmetric d x d tensor (d in {2,3}) storing the lower triangle row-major:
/// m11; m21 m22; m31 m32 m33. When SPD it acts as a Riemannian metric whose
/// eigenvalues are inverse squared target edge lengths.
class MetricTensor {
 public:
  MetricTensor() = default;
  explicit MetricTensor(int dim) : dim_(dim) {}

  static MetricTensor identity(int dim);
  /// (1/h^2) * I. Throws std::invalid_argument for dim outside {2,3} or h <= 0.
  static MetricTensor uniform(int dim, double h);
  static MetricTensor from_lower(int dim, std::span<const double> entries);
  /// diag entries, remaining dims ignored.
  static MetricTensor diagonal(int dim, double a, double b, double c = 0.0);

  int dim() const { return dim_; }
  int entry_count() const { return dim_ * (dim_ + 1) / 2; }
  std::span<const double> lower() const { return {a_.data(), (size_t)entry_count()}; }

  double operator()(int i, int j) const { return a_[index(i, j)]; }
  void set(int i, int j, double value) { a_[index(i, j)] = value; }

  /// e^T M e
  double quad(const Vec3& e) const;
  double det() const;
  double trace() const;
  double max_abs() const;
  /// Strict positive definiteness via Cholesky.
  bool spd() const;

  MetricTensor scaled(double s) const;
  bool operator==(const MetricTensor& o) const { return dim_ == o.dim_ && a_ == o.a_; }

 private:
  static int index(int i, int j);
  int dim_ = 2;
  std::array<double, 6> a_ = {0, 0, 0, 0, 0, 0};
};

/// Entrywise linear interpolation (convex combinations of SPD stay SPD).
MetricTensor lerp(const MetricTensor& a, const MetricTensor& b, double t);

struct EigenDecomposition {
  int dim = 2;
  std::array<double, 3> values = {0, 0, 0};     // descending
  std::array<Vec3, 3> vectors;                  // orthonormal
};

/// Orthogonal eigendecomposition: closed form for 2x2, cyclic Jacobi for 3x3.
EigenDecomposition eigendecompose(const MetricTensor& m);

/// V diag(values) V^T.
MetricTensor compose(int dim, std::span<const double> values, std::span<const Vec3> vectors);

/// Adaptation parameters shared across the pipeline.
struct AdaptOptions {
  double target_complexity = 1000.0;
  double p_norm = 1.0;  // use infinity() for the uniform-scaling limit
  double h_min = 1e-8;
  double h_max = 0.5;
  std::optional<double> a_max;  // max anisotropy ratio (>= 1) if set
  double gradation_beta = 1.3;
  int fixed_point_iters = 3;
  int parallel_iters = 3;
  int num_parts = 1;
  int degree = 1;  // P1 only
  int seed = 0;    // partition axis seed base

  static constexpr double infinity() { return std::numeric_limits<double>::infinity(); }
  /// Throws std::invalid_argument on violated bounds.
  void validate() const;
};

/// Eigenvalue modulus, then clamp to [1/h_max^2, 1/h_min^2]; if a_max is set,
/// small eigenvalues are raised so lambda_max/lambda_min <= a_max^2.
MetricTensor enforce_spd(const MetricTensor& m, const AdaptOptions& opts);

/// Metric intersection by simultaneous reduction: the result is the metric of
/// the largest ellipsoid contained in both input unit balls.
MetricTensor intersect(const MetricTensor& m1, const MetricTensor& m2);

/// Length of the straight edge e measured in the metric interpolated between
/// its endpoints: (l0 - l1) / ln(l0/l1), exact for constant metrics.
double edge_length(const MetricTensor& mu, const MetricTensor& mv, const Vec3& e);

/// One tensor per mesh vertex (P1 metric field).
struct MetricField {
  int dim = 2;
  std::vector<MetricTensor> values;

  MetricField() = default;
  MetricField(int d, size_t n) : dim(d), values(n, MetricTensor(d)) {}
  size_t size() const { return values.size(); }
  MetricTensor& operator[](size_t i) { return values[i]; }
  const MetricTensor& operator[](size_t i) const { return values[i]; }

  static MetricField constant(size_t n, const MetricTensor& m);
};

/// Integral of sqrt(det M) by cell measure times vertex-averaged density.
double complexity(const SimplicialMesh& mesh, const MetricField& field);

/// Global L^p rescaling so the field's complexity equals opts.target_complexity,
/// then per-vertex clamping through enforce_spd.
MetricField lp_normalize(const SimplicialMesh& mesh, const MetricField& field,
                         const AdaptOptions& opts);

/// Iterative edge sweeps limiting metric growth along edges to the factor
/// (1 + l*ln(beta))^2. Converges at 1e-3 relative change, capped at 20 sweeps.
MetricField gradate(const SimplicialMesh& mesh, const MetricField& field, double beta);

}  // namespace aniso
