// Test-side oracles kept independent of the library implementation paths they
// check: brute-force quadrature, dense solves, finite differences.
#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "anisomesh/metric.hpp"
#include "anisomesh/vec.hpp"

namespace oracle {

/// Metric edge length by 64-point midpoint quadrature of sqrt(e^T M(t) e)
/// with entrywise-linear metric interpolation along the edge.
inline double quadrature_edge_length(const aniso::MetricTensor& mu, const aniso::MetricTensor& mv,
                                     const aniso::Vec3& e) {
  const int n = 64;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = (i + 0.5) / n;
    const aniso::MetricTensor m = aniso::lerp(mu, mv, t);
    total += std::sqrt(std::max(m.quad(e), 0.0)) / n;
  }
  return total;
}

/// Central-difference Laplacian.
inline double fd_laplacian(const std::function<double(const aniso::Vec3&)>& u,
                           const aniso::Vec3& x, int dim, double h) {
  double sum = 0.0;
  for (int k = 0; k < dim; ++k) {
    aniso::Vec3 xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    sum += (u(xp) - 2.0 * u(x) + u(xm)) / (h * h);
  }
  return sum;
}

/// Dense Gaussian elimination with partial pivoting.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const int n = (int)b.size();
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (a[pivot][col] == 0.0) throw std::runtime_error("dense_solve: singular matrix");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (int r = col + 1; r < n; ++r) {
      const double factor = a[r][col] / a[col][col];
      for (int c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return x;
}

/// Random SPD tensor with eigenvalue spread in [lo, hi].
inline aniso::MetricTensor random_spd(std::mt19937& rng, int dim, double lo = 0.1,
                                      double hi = 100.0) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> loghl(std::log(lo), std::log(hi));

  // Random orthonormal frame from Gram-Schmidt over random vectors.
  std::array<aniso::Vec3, 3> basis;
  for (int k = 0; k < dim; ++k) {
    aniso::Vec3 v;
    while (true) {
      for (int i = 0; i < dim; ++i) v[i] = unit(rng);
      for (int j = 0; j < k; ++j) v = v - dot(v, basis[j]) * basis[j];
      const double len = norm(v);
      if (len > 1e-3) {
        v = (1.0 / len) * v;
        break;
      }
    }
    basis[k] = v;
  }
  std::array<double, 3> values = {0, 0, 0};
  for (int k = 0; k < dim; ++k) values[k] = std::exp(loghl(rng));
  std::sort(values.begin(), values.begin() + dim, std::greater<>());
  return aniso::compose(dim, {values.data(), (size_t)dim}, {basis.data(), (size_t)dim});
}

/// Random symmetric (possibly indefinite) tensor.
inline aniso::MetricTensor random_symmetric(std::mt19937& rng, int dim, double scale = 10.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  aniso::MetricTensor m(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) m.set(i, j, dist(rng));
  return m;
}

/// Random unit direction.
inline aniso::Vec3 random_direction(std::mt19937& rng, int dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  while (true) {
    aniso::Vec3 v;
    for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
    const double len = norm(v);
    if (len > 1e-6) return (1.0 / len) * v;
  }
}

}  // namespace oracle
