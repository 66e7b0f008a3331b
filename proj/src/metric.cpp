#include "anisomesh/metric.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "anisomesh/mesh.hpp"

namespace aniso {

namespace {

void check_dim(int dim) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("metric dimension must be 2 or 3");
}

// Dense symmetric 3x3 helpers shared by the eigen and intersection routines.
using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 to_dense(const MetricTensor& m) {
  Mat3 a{};
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) a[i][j] = m(i, j);
  return a;
}

MetricTensor from_dense(int dim, const Mat3& a) {
  MetricTensor m(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) m.set(i, j, 0.5 * (a[i][j] + a[j][i]));
  return m;
}

// Cholesky factor L (lower) of a dense symmetric matrix; false if not SPD.
bool cholesky(int dim, const Mat3& a, Mat3& l) {
  l = Mat3{};
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[i][j];
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      if (i == j) {
        if (s <= 0.0) return false;
        l[i][i] = std::sqrt(s);
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  return true;
}

}  // namespace

int MetricTensor::index(int i, int j) {
  if (j > i) std::swap(i, j);
  return i * (i + 1) / 2 + j;
}

MetricTensor MetricTensor::identity(int dim) {
  check_dim(dim);
  MetricTensor m(dim);
  for (int i = 0; i < dim; ++i) m.set(i, i, 1.0);
  return m;
}

MetricTensor MetricTensor::uniform(int dim, double h) {
  check_dim(dim);
  if (!(h > 0.0)) throw std::invalid_argument("uniform metric requires h > 0");
  return identity(dim).scaled(1.0 / (h * h));
}

MetricTensor MetricTensor::from_lower(int dim, std::span<const double> entries) {
  check_dim(dim);
  MetricTensor m(dim);
  if ((int)entries.size() != m.entry_count())
    throw std::invalid_argument("wrong number of lower-triangle entries");
  std::copy(entries.begin(), entries.end(), m.a_.begin());
  return m;
}

MetricTensor MetricTensor::diagonal(int dim, double a, double b, double c) {
  check_dim(dim);
  MetricTensor m(dim);
  m.set(0, 0, a);
  m.set(1, 1, b);
  if (dim == 3) m.set(2, 2, c);
  return m;
}

double MetricTensor::quad(const Vec3& e) const {
  double s = 0.0;
  for (int i = 0; i < dim_; ++i) {
    s += (*this)(i, i) * e[i] * e[i];
    for (int j = 0; j < i; ++j) s += 2.0 * (*this)(i, j) * e[i] * e[j];
  }
  return s;
}

double MetricTensor::det() const {
  if (dim_ == 2) return a_[0] * a_[2] - a_[1] * a_[1];
  const double m11 = a_[0], m21 = a_[1], m22 = a_[2], m31 = a_[3], m32 = a_[4], m33 = a_[5];
  return m11 * (m22 * m33 - m32 * m32) - m21 * (m21 * m33 - m32 * m31) +
         m31 * (m21 * m32 - m22 * m31);
}

double MetricTensor::trace() const {
  double t = 0.0;
  for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
  return t;
}

double MetricTensor::max_abs() const {
  double m = 0.0;
  for (int k = 0; k < entry_count(); ++k) m = std::max(m, std::abs(a_[k]));
  return m;
}

bool MetricTensor::spd() const {
  Mat3 l;
  return cholesky(dim_, to_dense(*this), l);
}

MetricTensor MetricTensor::scaled(double s) const {
  MetricTensor m(dim_);
  for (int k = 0; k < entry_count(); ++k) m.a_[k] = s * a_[k];
  return m;
}

MetricTensor lerp(const MetricTensor& a, const MetricTensor& b, double t) {
  if (a.dim() != b.dim()) throw std::invalid_argument("metric dimension mismatch");
  MetricTensor m(a.dim());
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j <= i; ++j) m.set(i, j, (1.0 - t) * a(i, j) + t * b(i, j));
  return m;
}

namespace {

EigenDecomposition eigen2(const MetricTensor& m) {
  const double a = m(0, 0), b = m(1, 0), c = m(1, 1);
  EigenDecomposition e;
  e.dim = 2;
  const double theta = 0.5 * std::atan2(2.0 * b, a - c);
  const double ct = std::cos(theta), st = std::sin(theta);
  double l1 = a * ct * ct + 2.0 * b * ct * st + c * st * st;
  double l2 = a * st * st - 2.0 * b * ct * st + c * ct * ct;
  Vec3 v1{ct, st, 0.0}, v2{-st, ct, 0.0};
  if (l1 >= l2) {
    e.values = {l1, l2, 0.0};
    e.vectors = {v1, v2, Vec3{0, 0, 1}};
  } else {
    e.values = {l2, l1, 0.0};
    e.vectors = {v2, v1, Vec3{0, 0, 1}};
  }
  return e;
}

// Cyclic Jacobi for 3x3 symmetric matrices: relative off-diagonal tolerance
// 1e-12, at most 50 sweeps.
EigenDecomposition eigen3(const MetricTensor& m) {
  Mat3 a = to_dense(m);
  Mat3 v{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  double scale = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) scale = std::max(scale, std::abs(a[i][j]));
  const double tol = 1e-12 * std::max(scale, 1e-300);

  for (int sweep = 0; sweep < 50; ++sweep) {
    double off = std::sqrt(a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]);
    if (off <= tol) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(a[p][q]) <= 0.0) continue;
        const double apq = a[p][q];
        const double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        a[p][q] = a[q][p] = 0.0;
        for (int k = 0; k < 3; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }

  EigenDecomposition e;
  e.dim = 3;
  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int i, int j) { return a[i][i] > a[j][j]; });
  for (int k = 0; k < 3; ++k) {
    e.values[k] = a[order[k]][order[k]];
    e.vectors[k] = Vec3{v[0][order[k]], v[1][order[k]], v[2][order[k]]};
  }
  return e;
}

}  // namespace

EigenDecomposition eigendecompose(const MetricTensor& m) {
  return m.dim() == 2 ? eigen2(m) : eigen3(m);
}

MetricTensor compose(int dim, std::span<const double> values, std::span<const Vec3> vectors) {
  MetricTensor m(dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int k = 0; k < dim; ++k) s += values[k] * vectors[k][i] * vectors[k][j];
      m.set(i, j, s);
    }
  }
  return m;
}

void AdaptOptions::validate() const {
  if (!(target_complexity > 0.0)) throw std::invalid_argument("target complexity must be positive");
  if (!(h_min > 0.0) || !(h_min < h_max)) throw std::invalid_argument("require 0 < h_min < h_max");
  if (!(p_norm >= 1.0)) throw std::invalid_argument("norm order must be >= 1");
  if (a_max && !(*a_max >= 1.0)) throw std::invalid_argument("a_max must be >= 1");
  if (!(gradation_beta > 1.0)) throw std::invalid_argument("gradation beta must be > 1");
  if (fixed_point_iters < 1 || parallel_iters < 1) throw std::invalid_argument("iteration counts must be >= 1");
  if (num_parts < 1) throw std::invalid_argument("num_parts must be >= 1");
  if (degree != 1) throw std::invalid_argument("only degree 1 is supported");
}

MetricTensor enforce_spd(const MetricTensor& m, const AdaptOptions& opts) {
  EigenDecomposition e = eigendecompose(m);
  const double lo = 1.0 / (opts.h_max * opts.h_max);
  const double hi = 1.0 / (opts.h_min * opts.h_min);
  double lmax = 0.0;
  for (int k = 0; k < m.dim(); ++k) {
    e.values[k] = std::clamp(std::abs(e.values[k]), lo, hi);
    lmax = std::max(lmax, e.values[k]);
  }
  if (opts.a_max) {
    const double floor_l = lmax / (*opts.a_max * *opts.a_max);
    for (int k = 0; k < m.dim(); ++k) e.values[k] = std::max(e.values[k], floor_l);
  }
  return compose(m.dim(), {e.values.data(), (size_t)m.dim()}, {e.vectors.data(), (size_t)m.dim()});
}

MetricTensor intersect(const MetricTensor& m1, const MetricTensor& m2) {
  if (m1.dim() != m2.dim()) throw std::invalid_argument("intersect: dimension mismatch");
  const int d = m1.dim();
  Mat3 l;
  if (!cholesky(d, to_dense(m1), l)) throw std::invalid_argument("intersect: first metric is not SPD");

  // C = L^-1 M2 L^-T brings the pencil to a standard symmetric eigenproblem.
  Mat3 b = to_dense(m2);
  Mat3 y{};  // L^-1 B (forward substitution per column)
  for (int col = 0; col < d; ++col) {
    for (int i = 0; i < d; ++i) {
      double s = b[i][col];
      for (int k = 0; k < i; ++k) s -= l[i][k] * y[k][col];
      y[i][col] = s / l[i][i];
    }
  }
  Mat3 c{};  // Y L^-T: solve rows against L^T, i.e. C L^T = Y
  for (int row = 0; row < d; ++row) {
    for (int j = 0; j < d; ++j) {
      double s = y[row][j];
      for (int k = 0; k < j; ++k) s -= c[row][k] * l[j][k];
      c[row][j] = s / l[j][j];
    }
  }

  EigenDecomposition e = eigendecompose(from_dense(d, c));
  for (int k = 0; k < d; ++k) {
    if (!(e.values[k] > 0.0)) throw std::invalid_argument("intersect: second metric is not SPD");
  }

  // In the reduced basis M1 is I and M2 is diag(mu); the intersection is
  // diag(max(1, mu)). Map back with P^-T = L Q.
  Mat3 lq{};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int k = 0; k <= i; ++k) s += l[i][k] * e.vectors[j][k];
      lq[i][j] = s;
    }
  Mat3 r{};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += lq[i][k] * std::max(1.0, e.values[k]) * lq[j][k];
      r[i][j] = s;
    }
  return from_dense(d, r);
}

double edge_length(const MetricTensor& mu, const MetricTensor& mv, const Vec3& e) {
  const double q0 = mu.quad(e), q1 = mv.quad(e);
  if (q0 <= 0.0 && q1 <= 0.0) return 0.0;
  const double l0 = std::sqrt(std::max(q0, 0.0));
  const double l1 = std::sqrt(std::max(q1, 0.0));
  if (l0 <= 0.0 || l1 <= 0.0) return 0.5 * (l0 + l1);
  if (std::abs(l0 - l1) <= 1e-12 * l0) return l0;
  return (l0 - l1) / std::log(l0 / l1);
}

MetricField MetricField::constant(size_t n, const MetricTensor& m) {
  MetricField f(m.dim(), n);
  std::fill(f.values.begin(), f.values.end(), m);
  return f;
}

namespace {

void check_field(const SimplicialMesh& mesh, const MetricField& field) {
  if ((int)field.size() != mesh.vertex_count())
    throw std::invalid_argument("metric field size does not match vertex count");
  if (field.dim != mesh.dim) throw std::invalid_argument("metric field dimension mismatch");
}

}  // namespace

double complexity(const SimplicialMesh& mesh, const MetricField& field) {
  check_field(mesh, field);
  double total = 0.0;
  const int nv = mesh.dim + 1;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    auto cell = mesh.cell(c);
    double density = 0.0;
    for (int k = 0; k < nv; ++k) density += std::sqrt(std::max(field[cell[k]].det(), 0.0));
    total += mesh.cell_measure(c) * density / nv;
  }
  return total;
}

MetricField lp_normalize(const SimplicialMesh& mesh, const MetricField& field,
                         const AdaptOptions& opts) {
  check_field(mesh, field);
  opts.validate();
  const int d = mesh.dim;
  const bool p_inf = std::isinf(opts.p_norm);
  const double int_exp = p_inf ? 0.5 : opts.p_norm / (2.0 * opts.p_norm + d);
  const double local_exp = p_inf ? 0.0 : -1.0 / (2.0 * opts.p_norm + d);

  std::vector<double> dets(field.size());
  for (size_t v = 0; v < field.size(); ++v) {
    dets[v] = field[v].det();
    if (!(dets[v] > 0.0) || !field[v].spd())
      throw std::invalid_argument("lp_normalize: field is not SPD at vertex " + std::to_string(v));
  }

  double integral = 0.0;
  const int nv = d + 1;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    auto cell = mesh.cell(c);
    double density = 0.0;
    for (int k = 0; k < nv; ++k) density += std::pow(dets[cell[k]], int_exp);
    integral += mesh.cell_measure(c) * density / nv;
  }
  if (!(integral > 0.0)) throw std::invalid_argument("lp_normalize: zero metric complexity integral");

  const double global = std::pow(opts.target_complexity, 2.0 / d) * std::pow(integral, -2.0 / d);
  MetricField out(d, field.size());
  for (size_t v = 0; v < field.size(); ++v) {
    const double s = global * (p_inf ? 1.0 : std::pow(dets[v], local_exp));
    out[v] = enforce_spd(field[v].scaled(s), opts);
  }
  return out;
}

MetricField gradate(const SimplicialMesh& mesh, const MetricField& field, double beta) {
  check_field(mesh, field);
  if (!(beta > 1.0)) throw std::invalid_argument("gradate: beta must be > 1");

  MetricField out = field;
  const double log_beta = std::log(beta);
  const auto& edge_list = mesh.edges();

  auto grow_into = [&](int from, int to, const Vec3& e) -> double {
    const double len = std::sqrt(std::max(out[from].quad(e), 0.0));
    const double denom = 1.0 + len * log_beta;
    MetricTensor grown = out[from].scaled(1.0 / (denom * denom));
    MetricTensor updated = intersect(out[to], grown);
    double rel = 0.0;
    const double scale = std::max(out[to].max_abs(), 1e-300);
    for (int i = 0; i < out.dim; ++i)
      for (int j = 0; j <= i; ++j)
        rel = std::max(rel, std::abs(updated(i, j) - out[to](i, j)) / scale);
    out[to] = updated;
    return rel;
  };

  for (int sweep = 0; sweep < 20; ++sweep) {
    double max_rel = 0.0;
    for (const auto& ed : edge_list) {
      const Vec3 e = mesh.coords[ed[1]] - mesh.coords[ed[0]];
      max_rel = std::max(max_rel, grow_into(ed[0], ed[1], e));
      max_rel = std::max(max_rel, grow_into(ed[1], ed[0], e));
    }
    if (max_rel < 1e-3) break;
  }
  return out;
}

}  // namespace aniso
