#include "anisomesh/recovery.hpp"

#include <cmath>
#include <stdexcept>

namespace aniso {

namespace {

// P1 basis gradients: rows of the inverse edge matrix; grad phi_0 = -sum.
void basis_gradients(const SimplicialMesh& mesh, int c, Vec3 grads[4]) {
  auto k = mesh.cell(c);
  const int d = mesh.dim;
  const Vec3& p0 = mesh.coords[k[0]];
  if (d == 2) {
    const Vec3 e1 = mesh.coords[k[1]] - p0, e2 = mesh.coords[k[2]] - p0;
    const double det = e1[0] * e2[1] - e1[1] * e2[0];
    grads[1] = {e2[1] / det, -e2[0] / det, 0.0};
    grads[2] = {-e1[1] / det, e1[0] / det, 0.0};
  } else {
    const Vec3 e1 = mesh.coords[k[1]] - p0, e2 = mesh.coords[k[2]] - p0,
               e3 = mesh.coords[k[3]] - p0;
    const double det = dot(e1, cross(e2, e3));
    const Vec3 c1 = cross(e2, e3), c2 = cross(e3, e1), c3 = cross(e1, e2);
    grads[1] = (1.0 / det) * c1;
    grads[2] = (1.0 / det) * c2;
    grads[3] = (1.0 / det) * c3;
  }
  grads[0] = Vec3{0, 0, 0} - grads[1] - grads[2];
  if (d == 3) grads[0] = grads[0] - grads[3];
}

void check_field(const SimplicialMesh& mesh, size_t n) {
  if ((int)n != mesh.vertex_count())
    throw std::invalid_argument("field size does not match mesh vertex count");
}

// Shared star-averaging kernel: values[c] is the constant cell value.
std::vector<double> star_average(const SimplicialMesh& mesh, const std::vector<double>& values) {
  std::vector<double> out(mesh.vertex_count(), 0.0);
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    auto star = mesh.vertex_star(v);
    if (star.empty())
      throw std::runtime_error("clement_gradient: vertex " + std::to_string(v) +
                               " has an empty star");
    double wsum = 0.0, acc = 0.0;
    for (int c : star) {
      const double w = mesh.cell_measure(c);
      wsum += w;
      acc += w * values[c];
    }
    out[v] = acc / wsum;
  }
  return out;
}

}  // namespace

Vec3 cell_gradient(const SimplicialMesh& mesh, const ScalarField& u, int c) {
  Vec3 grads[4];
  basis_gradients(mesh, c, grads);
  auto k = mesh.cell(c);
  Vec3 g;
  for (int i = 0; i <= mesh.dim; ++i) g += u[k[i]] * grads[i];
  return g;
}

VectorField clement_gradient(const SimplicialMesh& mesh, const ScalarField& u) {
  check_field(mesh, u.size());
  const int nc = mesh.cell_count();
  std::vector<Vec3> cell_grads(nc);
  for (int c = 0; c < nc; ++c) cell_grads[c] = cell_gradient(mesh, u, c);

  VectorField out(mesh.vertex_count());
  for (int comp = 0; comp < mesh.dim; ++comp) {
    std::vector<double> values(nc);
    for (int c = 0; c < nc; ++c) values[c] = cell_grads[c][comp];
    std::vector<double> averaged = star_average(mesh, values);
    for (int v = 0; v < mesh.vertex_count(); ++v) out[v][comp] = averaged[v];
  }
  return out;
}

MetricField recover_hessian(const SimplicialMesh& mesh, const ScalarField& u) {
  check_field(mesh, u.size());
  const VectorField grad = clement_gradient(mesh, u);
  const int d = mesh.dim;

  // Row i of the Hessian is the recovered gradient of gradient component i.
  std::vector<VectorField> rows(d);
  ScalarField comp(mesh.vertex_count());
  for (int i = 0; i < d; ++i) {
    for (int v = 0; v < mesh.vertex_count(); ++v) comp[v] = grad[v][i];
    rows[i] = clement_gradient(mesh, comp);
  }

  MetricField h(d, mesh.vertex_count());
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j) h[v].set(i, j, 0.5 * (rows[i][v][j] + rows[j][v][i]));
  }
  return h;
}

MetricField hessian_metric(const SimplicialMesh& mesh, const ScalarField& u,
                           const AdaptOptions& opts) {
  opts.validate();
  MetricField h = recover_hessian(mesh, u);

  // Eigenvalue modulus with a tiny SPD floor only. The h_min/h_max bounds are
  // applied after normalization so that flat regions stay coarse relative to
  // high-curvature ones; clamping curvature before the global rescaling would
  // flatten the multi-scale structure of the field.
  for (auto& m : h.values) {
    EigenDecomposition e = eigendecompose(m);
    for (int k = 0; k < h.dim; ++k) e.values[k] = std::max(std::abs(e.values[k]), 1e-30);
    m = compose(h.dim, {e.values.data(), (size_t)h.dim}, {e.vectors.data(), (size_t)h.dim});
  }

  MetricField normalized = lp_normalize(mesh, h, opts);
  MetricField graded = gradate(mesh, normalized, opts.gradation_beta);
  for (auto& m : graded.values) m = enforce_spd(m, opts);
  return graded;
}

}  // namespace aniso
