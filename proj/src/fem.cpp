#include "anisomesh/fem.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

namespace aniso {

namespace {

// Degree-4 rule on the reference triangle: 6 points, barycentric coordinates,
// weights sum to 1.
struct TriQuadPoint {
  double l0, l1, l2, w;
};

const std::array<TriQuadPoint, 6>& tri_quadrature() {
  static const std::array<TriQuadPoint, 6> rule = [] {
    const double a1 = 0.445948490915965, w1 = 0.223381589678011;
    const double a2 = 0.091576213509771, w2 = 0.109951743655322;
    return std::array<TriQuadPoint, 6>{{{a1, a1, 1 - 2 * a1, w1},
                                        {a1, 1 - 2 * a1, a1, w1},
                                        {1 - 2 * a1, a1, a1, w1},
                                        {a2, a2, 1 - 2 * a2, w2},
                                        {a2, 1 - 2 * a2, a2, w2},
                                        {1 - 2 * a2, a2, a2, w2}}};
  }();
  return rule;
}

// Tetrahedron rule built from a 4x4x4 Gauss-Legendre grid through the Duffy
// map; exact for polynomials of total degree 4 (and beyond).
struct TetQuadPoint {
  double l0, l1, l2, l3, w;
};

const std::vector<TetQuadPoint>& tet_quadrature() {
  static const std::vector<TetQuadPoint> rule = [] {
    const double gx[4] = {0.3399810435848563, -0.3399810435848563, 0.8611363115940526,
                          -0.8611363115940526};
    const double gw[4] = {0.6521451548625461, 0.6521451548625461, 0.3478548451374538,
                          0.3478548451374538};
    std::vector<TetQuadPoint> pts;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        for (int k = 0; k < 4; ++k) {
          const double u = 0.5 * (gx[i] + 1.0), v = 0.5 * (gx[j] + 1.0), w = 0.5 * (gx[k] + 1.0);
          const double t1 = u;
          const double t2 = v * (1.0 - u);
          const double t3 = w * (1.0 - u) * (1.0 - v);
          // Jacobian of the Duffy map over the unit cube, normalized so the
          // weights sum to 1 on the reference simplex (volume factor applied
          // by the caller).
          const double jac = (1.0 - u) * (1.0 - u) * (1.0 - v);
          const double weight = gw[i] * gw[j] * gw[k] * 0.125 * jac * 6.0;
          pts.push_back({1.0 - t1 - t2 - t3, t1, t2, t3, weight});
        }
      }
    }
    return pts;
  }();
  return rule;
}

}  // namespace

PoissonProblem manufactured_quadratic(int dim) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("dim must be 2 or 3");
  PoissonProblem p;
  p.dim = dim;
  p.name = "quadratic";
  auto u = [dim](const Vec3& x) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += x[k] * x[k];
    return (2.0 / 3.0) * s;
  };
  p.exact = u;
  p.boundary = u;
  p.forcing = [dim](const Vec3&) { return 4.0 * dim / 3.0; };
  return p;
}

PoissonProblem manufactured_interface(int dim, double alpha, double radius, Vec3 x0) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("dim must be 2 or 3");
  if (!(alpha > 0.0) || !(radius > 0.0))
    throw std::invalid_argument("interface problem requires alpha > 0 and radius > 0");
  PoissonProblem p;
  p.dim = dim;
  p.name = "interface";
  auto u = [dim, alpha, radius, x0](const Vec3& x) {
    double rho = 0.0;
    for (int k = 0; k < dim; ++k) rho += (x[k] - x0[k]) * (x[k] - x0[k]);
    return std::tanh(alpha * (radius * radius - rho));
  };
  p.exact = u;
  p.boundary = u;
  p.forcing = [dim, alpha, x0, u](const Vec3& x) {
    double rho = 0.0;
    for (int k = 0; k < dim; ++k) rho += (x[k] - x0[k]) * (x[k] - x0[k]);
    const double uu = u(x);
    return 2.0 * alpha * (uu * uu - 1.0) * (4.0 * alpha * rho * uu + dim);
  };
  return p;
}

CsrMatrix CsrMatrix::identity(int n) {
  CsrMatrix m;
  m.n = n;
  m.row_ptr.resize(n + 1);
  m.cols.resize(n);
  m.vals.assign(n, 1.0);
  for (int i = 0; i <= n; ++i) m.row_ptr[i] = i;
  for (int i = 0; i < n; ++i) m.cols[i] = i;
  return m;
}

CsrMatrix CsrMatrix::from_triplets(int n, std::vector<Triplet> triplets) {
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return std::pair(a.row, a.col) < std::pair(b.row, b.col);
  });
  CsrMatrix m;
  m.n = n;
  m.row_ptr.assign(n + 1, 0);
  for (size_t i = 0; i < triplets.size(); ++i) {
    if (i > 0 && triplets[i].row == triplets[i - 1].row && triplets[i].col == triplets[i - 1].col) {
      m.vals.back() += triplets[i].value;
    } else {
      m.cols.push_back(triplets[i].col);
      m.vals.push_back(triplets[i].value);
      m.row_ptr[triplets[i].row + 1]++;
    }
  }
  for (int i = 0; i < n; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
  return m;
}

void CsrMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const {
  y.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += vals[k] * x[cols[k]];
    y[i] = s;
  }
}

double CsrMatrix::value_at(int row, int col) const {
  for (int k = row_ptr[row]; k < row_ptr[row + 1]; ++k)
    if (cols[k] == col) return vals[k];
  return 0.0;
}

LinearSystem assemble(const SimplicialMesh& mesh, const PoissonProblem& problem) {
  if (mesh.dim != problem.dim)
    throw std::invalid_argument("assemble: problem dimension does not match mesh");
  const int d = mesh.dim, nv = d + 1, n = mesh.vertex_count();

  std::vector<CsrMatrix::Triplet> triplets;
  triplets.reserve((size_t)mesh.cell_count() * nv * nv);
  std::vector<double> load(n, 0.0);

  for (int c = 0; c < mesh.cell_count(); ++c) {
    auto k = mesh.cell(c);
    const double measure = mesh.cell_measure(c);
    if (!(measure > 0.0))
      throw std::runtime_error("assemble: degenerate cell " + std::to_string(c));

    // P1 basis gradients.
    Vec3 grads[4];
    const Vec3& p0 = mesh.coords[k[0]];
    if (d == 2) {
      const Vec3 e1 = mesh.coords[k[1]] - p0, e2 = mesh.coords[k[2]] - p0;
      const double det = e1[0] * e2[1] - e1[1] * e2[0];
      grads[1] = {e2[1] / det, -e2[0] / det, 0.0};
      grads[2] = {-e1[1] / det, e1[0] / det, 0.0};
      grads[0] = Vec3{0, 0, 0} - grads[1] - grads[2];
    } else {
      const Vec3 e1 = mesh.coords[k[1]] - p0, e2 = mesh.coords[k[2]] - p0,
                 e3 = mesh.coords[k[3]] - p0;
      const double det = dot(e1, cross(e2, e3));
      grads[1] = (1.0 / det) * cross(e2, e3);
      grads[2] = (1.0 / det) * cross(e3, e1);
      grads[3] = (1.0 / det) * cross(e1, e2);
      grads[0] = Vec3{0, 0, 0} - grads[1] - grads[2] - grads[3];
    }

    for (int i = 0; i < nv; ++i)
      for (int j = 0; j < nv; ++j)
        triplets.push_back({k[i], k[j], measure * dot(grads[i], grads[j])});

    // Load term with degree-4 quadrature.
    if (d == 2) {
      for (const auto& q : tri_quadrature()) {
        const Vec3 x = q.l0 * mesh.coords[k[0]] + q.l1 * mesh.coords[k[1]] +
                       q.l2 * mesh.coords[k[2]];
        const double f = problem.forcing(x);
        load[k[0]] += measure * q.w * f * q.l0;
        load[k[1]] += measure * q.w * f * q.l1;
        load[k[2]] += measure * q.w * f * q.l2;
      }
    } else {
      for (const auto& q : tet_quadrature()) {
        const Vec3 x = q.l0 * mesh.coords[k[0]] + q.l1 * mesh.coords[k[1]] +
                       q.l2 * mesh.coords[k[2]] + q.l3 * mesh.coords[k[3]];
        const double f = problem.forcing(x);
        load[k[0]] += measure * q.w * f * q.l0;
        load[k[1]] += measure * q.w * f * q.l1;
        load[k[2]] += measure * q.w * f * q.l2;
        load[k[3]] += measure * q.w * f * q.l3;
      }
    }
  }

  LinearSystem sys;
  sys.vertex_count = n;
  sys.full = CsrMatrix::from_triplets(n, triplets);
  sys.vertex_to_free.assign(n, -1);
  sys.dirichlet.assign(n, 0.0);
  for (int v = 0; v < n; ++v) {
    if (mesh.vertex_on_boundary[v]) {
      sys.dirichlet[v] = problem.boundary(mesh.coords[v]);
    } else {
      sys.vertex_to_free[v] = (int)sys.free_to_vertex.size();
      sys.free_to_vertex.push_back(v);
    }
  }

  // Weak form of "laplacian(u) = f": K u = -F, with boundary lifting.
  const int nf = (int)sys.free_to_vertex.size();
  sys.rhs.assign(nf, 0.0);
  std::vector<CsrMatrix::Triplet> reduced;
  for (int fi = 0; fi < nf; ++fi) {
    const int v = sys.free_to_vertex[fi];
    double b = -load[v];
    for (int k = sys.full.row_ptr[v]; k < sys.full.row_ptr[v + 1]; ++k) {
      const int col = sys.full.cols[k];
      if (sys.vertex_to_free[col] >= 0) {
        reduced.push_back({fi, sys.vertex_to_free[col], sys.full.vals[k]});
      } else {
        b -= sys.full.vals[k] * sys.dirichlet[col];
      }
    }
    sys.rhs[fi] = b;
  }
  sys.reduced = CsrMatrix::from_triplets(nf, std::move(reduced));
  return sys;
}

namespace {

constexpr double kSsorOmega = 1.5;

// Symmetric SOR preconditioner application: z = M^-1 r with
// M = (D + wL) D^-1 (D + wL)^T / (w (2 - w)).
class SsorPreconditioner {
 public:
  explicit SsorPreconditioner(const CsrMatrix& a) : a_(a), diag_(a.n, 0.0) {
    for (int i = 0; i < a.n; ++i) {
      for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
        if (a.cols[k] == i) diag_[i] = a.vals[k];
      if (diag_[i] == 0.0) throw std::runtime_error("ssor: zero diagonal entry");
    }
  }

  void apply(const std::vector<double>& r, std::vector<double>& z) const {
    const double w = kSsorOmega;
    const int n = a_.n;
    std::vector<double>& y = scratch_;
    y.assign(n, 0.0);
    // Forward solve (D + wL) y = w (2 - w) r.
    for (int i = 0; i < n; ++i) {
      double s = w * (2.0 - w) * r[i];
      for (int k = a_.row_ptr[i]; k < a_.row_ptr[i + 1]; ++k) {
        const int j = a_.cols[k];
        if (j < i) s -= w * a_.vals[k] * y[j];
      }
      y[i] = s / diag_[i];
    }
    // Backward solve (D + wL^T) z = D y.
    z.assign(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
      double s = diag_[i] * y[i];
      for (int k = a_.row_ptr[i]; k < a_.row_ptr[i + 1]; ++k) {
        const int j = a_.cols[k];
        if (j > i) s -= w * a_.vals[k] * z[j];
      }
      z[i] = s / diag_[i];
    }
  }

 private:
  const CsrMatrix& a_;
  std::vector<double> diag_;
  mutable std::vector<double> scratch_;
};

double dot_vec(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

ScalarField cg_solve(const LinearSystem& system, double tol, int max_iter, Preconditioner precond,
                     CgStats* stats) {
  const CsrMatrix& a = system.reduced;
  const int n = a.n;
  if (max_iter < 0) max_iter = 10 * std::max(n, 1);

  std::vector<double> x(n, 0.0), r = system.rhs, z(n), p(n), q(n);
  const double bnorm = std::sqrt(dot_vec(r, r));
  int iterations = 0;
  double rel = bnorm > 0.0 ? 1.0 : 0.0;

  if (n > 0 && bnorm > 0.0) {
    std::optional<SsorPreconditioner> ssor;
    if (precond == Preconditioner::ssor) ssor.emplace(a);

    auto apply_precond = [&](const std::vector<double>& rr, std::vector<double>& zz) {
      if (ssor)
        ssor->apply(rr, zz);
      else
        zz = rr;
    };

    apply_precond(r, z);
    p = z;
    double rho = dot_vec(r, z);
    while (true) {
      if (iterations >= max_iter)
        throw cg_failure("cg_solve: no convergence after " + std::to_string(iterations) +
                             " iterations (relative residual " + std::to_string(rel) + ")",
                         rel);
      a.multiply(p, q);
      const double alpha = rho / dot_vec(p, q);
      for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
      for (int i = 0; i < n; ++i) r[i] -= alpha * q[i];
      ++iterations;
      rel = std::sqrt(dot_vec(r, r)) / bnorm;
      if (rel <= tol) break;
      apply_precond(r, z);
      const double rho_new = dot_vec(r, z);
      const double beta = rho_new / rho;
      rho = rho_new;
      for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
  }

  if (stats) {
    stats->iterations = iterations;
    stats->final_residual = rel;
  }
  ScalarField out(system.vertex_count);
  for (int v = 0; v < system.vertex_count; ++v) out[v] = system.dirichlet[v];
  for (size_t fi = 0; fi < system.free_to_vertex.size(); ++fi)
    out[system.free_to_vertex[fi]] = x[fi];
  return out;
}

double l2_error(const SimplicialMesh& mesh, const ScalarField& field,
                const std::function<double(const Vec3&)>& exact) {
  double total = 0.0;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    auto k = mesh.cell(c);
    const double measure = mesh.cell_measure(c);
    if (mesh.dim == 2) {
      for (const auto& q : tri_quadrature()) {
        const Vec3 x = q.l0 * mesh.coords[k[0]] + q.l1 * mesh.coords[k[1]] +
                       q.l2 * mesh.coords[k[2]];
        const double uh = q.l0 * field[k[0]] + q.l1 * field[k[1]] + q.l2 * field[k[2]];
        const double diff = uh - exact(x);
        total += measure * q.w * diff * diff;
      }
    } else {
      for (const auto& q : tet_quadrature()) {
        const Vec3 x = q.l0 * mesh.coords[k[0]] + q.l1 * mesh.coords[k[1]] +
                       q.l2 * mesh.coords[k[2]] + q.l3 * mesh.coords[k[3]];
        const double uh = q.l0 * field[k[0]] + q.l1 * field[k[1]] + q.l2 * field[k[2]] +
                          q.l3 * field[k[3]];
        const double diff = uh - exact(x);
        total += measure * q.w * diff * diff;
      }
    }
  }
  return std::sqrt(total);
}

ScalarField interpolate(const SimplicialMesh& mesh, const std::function<double(const Vec3&)>& fn) {
  ScalarField out(mesh.vertex_count());
  for (int v = 0; v < mesh.vertex_count(); ++v) out[v] = fn(mesh.coords[v]);
  return out;
}

ScalarField solve_poisson(const SimplicialMesh& mesh, const PoissonProblem& problem, double tol,
                          CgStats* stats) {
  LinearSystem sys = assemble(mesh, problem);
  return cg_solve(sys, tol, -1, Preconditioner::ssor, stats);
}

}  // namespace aniso
