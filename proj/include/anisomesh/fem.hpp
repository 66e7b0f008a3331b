#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "anisomesh/fields.hpp"
#include "anisomesh/mesh.hpp"

namespace aniso {

/// Poisson problem "laplacian(u) = f in Omega, u = g on the boundary" with an
/// optional exact solution for error evaluation.
struct PoissonProblem {
  int dim = 2;
  std::string name;
  std::function<double(const Vec3&)> forcing;   // f
  std::function<double(const Vec3&)> boundary;  // g
  std::function<double(const Vec3&)> exact;     // may be empty
};

/// u(x) = (2/3) x.x, constant forcing 4d/3 (4 in 3D, 8/3 in 2D).
PoissonProblem manufactured_quadratic(int dim);

/// u(x) = tanh(alpha (r^2 - |x - x0|^2)): a smoothed indicator of the ball of
/// radius r around x0, with the matching analytic forcing.
PoissonProblem manufactured_interface(int dim, double alpha = 500.0, double radius = 0.15,
                                      Vec3 x0 = Vec3{0.5, 0.5, 0.5});

/// Compressed sparse row matrix (square, symmetric by construction here).
struct CsrMatrix {
  int n = 0;
  std::vector<int> row_ptr{0};
  std::vector<int> cols;
  std::vector<double> vals;

  struct Triplet {
    int row, col;
    double value;
  };

  static CsrMatrix identity(int n);
  static CsrMatrix from_triplets(int n, std::vector<Triplet> triplets);
  void multiply(const std::vector<double>& x, std::vector<double>& y) const;
  double value_at(int row, int col) const;  // 0 when absent
};

/// Assembled P1 system with Dirichlet elimination: `reduced` acts on free
/// vertices only, `full` keeps every vertex for diagnostics.
struct LinearSystem {
  int vertex_count = 0;
  CsrMatrix full;
  CsrMatrix reduced;
  std::vector<double> rhs;             // reduced
  std::vector<int> free_to_vertex;
  std::vector<int> vertex_to_free;     // -1 at Dirichlet vertices
  std::vector<double> dirichlet;       // per vertex, 0 at free vertices
};

/// Stiffness and load assembly with degree-4 quadrature for the forcing term.
/// Throws std::runtime_error naming any degenerate cell.
LinearSystem assemble(const SimplicialMesh& mesh, const PoissonProblem& problem);

struct CgStats {
  int iterations = 0;
  double final_residual = 0.0;
};

enum class Preconditioner { ssor, none };

/// Thrown when the iteration budget runs out.
class cg_failure : public std::runtime_error {
 public:
  cg_failure(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double last_residual() const { return residual_; }

 private:
  double residual_;
};

/// Conjugate gradients with symmetric SOR preconditioning (omega = 1.5).
/// Returns the full vertex field with Dirichlet values reinstated.
ScalarField cg_solve(const LinearSystem& system, double tol = 1e-10, int max_iter = -1,
                     Preconditioner precond = Preconditioner::ssor, CgStats* stats = nullptr);

/// L2 norm of (field - exact) by degree-4 quadrature (6-point rule per triangle).
double l2_error(const SimplicialMesh& mesh, const ScalarField& field,
                const std::function<double(const Vec3&)>& exact);

/// Vertex interpolant of an analytic function.
ScalarField interpolate(const SimplicialMesh& mesh, const std::function<double(const Vec3&)>& fn);

/// Assemble-and-solve convenience wrapper.
ScalarField solve_poisson(const SimplicialMesh& mesh, const PoissonProblem& problem,
                          double tol = 1e-10, CgStats* stats = nullptr);

}  // namespace aniso
