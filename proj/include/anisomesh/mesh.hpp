#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "anisomesh/metric.hpp"
#include "anisomesh/vec.hpp"

namespace aniso {

/// Boundary marker reserved for artificial partition-interface facets.
constexpr int kInterfaceMarker = -1;

/// Simplicial mesh (triangles for dim 2, tetrahedra for dim 3) stored as flat
/// index arrays. Cells keep positive signed measure. Adjacency (vertex stars,
/// cell neighbors, edge list) is derived lazily and invalidated on edits.
struct SimplicialMesh {
  int dim = 2;

  std::vector<Vec3> coords;
  std::vector<std::int64_t> gids;               // stable global vertex ids
  std::vector<std::uint8_t> vertex_on_boundary;
  std::vector<std::uint8_t> vertex_is_corner;

  std::vector<int> cells;     // stride dim+1
  std::vector<int> bfacets;   // stride dim
  std::vector<int> bmarkers;  // per boundary facet

  int vertex_count() const { return (int)coords.size(); }
  int cell_count() const { return dim >= 0 ? (int)cells.size() / (dim + 1) : 0; }
  int bfacet_count() const { return (int)bmarkers.size(); }

  std::span<const int> cell(int c) const { return {cells.data() + c * (dim + 1), (size_t)(dim + 1)}; }
  std::span<int> cell(int c) { return {cells.data() + c * (dim + 1), (size_t)(dim + 1)}; }
  std::span<const int> bfacet(int f) const { return {bfacets.data() + f * dim, (size_t)dim}; }

  /// Signed measure (area / volume); positive on valid meshes.
  double cell_measure(int c) const;
  Vec3 cell_barycenter(int c) const;

  /// All cells containing vertex v. Throws std::invalid_argument out of range.
  std::span<const int> vertex_star(int v) const;
  /// dim+1 entries; entry i is the neighbor across the facet opposite local
  /// vertex i, or -1 on the boundary.
  std::span<const int> cell_neighbors(int c) const;
  /// Unique undirected edges (u < v), lexicographically sorted.
  const std::vector<std::array<int, 2>>& edges() const;

  void invalidate_adjacency() { adj_.valid = false; }

  /// Recompute boundary facets (marker 1) as the facets incident to exactly
  /// one cell. Overwrites any existing facet list.
  void derive_boundary();
  /// Recompute per-vertex boundary/corner flags from the facet list.
  void derive_vertex_flags();
  /// Flip cells with negative signed measure into positive orientation.
  void orient_cells();

  /// Structural checks: positive measures, boundary closure, index ranges.
  /// Throws std::runtime_error naming the first violation.
  void validate() const;

 private:
  struct Adjacency {
    bool valid = false;
    std::vector<int> star_offsets, star_cells;
    std::vector<int> neighbors;
    std::vector<std::array<int, 2>> edge_list;
  };
  mutable Adjacency adj_;
  const Adjacency& adjacency() const;
};

/// Uniform triangulation of the unit square (2*n^2 triangles) or unit cube
/// (6*n^3 tetrahedra), boundary facets marked 1, corner vertices flagged.
SimplicialMesh structured_mesh(int dim, int n);

/// Assemble a mesh from raw arrays: orients cells, derives boundary and flags,
/// assigns sequential gids. Intended for tests and small fixtures.
SimplicialMesh build_from_cells(int dim, std::vector<Vec3> coords, std::vector<int> cells);

/// Circumradius over 2*inradius (2D) or 3*inradius (3D); 1 for the regular
/// simplex, +inf for degenerate cells.
double aspect_ratio(const SimplicialMesh& mesh, int c);

/// 2D metric quality q = sum of squared metric edge lengths / (4*sqrt(3)*|K|_M);
/// 1 for a metric-unit equilateral triangle, larger is worse.
double quality(const SimplicialMesh& mesh, const MetricField& field, int c);
double quality(const Vec3& p0, const Vec3& p1, const Vec3& p2, const MetricTensor& m0,
               const MetricTensor& m1, const MetricTensor& m2);

struct MeshStatistics {
  int element_count = 0;
  int vertex_count = 0;
  double ar_max = 0.0;
  double ar_mean = 0.0;
  double ar_std = 0.0;
  double frac_ar_gt2 = 0.0;
  double measure_min = 0.0;
  double measure_max = 0.0;
};

MeshStatistics statistics(const SimplicialMesh& mesh);

/// Fraction of mesh edges with metric length in [1/sqrt(2), sqrt(2)].
double unit_edge_fraction(const SimplicialMesh& mesh, const MetricField& field);

}  // namespace aniso
