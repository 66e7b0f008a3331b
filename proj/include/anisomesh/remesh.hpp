#pragma once

#include <cstdint>
#include <numbers>
#include <unordered_set>

#include "anisomesh/mesh.hpp"
#include "anisomesh/metric.hpp"

namespace aniso {

/// Operator thresholds for the 2D local remesher. Edges longer than l_split
/// (metric length) are bisected, edges shorter than l_collapse are removed.
struct RemeshParams {
  double l_split = std::numbers::sqrt2;
  double l_collapse = 1.0 / std::numbers::sqrt2;
  int max_outer_sweeps = 10;
  double quality_swap_threshold = 1e-3;  // required relative improvement
  double smoothing_relaxation = 1.0;
  /// Cells (input-mesh indices) that must not be modified; used to lock
  /// partition interfaces.
  std::unordered_set<int> frozen_cells;
  /// First global id granted to newly created vertices; -1 continues after the
  /// largest existing id.
  std::int64_t new_gid_base = -1;
  /// Validate the mesh after every operator sweep inside adapt (test support).
  bool validate_each_sweep = false;
  /// Outer loop exits once an iteration edits fewer than this fraction of edges.
  double min_edit_fraction = 0.005;
};

struct AdaptResult {
  SimplicialMesh mesh;
  MetricField metric;
};

/// Single sweeps over the current edge/vertex sets; each returns the number of
/// applied edits and leaves the mesh compacted and valid.
int split_long_edges(SimplicialMesh& mesh, MetricField& metric, const RemeshParams& params);
int collapse_short_edges(SimplicialMesh& mesh, MetricField& metric, const RemeshParams& params);
int swap_edges(SimplicialMesh& mesh, MetricField& metric, const RemeshParams& params);
int smooth_vertices(SimplicialMesh& mesh, MetricField& metric, const RemeshParams& params);

/// Full adaptation loop: per outer sweep, split to a fixed point, then
/// collapse, swap and smooth, until edits die out or max_outer_sweeps.
/// Metric values for new vertices are interpolated from edge endpoints.
AdaptResult adapt(const SimplicialMesh& mesh, const MetricField& metric,
                  const RemeshParams& params);

}  // namespace aniso
