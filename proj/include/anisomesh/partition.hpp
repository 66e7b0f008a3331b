#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "anisomesh/mesh.hpp"
#include "anisomesh/metric.hpp"
#include "anisomesh/remesh.hpp"

namespace aniso {

/// One piece of a cell partition. Parts are disjoint and cover all cells;
/// interface cells have a face neighbor in another part; the ghost layer is
/// the one-ring of outside cells sharing a vertex with the part.
struct Partition {
  int part_id = 0;
  std::vector<int> cells;
  std::vector<int> interface_cells;  // subset of cells
  std::vector<int> ghost_cells;      // outside cells, read-only
};

/// Recursive coordinate bisection of cell barycenters. The cut axis cycle
/// starts at axis_seed mod dim, so different seeds move the interfaces.
/// Throws std::invalid_argument for np < 1 or np > cell count.
std::vector<Partition> partition(const SimplicialMesh& mesh, int np, int axis_seed);

/// Self-contained submesh for one part: owned cells first, then ghosts, with
/// artificial interface facets marked kInterfaceMarker so the submesh closes.
struct Submesh {
  int part_id = 0;
  SimplicialMesh mesh;
  MetricField metric;
  std::vector<int> frozen_cells;                    // submesh ids: interface + ghosts
  std::vector<std::array<std::int64_t, 3>> ghost_keys;  // sorted gid triples of ghosts
};

Submesh extract_submesh(const SimplicialMesh& mesh, const MetricField& metric,
                        const Partition& part);

struct AdaptedPart {
  int part_id = 0;
  SimplicialMesh mesh;
  MetricField metric;
  std::vector<std::array<std::int64_t, 3>> ghost_keys;
};

/// Glue adapted parts back together: ghost cells are dropped, shared vertices
/// are identified by global id (coordinates must match exactly), artificial
/// interface facets disappear. Throws std::runtime_error listing mismatches.
AdaptResult merge_parts(std::vector<AdaptedPart> parts);

/// Iterative partition-adapt-merge scheme: lock interface cells, adapt each
/// part concurrently, merge, then repartition with a shifted cut axis so the
/// old interfaces become interior. A single part degenerates to one serial
/// adapt call. Worker count is capped by the ANISOMESH_THREADS variable.
AdaptResult parallel_adapt(const SimplicialMesh& mesh, const MetricField& metric,
                           const AdaptOptions& opts);

/// Order-independent fingerprint of a cell (sorted vertex gids + coordinates).
std::uint64_t cell_fingerprint(const SimplicialMesh& mesh, int c);

}  // namespace aniso
