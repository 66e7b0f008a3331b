#include "anisomesh/partition.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace aniso {

namespace {

void rcb(const SimplicialMesh& mesh, std::vector<int>& cells, int np, int axis, int dim,
         std::vector<std::vector<int>>& out) {
  if (np == 1) {
    std::sort(cells.begin(), cells.end());
    out.push_back(std::move(cells));
    return;
  }
  const int np_left = np / 2;
  const size_t n_left = (size_t)((double)cells.size() * np_left / np + 0.5);
  std::sort(cells.begin(), cells.end(), [&](int a, int b) {
    const double xa = mesh.cell_barycenter(a)[axis], xb = mesh.cell_barycenter(b)[axis];
    if (xa != xb) return xa < xb;
    return a < b;
  });
  std::vector<int> left(cells.begin(), cells.begin() + n_left);
  std::vector<int> right(cells.begin() + n_left, cells.end());
  rcb(mesh, left, np_left, (axis + 1) % dim, dim, out);
  rcb(mesh, right, np - np_left, (axis + 1) % dim, dim, out);
}

}  // namespace

std::vector<Partition> partition(const SimplicialMesh& mesh, int np, int axis_seed) {
  if (np < 1) throw std::invalid_argument("partition: np must be >= 1");
  if (np > mesh.cell_count())
    throw std::invalid_argument("partition: np exceeds cell count");

  std::vector<int> all(mesh.cell_count());
  for (int c = 0; c < mesh.cell_count(); ++c) all[c] = c;
  std::vector<std::vector<int>> pieces;
  const int axis = ((axis_seed % mesh.dim) + mesh.dim) % mesh.dim;
  rcb(mesh, all, np, axis, mesh.dim, pieces);

  std::vector<int> owner(mesh.cell_count(), -1);
  for (int p = 0; p < (int)pieces.size(); ++p)
    for (int c : pieces[p]) owner[c] = p;

  std::vector<Partition> parts(pieces.size());
  for (int p = 0; p < (int)pieces.size(); ++p) {
    parts[p].part_id = p;
    parts[p].cells = std::move(pieces[p]);
    for (int c : parts[p].cells) {
      for (int nb : mesh.cell_neighbors(c)) {
        if (nb >= 0 && owner[nb] != p) {
          parts[p].interface_cells.push_back(c);
          break;
        }
      }
    }
    // Ghost layer: outside cells sharing at least one vertex with the part.
    std::vector<int> ghosts;
    for (int c : parts[p].cells)
      for (int v : mesh.cell(c))
        for (int sc : mesh.vertex_star(v))
          if (owner[sc] != p) ghosts.push_back(sc);
    std::sort(ghosts.begin(), ghosts.end());
    ghosts.erase(std::unique(ghosts.begin(), ghosts.end()), ghosts.end());
    parts[p].ghost_cells = std::move(ghosts);
  }
  return parts;
}

Submesh extract_submesh(const SimplicialMesh& mesh, const MetricField& metric,
                        const Partition& part) {
  Submesh sub;
  sub.part_id = part.part_id;
  sub.mesh.dim = mesh.dim;
  sub.metric.dim = mesh.dim;
  const int nv = mesh.dim + 1;

  std::vector<int> cell_list = part.cells;
  const size_t own_count = cell_list.size();
  cell_list.insert(cell_list.end(), part.ghost_cells.begin(), part.ghost_cells.end());

  // Local vertex ids in ascending global-index order keeps the single-part
  // case bit-identical to the input mesh.
  std::vector<int> referenced;
  for (int c : cell_list)
    for (int v : mesh.cell(c)) referenced.push_back(v);
  std::sort(referenced.begin(), referenced.end());
  referenced.erase(std::unique(referenced.begin(), referenced.end()), referenced.end());

  std::unordered_map<int, int> local;
  local.reserve(referenced.size());
  for (int v : referenced) {
    local[v] = sub.mesh.vertex_count();
    sub.mesh.coords.push_back(mesh.coords[v]);
    sub.mesh.gids.push_back(mesh.gids[v]);
    sub.mesh.vertex_on_boundary.push_back(mesh.vertex_on_boundary[v]);
    sub.mesh.vertex_is_corner.push_back(mesh.vertex_is_corner[v]);
    sub.metric.values.push_back(metric[v]);
  }

  std::unordered_map<int, int> cell_local;
  cell_local.reserve(cell_list.size());
  for (size_t i = 0; i < cell_list.size(); ++i) {
    const int c = cell_list[i];
    cell_local[c] = (int)i;
    for (int v : mesh.cell(c)) sub.mesh.cells.push_back(local.at(v));
    if (i >= own_count) {
      std::array<std::int64_t, 3> key = {mesh.gids[mesh.cell(c)[0]], mesh.gids[mesh.cell(c)[1]],
                                         mesh.gids[mesh.cell(c)[2]]};
      std::sort(key.begin(), key.end());
      sub.ghost_keys.push_back(key);
    }
  }
  std::sort(sub.ghost_keys.begin(), sub.ghost_keys.end());

  // Domain boundary facets whose unique incident cell is included.
  std::map<std::array<int, 3>, int> bf_incidence;  // sorted parent facet -> parent cell
  for (int c : cell_list) {
    auto k = mesh.cell(c);
    for (int i = 0; i < nv; ++i) {
      std::array<int, 3> f = {-1, -1, -1};
      int m = 0;
      for (int j = 0; j < nv; ++j)
        if (j != i) f[m++] = k[j];
      std::sort(f.begin(), f.end());
      bf_incidence[f] = c;
    }
  }
  for (int f = 0; f < mesh.bfacet_count(); ++f) {
    auto e = mesh.bfacet(f);
    std::array<int, 3> key = {e[0], e[1], mesh.dim == 3 ? e[2] : -1};
    std::sort(key.begin(), key.end());
    if (bf_incidence.count(key)) {
      for (int i = 0; i < mesh.dim; ++i) sub.mesh.bfacets.push_back(local.at(e[i]));
      sub.mesh.bmarkers.push_back(mesh.bmarkers[f]);
    }
  }

  // Artificial facets where an included cell faces an excluded one.
  std::vector<char> included(mesh.cell_count(), 0);
  for (int c : cell_list) included[c] = 1;
  for (int c : cell_list) {
    auto nbs = mesh.cell_neighbors(c);
    auto k = mesh.cell(c);
    for (int i = 0; i < nv; ++i) {
      if (nbs[i] >= 0 && !included[nbs[i]]) {
        for (int j = 0; j < nv; ++j)
          if (j != i) sub.mesh.bfacets.push_back(local.at(k[j]));
        sub.mesh.bmarkers.push_back(kInterfaceMarker);
      }
    }
  }
  sub.mesh.derive_vertex_flags();

  for (int c : part.interface_cells) sub.frozen_cells.push_back(cell_local.at(c));
  for (size_t i = own_count; i < cell_list.size(); ++i) sub.frozen_cells.push_back((int)i);
  std::sort(sub.frozen_cells.begin(), sub.frozen_cells.end());
  return sub;
}

AdaptResult merge_parts(std::vector<AdaptedPart> parts) {
  if (parts.empty()) throw std::invalid_argument("merge_parts: no parts");
  std::sort(parts.begin(), parts.end(),
            [](const AdaptedPart& a, const AdaptedPart& b) { return a.part_id < b.part_id; });

  AdaptResult out;
  const int dim = parts[0].mesh.dim;
  out.mesh.dim = dim;
  out.metric.dim = dim;
  const int nv = dim + 1;

  std::unordered_map<std::int64_t, int> by_gid;
  std::map<std::array<std::int64_t, 3>, int> seen_bfacets;  // gid key -> marker

  for (const auto& part : parts) {
    const SimplicialMesh& pm = part.mesh;
    std::vector<char> owned(pm.cell_count(), 1);
    for (int c = 0; c < pm.cell_count(); ++c) {
      std::array<std::int64_t, 3> key = {pm.gids[pm.cell(c)[0]], pm.gids[pm.cell(c)[1]],
                                         pm.gids[pm.cell(c)[2]]};
      std::sort(key.begin(), key.end());
      if (std::binary_search(part.ghost_keys.begin(), part.ghost_keys.end(), key)) owned[c] = 0;
    }

    auto global_vertex = [&](int lv) {
      const std::int64_t gid = pm.gids[lv];
      auto it = by_gid.find(gid);
      if (it != by_gid.end()) {
        const int g = it->second;
        if (!(out.mesh.coords[g] == pm.coords[lv]))
          throw std::runtime_error("merge_parts: vertex gid " + std::to_string(gid) +
                                   " has inconsistent coordinates across parts");
        return g;
      }
      const int g = out.mesh.vertex_count();
      by_gid.emplace(gid, g);
      out.mesh.coords.push_back(pm.coords[lv]);
      out.mesh.gids.push_back(gid);
      out.mesh.vertex_on_boundary.push_back(0);  // recomputed below
      out.mesh.vertex_is_corner.push_back(pm.vertex_is_corner[lv]);
      out.metric.values.push_back(part.metric[lv]);
      return g;
    };

    for (int c = 0; c < pm.cell_count(); ++c) {
      if (!owned[c]) continue;
      for (int i = 0; i < nv; ++i) out.mesh.cells.push_back(global_vertex(pm.cell(c)[i]));
    }

    // Real boundary facets owned by this part (incident cell not a ghost).
    std::map<std::array<int, 3>, int> facet_cell;
    for (int c = 0; c < pm.cell_count(); ++c) {
      auto k = pm.cell(c);
      for (int i = 0; i < nv; ++i) {
        std::array<int, 3> f = {-1, -1, -1};
        int m = 0;
        for (int j = 0; j < nv; ++j)
          if (j != i) f[m++] = k[j];
        std::sort(f.begin(), f.end());
        facet_cell[f] = c;
      }
    }
    for (int f = 0; f < pm.bfacet_count(); ++f) {
      if (pm.bmarkers[f] == kInterfaceMarker) continue;
      auto e = pm.bfacet(f);
      std::array<int, 3> key = {e[0], e[1], dim == 3 ? e[2] : -1};
      std::sort(key.begin(), key.end());
      auto it = facet_cell.find(key);
      if (it == facet_cell.end() || !owned[it->second]) continue;
      std::array<std::int64_t, 3> gkey = {pm.gids[e[0]], pm.gids[e[1]],
                                          dim == 3 ? pm.gids[e[2]] : -1};
      std::sort(gkey.begin(), gkey.end());
      if (seen_bfacets.emplace(gkey, pm.bmarkers[f]).second) {
        for (int i = 0; i < dim; ++i) out.mesh.bfacets.push_back(global_vertex(e[i]));
        out.mesh.bmarkers.push_back(pm.bmarkers[f]);
      }
    }
  }

  for (int f = 0; f < out.mesh.bfacet_count(); ++f)
    for (int i = 0; i < dim; ++i) out.mesh.vertex_on_boundary[out.mesh.bfacet(f)[i]] = 1;
  out.mesh.validate();
  return out;
}

std::uint64_t cell_fingerprint(const SimplicialMesh& mesh, int c) {
  std::array<std::int64_t, 4> gids = {mesh.gids[mesh.cell(c)[0]], mesh.gids[mesh.cell(c)[1]],
                                      mesh.gids[mesh.cell(c)[2]],
                                      mesh.dim == 3 ? mesh.gids[mesh.cell(c)[3]] : -1};
  std::array<int, 4> order = {0, 1, 2, 3};
  std::sort(order.begin(), order.end(), [&](int a, int b) { return gids[a] < gids[b]; });

  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t x) {
    h ^= x;
    h *= 1099511628211ull;
  };
  for (int i : order) {
    mix((std::uint64_t)gids[i]);
    if (gids[i] < 0) continue;
    const Vec3& p = mesh.coords[mesh.cell(c)[i]];
    std::uint64_t bits;
    for (int k = 0; k < 3; ++k) {
      std::memcpy(&bits, &p.v[k], sizeof bits);
      mix(bits);
    }
  }
  return h;
}

namespace {

int worker_cap() {
  if (const char* env = std::getenv("ANISOMESH_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : (int)hw;
}

RemeshParams params_for(const Submesh& sub, int iter) {
  RemeshParams params;
  params.frozen_cells.insert(sub.frozen_cells.begin(), sub.frozen_cells.end());
  params.new_gid_base = ((std::int64_t)(iter + 1) << 42) | ((std::int64_t)(sub.part_id + 1) << 26);
  return params;
}

}  // namespace

AdaptResult parallel_adapt(const SimplicialMesh& mesh, const MetricField& metric,
                           const AdaptOptions& opts) {
  opts.validate();
  if (mesh.dim != 2) throw std::invalid_argument("parallel_adapt: 2D meshes only");

  if (opts.num_parts == 1) {
    // One part has no interfaces to migrate; a single serial pass is complete.
    return adapt(mesh, metric, RemeshParams{});
  }

  AdaptResult current{mesh, metric};
  for (int iter = 0; iter < opts.parallel_iters; ++iter) {
    const auto parts = partition(current.mesh, opts.num_parts, opts.seed + iter);

    std::vector<Submesh> subs(parts.size());
    for (size_t p = 0; p < parts.size(); ++p)
      subs[p] = extract_submesh(current.mesh, current.metric, parts[p]);

    std::vector<AdaptedPart> results(parts.size());
    std::atomic<size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&]() {
      while (true) {
        const size_t p = next.fetch_add(1);
        if (p >= subs.size()) return;
        try {
          AdaptResult r = adapt(subs[p].mesh, subs[p].metric, params_for(subs[p], iter));
          results[p] = {subs[p].part_id, std::move(r.mesh), std::move(r.metric),
                        std::move(subs[p].ghost_keys)};
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };

    const int nw = std::min((int)subs.size(), worker_cap());
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    current = merge_parts(std::move(results));
  }
  return current;
}

}  // namespace aniso
