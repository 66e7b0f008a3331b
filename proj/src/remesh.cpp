#include "anisomesh/remesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace aniso {

namespace {

std::uint64_t edge_key(int u, int v) {
  if (u > v) std::swap(u, v);
  return ((std::uint64_t)(std::uint32_t)u << 32) | (std::uint32_t)v;
}

double signed_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
}

// Positive-area guard relative to the longest edge, so legality is scale-free
// but still permissive for legitimately anisotropic cells.
bool area_ok(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double area = signed_area(a, b, c);
  if (!(area > 0.0)) return false;
  const double lmax2 = std::max({norm2(b - a), norm2(c - b), norm2(a - c)});
  return area > 1e-10 * lmax2;
}

// Eigenvalue modulus with a tiny floor; keeps interpolated metrics numerically SPD.
MetricTensor spd_floor(const MetricTensor& m) {
  if (m.spd()) return m;
  EigenDecomposition e = eigendecompose(m);
  const double floor_l = std::max(1e-14 * std::abs(e.values[0]), 1e-300);
  for (int k = 0; k < m.dim(); ++k) e.values[k] = std::max(std::abs(e.values[k]), floor_l);
  return compose(m.dim(), {e.values.data(), (size_t)m.dim()}, {e.vectors.data(), (size_t)m.dim()});
}

// Editable working structure behind the sweep functions. Vertices and
// triangles are append-only with alive flags; stars are maintained
// incrementally and the result is compacted once at the end.
class Remesher {
 public:
  Remesher(const SimplicialMesh& mesh, const MetricField& metric, const RemeshParams& params)
      : params_(params) {
    if (mesh.dim != 2) throw std::invalid_argument("remesher supports 2D meshes only");
    mesh.validate();
    if ((int)metric.size() != mesh.vertex_count())
      throw std::invalid_argument("metric field size does not match mesh");
    for (size_t v = 0; v < metric.size(); ++v)
      if (!metric[v].spd())
        throw std::invalid_argument("adapt: metric is not SPD at vertex " + std::to_string(v));

    verts_.resize(mesh.vertex_count());
    for (int v = 0; v < mesh.vertex_count(); ++v) {
      Vert& vv = verts_[v];
      vv.pos = mesh.coords[v];
      vv.gid = mesh.gids[v];
      vv.metric = metric[v];
      vv.bnd = mesh.vertex_on_boundary[v];
      vv.corner = mesh.vertex_is_corner[v];
    }
    tris_.resize(mesh.cell_count());
    for (int c = 0; c < mesh.cell_count(); ++c) {
      auto k = mesh.cell(c);
      tris_[c].v = {k[0], k[1], k[2]};
      tris_[c].frozen = params.frozen_cells.count(c) > 0;
      for (int i = 0; i < 3; ++i) verts_[k[i]].star.push_back(c);
    }
    for (int f = 0; f < mesh.bfacet_count(); ++f) {
      auto e = mesh.bfacet(f);
      bedge_[edge_key(e[0], e[1])] = mesh.bmarkers[f];
      attach_bnbr(e[0], e[1]);
      attach_bnbr(e[1], e[0]);
    }
    next_gid_ = params.new_gid_base;
    if (next_gid_ < 0) {
      next_gid_ = 0;
      for (const auto& v : verts_) next_gid_ = std::max(next_gid_, v.gid + 1);
    }
  }

  int split_sweep() {
    int count = 0;
    for (const auto& [u, v] : collect_edges()) {
      auto ts = tris_of_edge(u, v);
      if (ts.empty() || any_frozen(ts)) continue;
      if (metric_length(u, v) <= params_.l_split) continue;
      split_edge(u, v, ts);
      ++count;
    }
    return count;
  }

  int collapse_sweep() {
    struct Short {
      double len;
      int u, v;
    };
    std::vector<Short> shorts;
    for (const auto& [u, v] : collect_edges()) {
      const double l = metric_length(u, v);
      if (l < params_.l_collapse) shorts.push_back({l, u, v});
    }
    std::sort(shorts.begin(), shorts.end(), [](const Short& a, const Short& b) {
      if (a.len != b.len) return a.len < b.len;
      return std::pair(a.u, a.v) < std::pair(b.u, b.v);
    });

    int count = 0;
    for (const auto& s : shorts) {
      if (!verts_[s.u].alive || !verts_[s.v].alive) continue;
      if (tris_of_edge(s.u, s.v).empty()) continue;
      if (try_collapse_edge(s.u, s.v)) ++count;
    }
    return count;
  }

  int swap_sweep() {
    int count = 0;
    for (const auto& [u, v] : collect_edges()) {
      if (!verts_[u].alive || !verts_[v].alive) continue;
      if (bedge_.count(edge_key(u, v))) continue;
      auto ts = tris_of_edge(u, v);
      if (ts.size() != 2 || any_frozen(ts)) continue;
      if (try_swap(u, v, ts[0], ts[1])) ++count;
    }
    return count;
  }

  int smooth_sweep() {
    int count = 0;
    for (int v = 0; v < (int)verts_.size(); ++v) {
      if (!verts_[v].alive || verts_[v].corner || verts_[v].star.empty()) continue;
      if (star_frozen(v)) continue;
      if (try_smooth(v)) ++count;
    }
    return count;
  }

  // Outer adaptation loop. Returns total edit count.
  long run() {
    for (int outer = 0; outer < params_.max_outer_sweeps; ++outer) {
      long edits = 0;
      for (int inner = 0; inner < 50; ++inner) {
        const int s = split_sweep();
        edits += s;
        if (params_.validate_each_sweep) check();
        if (s == 0) break;
      }
      edits += collapse_sweep();
      if (params_.validate_each_sweep) check();
      edits += swap_sweep();
      if (params_.validate_each_sweep) check();
      edits += smooth_sweep();
      if (params_.validate_each_sweep) check();
      total_edits_ += edits;
      if (edits < params_.min_edit_fraction * alive_edge_count()) break;
    }
    return total_edits_;
  }

  long alive_edge_count() { return (long)collect_edges().size(); }

  AdaptResult extract() const {
    AdaptResult out;
    out.mesh.dim = 2;
    out.metric.dim = 2;
    std::vector<int> vmap(verts_.size(), -1);
    for (int v = 0; v < (int)verts_.size(); ++v) {
      if (!verts_[v].alive) continue;
      vmap[v] = out.mesh.vertex_count();
      out.mesh.coords.push_back(verts_[v].pos);
      out.mesh.gids.push_back(verts_[v].gid);
      out.mesh.vertex_on_boundary.push_back(verts_[v].bnd);
      out.mesh.vertex_is_corner.push_back(verts_[v].corner);
      out.metric.values.push_back(verts_[v].metric);
    }
    for (const auto& t : tris_) {
      if (!t.alive) continue;
      for (int i = 0; i < 3; ++i) out.mesh.cells.push_back(vmap[t.v[i]]);
    }
    std::vector<std::array<int, 3>> bes;  // (u, v, marker), normalized and sorted
    for (const auto& [key, marker] : bedge_) {
      const int u = vmap[(int)(key >> 32)], v = vmap[(int)(key & 0xffffffffu)];
      bes.push_back({std::min(u, v), std::max(u, v), marker});
    }
    std::sort(bes.begin(), bes.end());
    for (const auto& be : bes) {
      out.mesh.bfacets.insert(out.mesh.bfacets.end(), {be[0], be[1]});
      out.mesh.bmarkers.push_back(be[2]);
    }
    return out;
  }

  void check() const {
    AdaptResult snapshot = extract();
    snapshot.mesh.validate();
  }

 private:
  struct Vert {
    Vec3 pos;
    std::int64_t gid = 0;
    MetricTensor metric;
    std::uint8_t alive = 1, bnd = 0, corner = 0;
    std::array<int, 2> bnbr = {-1, -1};
    std::vector<int> star;
  };
  struct Tri {
    std::array<int, 3> v;
    std::uint8_t alive = 1, frozen = 0;
  };

  void attach_bnbr(int v, int nbr) {
    auto& bn = verts_[v].bnbr;
    if (bn[0] == -1)
      bn[0] = nbr;
    else if (bn[1] == -1)
      bn[1] = nbr;
    else
      verts_[v].corner = 1;  // non-manifold boundary vertex, pin it
  }

  void replace_bnbr(int v, int from, int to) {
    auto& bn = verts_[v].bnbr;
    if (bn[0] == from)
      bn[0] = to;
    else if (bn[1] == from)
      bn[1] = to;
  }

  double metric_length(int u, int v) const {
    return edge_length(verts_[u].metric, verts_[v].metric, verts_[v].pos - verts_[u].pos);
  }

  double tri_quality(const Tri& t) const {
    return quality(verts_[t.v[0]].pos, verts_[t.v[1]].pos, verts_[t.v[2]].pos,
                   verts_[t.v[0]].metric, verts_[t.v[1]].metric, verts_[t.v[2]].metric);
  }

  std::vector<std::pair<int, int>> collect_edges() const {
    std::vector<std::pair<int, int>> edges;
    edges.reserve(tris_.size() * 3 / 2);
    for (const auto& t : tris_) {
      if (!t.alive) continue;
      for (int i = 0; i < 3; ++i) {
        const int a = t.v[i], b = t.v[(i + 1) % 3];
        edges.emplace_back(std::min(a, b), std::max(a, b));
      }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
  }

  // Alive triangles containing both endpoints (1 boundary / 2 interior).
  std::vector<int> tris_of_edge(int u, int v) const {
    std::vector<int> out;
    for (int t : verts_[u].star) {
      const auto& tv = tris_[t].v;
      if (tv[0] == v || tv[1] == v || tv[2] == v) out.push_back(t);
    }
    return out;
  }

  bool any_frozen(const std::vector<int>& ts) const {
    return std::any_of(ts.begin(), ts.end(), [&](int t) { return tris_[t].frozen != 0; });
  }

  bool star_frozen(int v) const {
    return std::any_of(verts_[v].star.begin(), verts_[v].star.end(),
                       [&](int t) { return tris_[t].frozen != 0; });
  }

  int opposite_vertex(int t, int u, int v) const {
    for (int x : tris_[t].v)
      if (x != u && x != v) return x;
    return -1;
  }

  // Sorted unique neighbor vertices of v.
  std::vector<int> neighbors(int v) const {
    std::vector<int> nbrs;
    for (int t : verts_[v].star)
      for (int x : tris_[t].v)
        if (x != v) nbrs.push_back(x);
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    return nbrs;
  }

  void kill_tri(int t) {
    tris_[t].alive = 0;
    for (int x : tris_[t].v) {
      auto& star = verts_[x].star;
      star.erase(std::remove(star.begin(), star.end(), t), star.end());
    }
  }

  int add_tri(int a, int b, int c) {
    const int t = (int)tris_.size();
    tris_.push_back({{a, b, c}, 1, 0});
    verts_[a].star.push_back(t);
    verts_[b].star.push_back(t);
    verts_[c].star.push_back(t);
    return t;
  }

  void split_edge(int u, int v, const std::vector<int>& ts) {
    const Vec3 e = verts_[v].pos - verts_[u].pos;
    const double l0 = std::sqrt(std::max(verts_[u].metric.quad(e), 0.0));
    const double l1 = std::sqrt(std::max(verts_[v].metric.quad(e), 0.0));
    const double t = std::clamp(l0 / (l0 + l1), 0.01, 0.99);

    const int m = (int)verts_.size();
    Vert vm;
    vm.pos = verts_[u].pos + t * e;
    vm.gid = next_gid_++;
    vm.metric = spd_floor(lerp(verts_[u].metric, verts_[v].metric, t));
    verts_.push_back(vm);

    auto it = bedge_.find(edge_key(u, v));
    if (it != bedge_.end()) {
      const int marker = it->second;
      bedge_.erase(it);
      bedge_[edge_key(u, m)] = marker;
      bedge_[edge_key(m, v)] = marker;
      verts_[m].bnd = 1;
      verts_[m].bnbr = {u, v};
      replace_bnbr(u, v, m);
      replace_bnbr(v, u, m);
    }

    for (int ti : ts) {
      const std::array<int, 3> k = tris_[ti].v;
      kill_tri(ti);
      std::array<int, 3> child1 = k, child2 = k;
      for (int i = 0; i < 3; ++i) {
        if (k[i] == v) child1[i] = m;
        if (k[i] == u) child2[i] = m;
      }
      add_tri(child1[0], child1[1], child1[2]);
      add_tri(child2[0], child2[1], child2[2]);
    }
  }

  // Remove vertex r onto kept vertex k if legal.
  bool collapse_allowed(int r, int k) const {
    if (verts_[r].corner) return false;
    if (verts_[r].bnd && (!verts_[k].bnd || !bedge_.count(edge_key(r, k)))) return false;
    if (star_frozen(r)) return false;

    // Link condition: shared neighbors must be exactly the vertices opposite
    // the collapsing edge, otherwise the collapse pinches the mesh.
    auto rn = neighbors(r), kn = neighbors(k);
    std::vector<int> common;
    std::set_intersection(rn.begin(), rn.end(), kn.begin(), kn.end(), std::back_inserter(common));
    std::vector<int> opposite;
    for (int t : tris_of_edge(r, k)) opposite.push_back(opposite_vertex(t, r, k));
    std::sort(opposite.begin(), opposite.end());
    if (common != opposite) return false;

    for (int t : verts_[r].star) {
      const auto& tv = tris_[t].v;
      if (tv[0] == k || tv[1] == k || tv[2] == k) continue;  // dies with the edge
      Vec3 p[3];
      for (int i = 0; i < 3; ++i) p[i] = tv[i] == r ? verts_[k].pos : verts_[tv[i]].pos;
      if (!area_ok(p[0], p[1], p[2])) return false;
    }

    // No new over-long edges around the kept vertex. Edges to the shared
    // neighbors already exist and keep their length.
    for (int w : rn) {
      if (w == k || std::binary_search(common.begin(), common.end(), w)) continue;
      if (metric_length(k, w) > params_.l_split) return false;
    }
    return true;
  }

  void collapse_edge(int r, int k) {
    const std::vector<int> star = verts_[r].star;  // copy, edits below
    for (int t : star) {
      const auto& tv = tris_[t].v;
      if (tv[0] == k || tv[1] == k || tv[2] == k) {
        kill_tri(t);
      } else {
        // Retarget r -> k in place, keeping star lists consistent.
        auto& mv = tris_[t].v;
        for (int i = 0; i < 3; ++i)
          if (mv[i] == r) mv[i] = k;
        auto& rstar = verts_[r].star;
        rstar.erase(std::remove(rstar.begin(), rstar.end(), t), rstar.end());
        verts_[k].star.push_back(t);
      }
    }
    if (verts_[r].bnd) {
      const int a = verts_[r].bnbr[0] == k ? verts_[r].bnbr[1] : verts_[r].bnbr[0];
      const int marker = bedge_.at(edge_key(a, r));
      bedge_.erase(edge_key(a, r));
      bedge_.erase(edge_key(r, k));
      bedge_[edge_key(a, k)] = marker;
      replace_bnbr(a, r, k);
      replace_bnbr(k, r, a);
    }
    verts_[r].alive = 0;
    verts_[r].star.clear();
  }

  bool try_collapse_edge(int u, int v) {
    const bool ub = verts_[u].bnd, vb = verts_[v].bnd;
    std::array<std::pair<int, int>, 2> attempts;  // (removed, kept)
    int n = 0;
    if (ub && !vb) {
      attempts[n++] = {v, u};
    } else if (vb && !ub) {
      attempts[n++] = {u, v};
    } else {
      attempts[n++] = {v, u};
      attempts[n++] = {u, v};
    }
    for (int i = 0; i < n; ++i) {
      const auto [r, k] = attempts[i];
      if (collapse_allowed(r, k)) {
        collapse_edge(r, k);
        return true;
      }
    }
    return false;
  }

  bool try_swap(int u, int v, int t1, int t2) {
    // Orient so that triangle (u, v, a) is counterclockwise and b sits on the
    // other side; the flipped diagonal is (a, b).
    int a = opposite_vertex(t1, u, v);
    int b = opposite_vertex(t2, u, v);
    const auto& k1 = tris_[t1].v;
    bool t1_has_uv = false;  // u immediately before v in cyclic order
    for (int i = 0; i < 3; ++i)
      if (k1[i] == u && k1[(i + 1) % 3] == v) t1_has_uv = true;
    if (!t1_has_uv) std::swap(a, b);

    if (!tris_of_edge(a, b).empty()) return false;  // edge already exists elsewhere

    const Vec3 &pu = verts_[u].pos, &pv = verts_[v].pos, &pa = verts_[a].pos, &pb = verts_[b].pos;
    if (!area_ok(pu, pb, pa) || !area_ok(pb, pv, pa)) return false;

    const double worst_now = std::max(tri_quality(tris_[t1]), tri_quality(tris_[t2]));
    const double q1 = quality(pu, pb, pa, verts_[u].metric, verts_[b].metric, verts_[a].metric);
    const double q2 = quality(pb, pv, pa, verts_[b].metric, verts_[v].metric, verts_[a].metric);
    const double worst_new = std::max(q1, q2);
    if (!(worst_new <= worst_now * (1.0 - params_.quality_swap_threshold))) return false;

    kill_tri(t1);
    kill_tri(t2);
    add_tri(u, b, a);
    add_tri(b, v, a);
    return true;
  }

  bool try_smooth(int v) {
    Vert& vv = verts_[v];
    Vec3 target;
    double wsum = 0.0;
    double ref_len = 0.0;
    int ref_count = 0;

    if (!vv.bnd) {
      for (int w : neighbors(v)) {
        const double weight = std::abs(metric_length(v, w) - 1.0);
        wsum += weight;
        target += weight * verts_[w].pos;
        ref_len += norm(verts_[w].pos - vv.pos);
        ++ref_count;
      }
    } else {
      const int a = vv.bnbr[0], b = vv.bnbr[1];
      if (a < 0 || b < 0) return false;
      for (int w : {a, b}) {
        const double weight = std::abs(metric_length(v, w) - 1.0);
        wsum += weight;
        target += weight * verts_[w].pos;
        ref_len += norm(verts_[w].pos - vv.pos);
        ++ref_count;
      }
    }
    if (wsum < 1e-12 || ref_count == 0) return false;
    target = (1.0 / wsum) * target;

    if (vv.bnd) {
      // Slide along the (straight) boundary span between the two neighbors.
      const Vec3 &pa = verts_[vv.bnbr[0]].pos, &pb = verts_[vv.bnbr[1]].pos;
      const Vec3 span = pb - pa;
      const double len2 = norm2(span);
      if (len2 <= 0.0) return false;
      const double s = std::clamp(dot(target - pa, span) / len2, 0.05, 0.95);
      target = pa + s * span;
    }

    const Vec3 old_pos = vv.pos;
    const Vec3 new_pos = old_pos + params_.smoothing_relaxation * (target - old_pos);
    const double mean_len = ref_len / ref_count;
    if (norm(new_pos - old_pos) < 1e-6 * mean_len) return false;

    double worst_before = 0.0;
    for (int t : vv.star) worst_before = std::max(worst_before, tri_quality(tris_[t]));

    vv.pos = new_pos;
    double worst_after = 0.0;
    bool valid = true;
    for (int t : vv.star) {
      const auto& tv = tris_[t].v;
      if (!area_ok(verts_[tv[0]].pos, verts_[tv[1]].pos, verts_[tv[2]].pos)) {
        valid = false;
        break;
      }
      worst_after = std::max(worst_after, tri_quality(tris_[t]));
    }
    if (!valid || worst_after > worst_before * (1.0 + 1e-12)) {
      vv.pos = old_pos;
      return false;
    }
    return true;
  }

  RemeshParams params_;
  std::vector<Vert> verts_;
  std::vector<Tri> tris_;
  std::unordered_map<std::uint64_t, int> bedge_;
  std::int64_t next_gid_ = 0;
  long total_edits_ = 0;
};

// Shared wrapper for the single-sweep entry points.
template <typename Sweep>
int run_single_sweep(SimplicialMesh& mesh, MetricField& metric, const RemeshParams& params,
                     Sweep&& sweep) {
  Remesher r(mesh, metric, params);
  const int count = sweep(r);
  AdaptResult out = r.extract();
  mesh = std::move(out.mesh);
  metric = std::move(out.metric);
  return count;
}

}  // namespace

int split_long_edges(SimplicialMesh& mesh, MetricField& metric, const RemeshParams& params) {
  return run_single_sweep(mesh, metric, params, [](Remesher& r) { return r.split_sweep(); });
}

int collapse_short_edges(SimplicialMesh& mesh, MetricField& metric, const RemeshParams& params) {
  return run_single_sweep(mesh, metric, params, [](Remesher& r) { return r.collapse_sweep(); });
}

int swap_edges(SimplicialMesh& mesh, MetricField& metric, const RemeshParams& params) {
  return run_single_sweep(mesh, metric, params, [](Remesher& r) { return r.swap_sweep(); });
}

int smooth_vertices(SimplicialMesh& mesh, MetricField& metric, const RemeshParams& params) {
  return run_single_sweep(mesh, metric, params, [](Remesher& r) { return r.smooth_sweep(); });
}

AdaptResult adapt(const SimplicialMesh& mesh, const MetricField& metric,
                  const RemeshParams& params) {
  Remesher r(mesh, metric, params);
  r.run();
  AdaptResult out = r.extract();
  out.mesh.validate();
  return out;
}

}  // namespace aniso
