#include "anisomesh/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

namespace aniso {

namespace {

double tri_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
}

double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return dot(b - a, cross(c - a, d - a)) / 6.0;
}

// Sorted facet key for incidence maps (-1 padding for 2D edges).
std::array<int, 3> facet_key(std::span<const int> f) {
  std::array<int, 3> k = {f[0], f[1], f.size() > 2 ? f[2] : -1};
  std::sort(k.begin(), k.end());
  return k;
}

// Facet of `cell` opposite local vertex i, as a sorted key.
std::array<int, 3> opposite_facet_key(std::span<const int> cell, int i) {
  std::array<int, 3> k = {-1, -1, -1};
  int m = 0;
  for (int j = 0; j < (int)cell.size(); ++j)
    if (j != i) k[m++] = cell[j];
  std::sort(k.begin(), k.end());
  return k;
}

}  // namespace

double SimplicialMesh::cell_measure(int c) const {
  auto k = cell(c);
  if (dim == 2) return tri_area(coords[k[0]], coords[k[1]], coords[k[2]]);
  return tet_volume(coords[k[0]], coords[k[1]], coords[k[2]], coords[k[3]]);
}

Vec3 SimplicialMesh::cell_barycenter(int c) const {
  auto k = cell(c);
  Vec3 b;
  for (int i = 0; i <= dim; ++i) b += coords[k[i]];
  return (1.0 / (dim + 1)) * b;
}

const SimplicialMesh::Adjacency& SimplicialMesh::adjacency() const {
  if (adj_.valid) return adj_;
  const int n = vertex_count(), nc = cell_count(), nv = dim + 1;

  adj_.star_offsets.assign(n + 1, 0);
  for (int c = 0; c < nc; ++c)
    for (int i = 0; i < nv; ++i) adj_.star_offsets[cell(c)[i] + 1]++;
  for (int v = 0; v < n; ++v) adj_.star_offsets[v + 1] += adj_.star_offsets[v];
  adj_.star_cells.assign(adj_.star_offsets[n], 0);
  std::vector<int> fill(adj_.star_offsets.begin(), adj_.star_offsets.end() - 1);
  for (int c = 0; c < nc; ++c)
    for (int i = 0; i < nv; ++i) adj_.star_cells[fill[cell(c)[i]]++] = c;

  // Cell neighbors through shared facets (facet i is opposite local vertex i).
  adj_.neighbors.assign((size_t)nc * nv, -1);
  std::map<std::array<int, 3>, std::pair<int, int>> open;  // facet -> (cell, local)
  for (int c = 0; c < nc; ++c) {
    auto k = cell(c);
    for (int i = 0; i < nv; ++i) {
      const std::array<int, 3> f = opposite_facet_key(k, i);
      auto it = open.find(f);
      if (it == open.end()) {
        open[f] = {c, i};
      } else {
        adj_.neighbors[(size_t)c * nv + i] = it->second.first;
        adj_.neighbors[(size_t)it->second.first * nv + it->second.second] = c;
        open.erase(it);
      }
    }
  }

  adj_.edge_list.clear();
  for (int c = 0; c < nc; ++c) {
    auto k = cell(c);
    for (int i = 0; i < nv; ++i)
      for (int j = i + 1; j < nv; ++j)
        adj_.edge_list.push_back({std::min(k[i], k[j]), std::max(k[i], k[j])});
  }
  std::sort(adj_.edge_list.begin(), adj_.edge_list.end());
  adj_.edge_list.erase(std::unique(adj_.edge_list.begin(), adj_.edge_list.end()),
                       adj_.edge_list.end());

  adj_.valid = true;
  return adj_;
}

std::span<const int> SimplicialMesh::vertex_star(int v) const {
  if (v < 0 || v >= vertex_count())
    throw std::invalid_argument("vertex_star: vertex " + std::to_string(v) + " out of range");
  const auto& a = adjacency();
  return {a.star_cells.data() + a.star_offsets[v],
          (size_t)(a.star_offsets[v + 1] - a.star_offsets[v])};
}

std::span<const int> SimplicialMesh::cell_neighbors(int c) const {
  const auto& a = adjacency();
  return {a.neighbors.data() + (size_t)c * (dim + 1), (size_t)(dim + 1)};
}

const std::vector<std::array<int, 2>>& SimplicialMesh::edges() const {
  return adjacency().edge_list;
}

void SimplicialMesh::derive_boundary() {
  std::map<std::array<int, 3>, int> incidence;
  const int nv = dim + 1;
  for (int c = 0; c < cell_count(); ++c) {
    auto k = cell(c);
    for (int i = 0; i < nv; ++i) incidence[opposite_facet_key(k, i)]++;
  }
  bfacets.clear();
  bmarkers.clear();
  for (const auto& [f, count] : incidence) {
    if (count == 1) {
      for (int i = 0; i < dim; ++i) bfacets.push_back(f[3 - dim + i]);
      bmarkers.push_back(1);
    }
  }
}

void SimplicialMesh::derive_vertex_flags() {
  vertex_on_boundary.assign(vertex_count(), 0);
  vertex_is_corner.assign(vertex_count(), 0);
  for (int f = 0; f < bfacet_count(); ++f)
    for (int i = 0; i < dim; ++i) vertex_on_boundary[bfacet(f)[i]] = 1;

  if (dim == 2) {
    // Corners: boundary vertices whose incident boundary edges bend or change marker.
    std::vector<std::vector<int>> at_vertex(vertex_count());
    for (int f = 0; f < bfacet_count(); ++f) {
      at_vertex[bfacet(f)[0]].push_back(f);
      at_vertex[bfacet(f)[1]].push_back(f);
    }
    for (int v = 0; v < vertex_count(); ++v) {
      if (!vertex_on_boundary[v]) continue;
      const auto& fs = at_vertex[v];
      if (fs.size() != 2) {
        vertex_is_corner[v] = 1;
        continue;
      }
      if (bmarkers[fs[0]] != bmarkers[fs[1]]) {
        vertex_is_corner[v] = 1;
        continue;
      }
      auto other = [&](int f) {
        auto e = bfacet(f);
        return e[0] == v ? e[1] : e[0];
      };
      Vec3 d1 = coords[other(fs[0])] - coords[v];
      Vec3 d2 = coords[other(fs[1])] - coords[v];
      const double sine = std::abs(d1[0] * d2[1] - d1[1] * d2[0]);
      if (sine > 1e-9 * norm(d1) * norm(d2)) vertex_is_corner[v] = 1;
    }
  } else {
    // Corners where incident boundary facet normals span all of R^3.
    std::vector<std::vector<Vec3>> normals(vertex_count());
    for (int f = 0; f < bfacet_count(); ++f) {
      auto k = bfacet(f);
      Vec3 n = cross(coords[k[1]] - coords[k[0]], coords[k[2]] - coords[k[0]]);
      const double len = norm(n);
      if (len <= 0.0) continue;
      n = (1.0 / len) * n;
      for (int i = 0; i < 3; ++i) normals[k[i]].push_back(n);
    }
    for (int v = 0; v < vertex_count(); ++v) {
      if (!vertex_on_boundary[v]) continue;
      for (size_t i = 0; i < normals[v].size() && !vertex_is_corner[v]; ++i)
        for (size_t j = i + 1; j < normals[v].size() && !vertex_is_corner[v]; ++j)
          for (size_t k = j + 1; k < normals[v].size(); ++k) {
            const double vol = std::abs(dot(normals[v][i], cross(normals[v][j], normals[v][k])));
            if (vol > 1e-6) {
              vertex_is_corner[v] = 1;
              break;
            }
          }
    }
  }
}

void SimplicialMesh::orient_cells() {
  for (int c = 0; c < cell_count(); ++c) {
    if (cell_measure(c) < 0.0) std::swap(cell(c)[0], cell(c)[1]);
  }
  invalidate_adjacency();
}

void SimplicialMesh::validate() const {
  if (dim != 2 && dim != 3) throw std::runtime_error("mesh: dimension must be 2 or 3");
  const int n = vertex_count();
  if (gids.size() != (size_t)n || vertex_on_boundary.size() != (size_t)n ||
      vertex_is_corner.size() != (size_t)n)
    throw std::runtime_error("mesh: vertex attribute arrays out of sync");
  if (cells.size() % (dim + 1) != 0) throw std::runtime_error("mesh: ragged cell array");
  if (bfacets.size() != (size_t)dim * bmarkers.size())
    throw std::runtime_error("mesh: ragged boundary facet array");

  for (int idx : cells)
    if (idx < 0 || idx >= n) throw std::runtime_error("mesh: cell vertex index out of range");
  for (int idx : bfacets)
    if (idx < 0 || idx >= n) throw std::runtime_error("mesh: facet vertex index out of range");

  for (int c = 0; c < cell_count(); ++c) {
    if (!(cell_measure(c) > 0.0))
      throw std::runtime_error("mesh: cell " + std::to_string(c) + " has non-positive measure");
  }

  std::vector<std::array<int, 4>> sorted_cells(cell_count());
  for (int c = 0; c < cell_count(); ++c) {
    auto k = cell(c);
    sorted_cells[c] = {k[0], k[1], k[2], dim == 3 ? k[3] : -1};
    std::sort(sorted_cells[c].begin(), sorted_cells[c].end());
  }
  std::sort(sorted_cells.begin(), sorted_cells.end());
  if (std::adjacent_find(sorted_cells.begin(), sorted_cells.end()) != sorted_cells.end())
    throw std::runtime_error("mesh: duplicate cell");

  // Boundary closure: facet list must equal the facets incident to one cell.
  std::map<std::array<int, 3>, int> incidence;
  const int nv = dim + 1;
  for (int c = 0; c < cell_count(); ++c) {
    auto k = cell(c);
    for (int i = 0; i < nv; ++i) incidence[opposite_facet_key(k, i)]++;
  }
  std::map<std::array<int, 3>, int> listed;
  for (int f = 0; f < bfacet_count(); ++f) listed[facet_key(bfacet(f))]++;
  for (const auto& [f, count] : incidence) {
    if (count > 2) throw std::runtime_error("mesh: facet shared by more than two cells");
    const auto it = listed.find(f);
    if (count == 1 && it == listed.end())
      throw std::runtime_error("mesh: boundary facet missing from facet list");
    if (count == 2 && it != listed.end())
      throw std::runtime_error("mesh: interior facet listed as boundary");
  }
  for (const auto& [f, count] : listed) {
    if (count > 1) throw std::runtime_error("mesh: duplicate boundary facet");
    auto it = incidence.find(f);
    if (it == incidence.end())
      throw std::runtime_error("mesh: boundary facet references no cell facet");
  }
}

SimplicialMesh structured_mesh(int dim, int n) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("structured_mesh: dim must be 2 or 3");
  if (n < 1) throw std::invalid_argument("structured_mesh: n must be >= 1");

  SimplicialMesh mesh;
  mesh.dim = dim;
  const double h = 1.0 / n;

  if (dim == 2) {
    auto vid = [&](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i) mesh.coords.push_back({i * h, j * h, 0.0});
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        // Diagonal from (i,j) to (i+1,j+1), both triangles counterclockwise.
        mesh.cells.insert(mesh.cells.end(), {vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
        mesh.cells.insert(mesh.cells.end(), {vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
      }
    }
  } else {
    auto vid = [&](int i, int j, int k) { return (k * (n + 1) + j) * (n + 1) + i; };
    for (int k = 0; k <= n; ++k)
      for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) mesh.coords.push_back({i * h, j * h, k * h});
    // Kuhn subdivision: six tetrahedra per cube, one per axis permutation.
    const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (int k = 0; k < n; ++k) {
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          for (const auto& p : perms) {
            int c[3] = {i, j, k};
            int verts[4];
            verts[0] = vid(c[0], c[1], c[2]);
            for (int s = 0; s < 3; ++s) {
              c[p[s]] += 1;
              verts[s + 1] = vid(c[0], c[1], c[2]);
            }
            mesh.cells.insert(mesh.cells.end(), {verts[0], verts[1], verts[2], verts[3]});
          }
        }
      }
    }
  }

  mesh.gids.resize(mesh.vertex_count());
  for (int v = 0; v < mesh.vertex_count(); ++v) mesh.gids[v] = v;
  mesh.orient_cells();
  mesh.derive_boundary();
  mesh.derive_vertex_flags();
  return mesh;
}

SimplicialMesh build_from_cells(int dim, std::vector<Vec3> coords, std::vector<int> cells) {
  SimplicialMesh mesh;
  mesh.dim = dim;
  mesh.coords = std::move(coords);
  mesh.cells = std::move(cells);
  mesh.gids.resize(mesh.vertex_count());
  for (int v = 0; v < mesh.vertex_count(); ++v) mesh.gids[v] = v;
  mesh.orient_cells();
  mesh.derive_boundary();
  mesh.derive_vertex_flags();
  return mesh;
}

namespace {

double circumradius2(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double la = norm(b - c), lb = norm(c - a), lc = norm(a - b);
  const double area = std::abs(tri_area(a, b, c));
  if (area <= 0.0) return std::numeric_limits<double>::infinity();
  return la * lb * lc / (4.0 * area);
}

double circumradius3(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3) {
  // Solve 2 (p_i - p_0) . x = |p_i|^2 - |p_0|^2 by Cramer's rule.
  Vec3 rows[3] = {p1 - p0, p2 - p0, p3 - p0};
  double rhs[3];
  for (int i = 0; i < 3; ++i) {
    const Vec3& pi = (i == 0 ? p1 : (i == 1 ? p2 : p3));
    rhs[i] = 0.5 * (norm2(pi) - norm2(p0));
  }
  const double det = dot(rows[0], cross(rows[1], rows[2]));
  if (std::abs(det) <= 0.0) return std::numeric_limits<double>::infinity();
  Vec3 x;
  for (int k = 0; k < 3; ++k) {
    Vec3 cols[3] = {rows[0], rows[1], rows[2]};
    for (int i = 0; i < 3; ++i) cols[i][k] = rhs[i];
    x[k] = dot(cols[0], cross(cols[1], cols[2])) / det;
  }
  return norm(x - p0);
}

}  // namespace

double aspect_ratio(const SimplicialMesh& mesh, int c) {
  auto k = mesh.cell(c);
  const double inf = std::numeric_limits<double>::infinity();
  if (mesh.dim == 2) {
    const Vec3 &a = mesh.coords[k[0]], &b = mesh.coords[k[1]], &cc = mesh.coords[k[2]];
    const double area = std::abs(tri_area(a, b, cc));
    if (area <= 0.0) return inf;
    const double perim = norm(b - a) + norm(cc - b) + norm(a - cc);
    const double r_in = 2.0 * area / perim;
    return circumradius2(a, b, cc) / (2.0 * r_in);
  }
  const Vec3 &a = mesh.coords[k[0]], &b = mesh.coords[k[1]], &cc = mesh.coords[k[2]],
             &d = mesh.coords[k[3]];
  const double vol = std::abs(tet_volume(a, b, cc, d));
  if (vol <= 0.0) return inf;
  double face_area = 0.0;
  const Vec3* p[4] = {&a, &b, &cc, &d};
  for (int i = 0; i < 4; ++i) {
    const Vec3 &u = *p[(i + 1) % 4], &v = *p[(i + 2) % 4], &w = *p[(i + 3) % 4];
    face_area += 0.5 * norm(cross(v - u, w - u));
  }
  const double r_in = 3.0 * vol / face_area;
  return circumradius3(a, b, cc, d) / (3.0 * r_in);
}

double quality(const Vec3& p0, const Vec3& p1, const Vec3& p2, const MetricTensor& m0,
               const MetricTensor& m1, const MetricTensor& m2) {
  const double inf = std::numeric_limits<double>::infinity();
  const double area = tri_area(p0, p1, p2);
  if (!(area > 0.0)) return inf;
  MetricTensor mbar = lerp(lerp(m0, m1, 0.5), m2, 1.0 / 3.0);
  const double det = mbar.det();
  if (!(det > 0.0)) return inf;
  double sum = 0.0;
  const double l01 = edge_length(m0, m1, p1 - p0);
  const double l12 = edge_length(m1, m2, p2 - p1);
  const double l20 = edge_length(m2, m0, p0 - p2);
  sum = l01 * l01 + l12 * l12 + l20 * l20;
  return sum / (4.0 * std::numbers::sqrt3 * std::sqrt(det) * area);
}

double quality(const SimplicialMesh& mesh, const MetricField& field, int c) {
  if (mesh.dim != 2) throw std::invalid_argument("quality: only 2D cells are supported");
  auto k = mesh.cell(c);
  return quality(mesh.coords[k[0]], mesh.coords[k[1]], mesh.coords[k[2]], field[k[0]],
                 field[k[1]], field[k[2]]);
}

MeshStatistics statistics(const SimplicialMesh& mesh) {
  if (mesh.cell_count() == 0) throw std::invalid_argument("statistics: empty mesh");
  MeshStatistics s;
  s.element_count = mesh.cell_count();
  s.vertex_count = mesh.vertex_count();
  s.measure_min = std::numeric_limits<double>::infinity();
  s.measure_max = 0.0;
  double sum = 0.0, sum2 = 0.0;
  int gt2 = 0;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const double ar = aspect_ratio(mesh, c);
    const double m = mesh.cell_measure(c);
    s.ar_max = std::max(s.ar_max, ar);
    sum += ar;
    sum2 += ar * ar;
    if (ar > 2.0) ++gt2;
    s.measure_min = std::min(s.measure_min, m);
    s.measure_max = std::max(s.measure_max, m);
  }
  const double n = mesh.cell_count();
  s.ar_mean = sum / n;
  s.ar_std = std::sqrt(std::max(sum2 / n - s.ar_mean * s.ar_mean, 0.0));
  s.frac_ar_gt2 = gt2 / n;
  return s;
}

double unit_edge_fraction(const SimplicialMesh& mesh, const MetricField& field) {
  const auto& edge_list = mesh.edges();
  if (edge_list.empty()) return 0.0;
  const double lo = 1.0 / std::numbers::sqrt2, hi = std::numbers::sqrt2;
  int in_band = 0;
  for (const auto& e : edge_list) {
    const double l = edge_length(field[e[0]], field[e[1]], mesh.coords[e[1]] - mesh.coords[e[0]]);
    if (l >= lo && l <= hi) ++in_band;
  }
  return (double)in_band / edge_list.size();
}

}  // namespace aniso
