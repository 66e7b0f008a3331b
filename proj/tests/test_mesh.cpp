#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "anisomesh/mesh.hpp"
#include "anisomesh/mesh_io.hpp"

using namespace aniso;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines_equal(const std::string& text, const std::string& needle) {
  std::stringstream ss(text);
  std::string line;
  int count = 0;
  while (std::getline(ss, line))
    if (line == needle) ++count;
  return count;
}

}  // namespace

TEST_CASE("structured mesh construction") {
  const SimplicialMesh tiny = structured_mesh(2, 1);
  CHECK(tiny.cell_count() == 2);
  CHECK(tiny.vertex_count() == 4);
  CHECK(tiny.bfacet_count() == 4);
  tiny.validate();

  const SimplicialMesh square = structured_mesh(2, 10);
  CHECK(square.cell_count() == 200);
  CHECK(square.vertex_count() == 121);
  square.validate();

  const SimplicialMesh cube = structured_mesh(3, 10);
  CHECK(cube.cell_count() == 6000);
  CHECK(cube.vertex_count() == 1331);
  cube.validate();

  CHECK_THROWS_AS(structured_mesh(2, 0), std::invalid_argument);
  CHECK_THROWS_AS(structured_mesh(4, 1), std::invalid_argument);

  // Four geometric corners flagged on the unit square.
  int corners = 0;
  for (int v = 0; v < square.vertex_count(); ++v) corners += square.vertex_is_corner[v];
  CHECK(corners == 4);
}

TEST_CASE("vertex stars") {
  const SimplicialMesh tiny = structured_mesh(2, 1);
  // Corner (1,0) belongs to exactly one triangle in the diagonal split.
  int lone = -1;
  for (int v = 0; v < tiny.vertex_count(); ++v)
    if (tiny.coords[v][0] == 1.0 && tiny.coords[v][1] == 0.0) lone = v;
  REQUIRE(lone >= 0);
  const auto star = tiny.vertex_star(lone);
  CHECK(star.size() == 1);

  const SimplicialMesh mesh = structured_mesh(2, 2);
  int center = -1;
  for (int v = 0; v < mesh.vertex_count(); ++v)
    if (mesh.coords[v][0] == 0.5 && mesh.coords[v][1] == 0.5) center = v;
  REQUIRE(center >= 0);
  CHECK(mesh.vertex_star(center).size() == 6);

  for (int v = 0; v < mesh.vertex_count(); ++v) {
    for (int c : mesh.vertex_star(v)) {
      auto k = mesh.cell(c);
      CHECK((k[0] == v || k[1] == v || k[2] == v));
    }
  }

  CHECK_THROWS_AS(mesh.vertex_star(-1), std::invalid_argument);
  CHECK_THROWS_AS(mesh.vertex_star(mesh.vertex_count()), std::invalid_argument);
}

TEST_CASE("aspect ratio") {
  const double s3 = std::sqrt(3.0);
  const SimplicialMesh equilateral =
      build_from_cells(2, {{0, 0, 0}, {1, 0, 0}, {0.5, 0.5 * s3, 0}}, {0, 1, 2});
  CHECK(aspect_ratio(equilateral, 0) == doctest::Approx(1.0).epsilon(1e-12));

  const SimplicialMesh right =
      build_from_cells(2, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {0, 1, 2});
  const double expected = std::sqrt(2.0) / (2.0 * (2.0 - std::sqrt(2.0)));
  CHECK(aspect_ratio(right, 0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(aspect_ratio(right, 0) == doctest::Approx(1.2071).epsilon(1e-4));

  const SimplicialMesh stretched =
      build_from_cells(2, {{0, 0, 0}, {10, 0, 0}, {0, 1, 0}}, {0, 1, 2});
  CHECK(aspect_ratio(stretched, 0) > 2.0);

  // Regular tetrahedron has aspect ratio exactly 1.
  const double a = 1.0;
  const SimplicialMesh tet = build_from_cells(
      3,
      {{0, 0, 0}, {a, 0, 0}, {0.5 * a, 0.5 * s3 * a, 0}, {0.5 * a, a * s3 / 6.0, a * std::sqrt(2.0 / 3.0)}},
      {0, 1, 2, 3});
  CHECK(aspect_ratio(tet, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("metric quality") {
  const double s3 = std::sqrt(3.0);
  const SimplicialMesh one =
      build_from_cells(2, {{0, 0, 0}, {1, 0, 0}, {0.5, 0.5 * s3, 0}}, {0, 1, 2});
  const MetricField id = MetricField::constant(3, MetricTensor::identity(2));
  CHECK(quality(one, id, 0) == doctest::Approx(1.0).epsilon(1e-12));

  // Scale-invariant under the Euclidean metric.
  const SimplicialMesh two =
      build_from_cells(2, {{0, 0, 0}, {2, 0, 0}, {1, s3, 0}}, {0, 1, 2});
  CHECK(quality(two, id, 0) == doctest::Approx(1.0).epsilon(1e-12));

  // Any non-equilateral cell is strictly worse than 1.
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 p1{coord(rng), coord(rng), 0}, p2{coord(rng), coord(rng), 0},
        p3{coord(rng), coord(rng), 0};
    const double area = 0.5 * ((p2[0] - p1[0]) * (p3[1] - p1[1]) - (p2[1] - p1[1]) * (p3[0] - p1[0]));
    if (std::abs(area) < 1e-3) continue;
    const SimplicialMesh m = build_from_cells(2, {p1, p2, p3}, {0, 1, 2});
    CHECK(quality(m, id, 0) >= 1.0 - 1e-12);
  }

  // A metric-unit equilateral triangle under an anisotropic metric: map the
  // unit equilateral through the inverse metric square root.
  MetricTensor aniso_m = MetricTensor::diagonal(2, 4.0, 0.25);
  const SimplicialMesh stretched = build_from_cells(
      2, {{0, 0, 0}, {0.5, 0, 0}, {0.25, s3, 0}}, {0, 1, 2});
  const MetricField af = MetricField::constant(3, aniso_m);
  CHECK(quality(stretched, af, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("statistics") {
  const SimplicialMesh mesh = structured_mesh(2, 10);
  const MeshStatistics s = statistics(mesh);
  CHECK(s.element_count == 200);
  CHECK(s.vertex_count == 121);
  CHECK(s.measure_min > 0.0);
  CHECK(s.measure_min == doctest::Approx(s.measure_max).epsilon(1e-12));
  CHECK(s.ar_max >= s.ar_mean);
  CHECK(s.ar_mean >= 1.0);

  // All cells congruent right isoceles triangles: zero spread, no AR above 2.
  const double expected = std::sqrt(2.0) / (2.0 * (2.0 - std::sqrt(2.0)));
  CHECK(s.ar_mean == doctest::Approx(expected).epsilon(1e-12));
  CHECK(s.ar_std == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(s.frac_ar_gt2 == 0.0);
}

TEST_CASE("euler characteristic on the unit square") {
  for (int n : {1, 4, 9}) {
    const SimplicialMesh mesh = structured_mesh(2, n);
    const int v = mesh.vertex_count();
    const int e = (int)mesh.edges().size();
    const int f = mesh.cell_count();
    CHECK(v - e + f == 1);
  }
}

TEST_CASE("medit round trip") {
  const std::string path = "io_test_square.mesh";
  const SimplicialMesh mesh = structured_mesh(2, 3);
  write_medit(mesh, path);
  const SimplicialMesh back = read_medit(path);

  REQUIRE(back.vertex_count() == mesh.vertex_count());
  REQUIRE(back.cell_count() == mesh.cell_count());
  REQUIRE(back.bfacet_count() == mesh.bfacet_count());
  for (int v = 0; v < mesh.vertex_count(); ++v)
    for (int k = 0; k < 2; ++k)
      CHECK(back.coords[v][k] == doctest::Approx(mesh.coords[v][k]).epsilon(1e-15));
  CHECK(back.cells == mesh.cells);
  back.validate();
  std::remove(path.c_str());
}

TEST_CASE("medit round trip on a perturbed mesh, 2D and 3D") {
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> jitter(-0.02, 0.02);

  for (int dim : {2, 3}) {
    SimplicialMesh mesh = structured_mesh(dim, 4);
    for (int v = 0; v < mesh.vertex_count(); ++v) {
      if (mesh.vertex_on_boundary[v]) continue;
      for (int k = 0; k < dim; ++k) mesh.coords[v][k] += jitter(rng);
    }
    mesh.validate();

    const std::string path = "io_test_perturbed.mesh";
    write_medit(mesh, path);
    const SimplicialMesh back = read_medit(path);
    REQUIRE(back.vertex_count() == mesh.vertex_count());
    CHECK(back.cells == mesh.cells);
    for (int v = 0; v < mesh.vertex_count(); ++v)
      for (int k = 0; k < dim; ++k) CHECK(back.coords[v][k] == mesh.coords[v][k]);
    std::remove(path.c_str());
  }
}

TEST_CASE("medit file layout for the two-triangle square") {
  const std::string path = "io_test_tiny.mesh";
  write_medit(structured_mesh(2, 1), path);
  const std::string text = slurp(path);
  CHECK(text.find("MeshVersionFormatted 2") == 0);
  CHECK(text.find("Dimension 2") != std::string::npos);
  CHECK(text.find("Vertices\n4") != std::string::npos);
  CHECK(text.find("Triangles\n2") != std::string::npos);
  CHECK(text.find("Edges\n4") != std::string::npos);
  CHECK(text.find("End") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("medit parse errors carry line information") {
  const std::string path = "io_test_bad.mesh";
  {
    std::ofstream out(path);
    out << "MeshVersionFormatted 2\nDimension 2\nBogusSection\n";
  }
  CHECK_THROWS_WITH_AS(read_medit(path), doctest::Contains("BogusSection"), std::runtime_error);
  {
    std::ofstream out(path);
    out << "MeshVersionFormatted 2\nDimension 2\nVertices\n3\n0 0 0\n1 0 0\n";
  }
  CHECK_THROWS_AS(read_medit(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("sol round trip and layout") {
  const SimplicialMesh mesh = structured_mesh(2, 1);
  const MetricField field = MetricField::constant(4, MetricTensor::identity(2));
  const std::string path = "io_test_metric.sol";
  write_sol(field, path);

  const std::string text = slurp(path);
  CHECK(text.find("SolAtVertices\n4\n1 3\n") != std::string::npos);
  CHECK(count_lines_equal(text, "1 0 1") == 4);

  const MetricField back = read_sol(path, mesh);
  REQUIRE(back.size() == field.size());
  for (size_t v = 0; v < field.size(); ++v)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j <= i; ++j) CHECK(back[v](i, j) == field[v](i, j));

  // Vertex-count mismatch is a structured error.
  CHECK_THROWS_WITH_AS(read_sol(path, structured_mesh(2, 2)), doctest::Contains("vertices"),
                       std::runtime_error);
  std::remove(path.c_str());

  std::mt19937 rng(59);
  std::uniform_real_distribution<double> val(0.5, 3.0);
  const SimplicialMesh cube = structured_mesh(3, 1);
  MetricField rand3(3, cube.vertex_count());
  for (auto& m : rand3.values) {
    m = MetricTensor::diagonal(3, val(rng), val(rng), val(rng));
    m.set(1, 0, 0.1 * val(rng));
    m.set(2, 1, 0.1 * val(rng));
  }
  write_sol(rand3, path);
  const MetricField back3 = read_sol(path, cube);
  for (size_t v = 0; v < rand3.size(); ++v)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j <= i; ++j) CHECK(back3[v](i, j) == rand3[v](i, j));
  std::remove(path.c_str());
}

TEST_CASE("vtk output") {
  const std::string path = "io_test_mesh.vtk";

  const SimplicialMesh tiny = structured_mesh(2, 1);
  write_vtk(tiny, path);
  std::string text = slurp(path);
  CHECK(text.find("CELL_TYPES 2\n5\n5\n") != std::string::npos);
  CHECK(text.find("POINT_DATA") == std::string::npos);

  ScalarField u(tiny.vertex_count(), 1.5);
  write_vtk(tiny, path, {{{"u", &u}}, {}, {}});
  text = slurp(path);
  CHECK(text.find("POINT_DATA 4") != std::string::npos);
  CHECK(text.find("SCALARS u double 1") != std::string::npos);

  const SimplicialMesh cube = structured_mesh(3, 1);
  write_vtk(cube, path);
  text = slurp(path);
  CHECK(count_lines_equal(text, "10") == cube.cell_count());
  std::remove(path.c_str());
}

TEST_CASE("stats csv") {
  const std::string path = "io_test_stats.csv";
  write_stats_csv(statistics(structured_mesh(2, 2)), path);
  const std::string text = slurp(path);
  CHECK(text.find("elements,vertices,ar_max,ar_mean,ar_std,frac_ar_gt2,measure_min,measure_max") ==
        0);
  CHECK(count_lines_equal(text, "") == 0);
  std::remove(path.c_str());
}

TEST_CASE("validate catches broken meshes") {
  SimplicialMesh mesh = structured_mesh(2, 2);
  mesh.validate();

  SimplicialMesh inverted = mesh;
  std::swap(inverted.cells[0], inverted.cells[1]);
  CHECK_THROWS_AS(inverted.validate(), std::runtime_error);

  SimplicialMesh missing = mesh;
  missing.bfacets.resize(missing.bfacets.size() - 2);
  missing.bmarkers.pop_back();
  CHECK_THROWS_AS(missing.validate(), std::runtime_error);

  SimplicialMesh out_of_range = mesh;
  out_of_range.cells[0] = 1000;
  CHECK_THROWS_AS(out_of_range.validate(), std::runtime_error);
}

TEST_CASE("build_from_cells fixes orientation") {
  const SimplicialMesh mesh = build_from_cells(2, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {0, 2, 1});
  CHECK(mesh.cell_measure(0) > 0.0);
  mesh.validate();
}
