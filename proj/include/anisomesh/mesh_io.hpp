#pragma once

#include <string>
#include <utility>
#include <vector>

#include "anisomesh/fields.hpp"
#include "anisomesh/mesh.hpp"
#include "anisomesh/metric.hpp"

namespace aniso {

/// Read an ASCII Medit .mesh file (Vertices, Triangles/Tetrahedra, Edges).
/// Throws std::runtime_error with the offending line number on parse errors.
SimplicialMesh read_medit(const std::string& path);
void write_medit(const SimplicialMesh& mesh, const std::string& path);

/// Read/write an ASCII Medit .sol file holding one symmetric-tensor field with
/// lower-triangle value order (m11 m21 m22 [m31 m32 m33]).
MetricField read_sol(const std::string& path, const SimplicialMesh& mesh);
void write_sol(const MetricField& field, const std::string& path);

struct VtkPointData {
  std::vector<std::pair<std::string, const ScalarField*>> scalars;
  std::vector<std::pair<std::string, const VectorField*>> vectors;
  std::vector<std::pair<std::string, const MetricField*>> tensors;
};

/// Legacy ASCII VTK unstructured grid with optional point data.
void write_vtk(const SimplicialMesh& mesh, const std::string& path,
               const VtkPointData& data = {});

constexpr const char* kStatsCsvHeader =
    "elements,vertices,ar_max,ar_mean,ar_std,frac_ar_gt2,measure_min,measure_max";

std::string stats_csv_row(const MeshStatistics& s);
void write_stats_csv(const MeshStatistics& s, const std::string& path);

}  // namespace aniso
