#pragma once

#include <vector>

#include "anisomesh/vec.hpp"

namespace aniso {

/// P1 scalar field: one value per mesh vertex.
struct ScalarField {
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(size_t n, double v = 0.0) : values(n, v) {}
  size_t size() const { return values.size(); }
  double operator[](size_t i) const { return values[i]; }
  double& operator[](size_t i) { return values[i]; }
};

/// P1 vector field: one d-vector per mesh vertex.
struct VectorField {
  std::vector<Vec3> values;

  VectorField() = default;
  explicit VectorField(size_t n) : values(n) {}
  size_t size() const { return values.size(); }
  const Vec3& operator[](size_t i) const { return values[i]; }
  Vec3& operator[](size_t i) { return values[i]; }
};

}  // namespace aniso
