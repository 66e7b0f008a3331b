#pragma once

#include <cmath>

namespace aniso {

/// Small geometric vector. 2D meshes keep z == 0.
struct Vec3 {
  double v[3] = {0.0, 0.0, 0.0};

  Vec3() = default;
  Vec3(double x, double y, double z = 0.0) : v{x, y, z} {}

  double operator[](int i) const { return v[i]; }
  double& operator[](int i) { return v[i]; }
  double x() const { return v[0]; }
  double y() const { return v[1]; }
  double z() const { return v[2]; }
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a.v[0] + b.v[0], a.v[1] + b.v[1], a.v[2] + b.v[2]};
}
inline Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a.v[0] - b.v[0], a.v[1] - b.v[1], a.v[2] - b.v[2]};
}
inline Vec3 operator*(double s, const Vec3& a) {
  return {s * a.v[0], s * a.v[1], s * a.v[2]};
}
inline Vec3& operator+=(Vec3& a, const Vec3& b) {
  a = a + b;
  return a;
}
inline bool operator==(const Vec3& a, const Vec3& b) {
  return a.v[0] == b.v[0] && a.v[1] == b.v[1] && a.v[2] == b.v[2];
}

inline double dot(const Vec3& a, const Vec3& b) {
  return a.v[0] * b.v[0] + a.v[1] * b.v[1] + a.v[2] * b.v[2];
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.v[1] * b.v[2] - a.v[2] * b.v[1],
          a.v[2] * b.v[0] - a.v[0] * b.v[2],
          a.v[0] * b.v[1] - a.v[1] * b.v[0]};
}
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

}  // namespace aniso
