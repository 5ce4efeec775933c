#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace thermomap {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm2(Vec3 v) { return dot(v, v); }
inline double norm(Vec3 v) { return std::sqrt(norm2(v)); }
inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }

// Lexicographic order on (z, y, x); used for deterministic sensor ordering.
inline bool zyx_less(const Vec3& a, const Vec3& b) {
  if (a.z != b.z) return a.z < b.z;
  if (a.y != b.y) return a.y < b.y;
  return a.x < b.x;
}

/// Axis-aligned box, closed on both ends.
struct Aabb {
  Vec3 min;
  Vec3 max;

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return (min + max) * 0.5; }
  double volume() const {
    const Vec3 e = extent();
    return e.x * e.y * e.z;
  }
  double min_extent() const {
    const Vec3 e = extent();
    return std::min({e.x, e.y, e.z});
  }
  bool valid() const { return min.x < max.x && min.y < max.y && min.z < max.z; }

  bool contains(const Vec3& p, double eps = 0.0) const {
    for (int a = 0; a < 3; ++a) {
      if (p[a] < min[a] - eps || p[a] > max[a] + eps) return false;
    }
    return true;
  }
  bool contains(const Aabb& other, double eps = 0.0) const {
    return contains(other.min, eps) && contains(other.max, eps);
  }
  // Strict interior intersection: boxes sharing a face do not overlap.
  bool overlaps_interior(const Aabb& other) const {
    for (int a = 0; a < 3; ++a) {
      if (!(min[a] < other.max[a] && other.min[a] < max[a])) return false;
    }
    return true;
  }
  Aabb united(const Aabb& other) const {
    return {{std::min(min.x, other.min.x), std::min(min.y, other.min.y), std::min(min.z, other.min.z)},
            {std::max(max.x, other.max.x), std::max(max.y, other.max.y), std::max(max.z, other.max.z)}};
  }
  Vec3 clamp(const Vec3& p) const {
    return {std::clamp(p.x, min.x, max.x), std::clamp(p.y, min.y, max.y), std::clamp(p.z, min.z, max.z)};
  }
  /// Euclidean distance from p to the closest point of the box (0 inside).
  double distance_to(const Vec3& p) const { return distance(p, clamp(p)); }

  friend bool operator==(const Aabb&, const Aabb&) = default;
};

}  // namespace thermomap
