#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace uvwprop {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }

  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
constexpr Vec3 operator*(const Vec3& a, double s) { return s * a; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
constexpr Vec3 hadamard(const Vec3& a, const Vec3& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }
constexpr double squared_norm(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(squared_norm(a)); }
inline bool is_finite(const Vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

using Triangle = std::array<std::uint32_t, 3>;

/// One element of a mesh sequence: per-vertex position, motion vector and
/// optional UVW, plus a triangle list indexing into those arrays.
struct MeshFrame {
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  std::optional<std::vector<Vec3>> uvws;
  std::vector<Triangle> triangles;

  std::size_t vertex_count() const { return positions.size(); }
  std::size_t triangle_count() const { return triangles.size(); }
  bool has_uvws() const { return uvws.has_value(); }
};

using MeshSequence = std::vector<MeshFrame>;

/// Throws a validation error describing the first violated frame invariant.
void validate_frame(const MeshFrame& frame);

/// A point on a frame's surface: triangle plus barycentric weights.
struct SurfaceLocation {
  std::uint32_t triangle = 0;
  std::array<double, 3> bary{1.0, 0.0, 0.0};

  friend bool operator==(const SurfaceLocation&, const SurfaceLocation&) = default;
};

enum class Channel { kPosition, kVelocity, kUvw };

Vec3 barycentric_interpolate(const MeshFrame& frame, const SurfaceLocation& location, Channel channel);

/// Interpolates three corner values; the arithmetic every channel lookup uses.
inline Vec3 interpolate_corners(const Vec3& a, const Vec3& b, const Vec3& c,
                                const std::array<double, 3>& bary) {
  return {bary[0] * a.x + bary[1] * b.x + bary[2] * c.x,
          bary[0] * a.y + bary[1] * b.y + bary[2] * c.y,
          bary[0] * a.z + bary[1] * b.z + bary[2] * c.z};
}

struct TrianglePoint {
  std::array<double, 3> bary;
  double squared_distance;
};

/// Closest point on the closed triangle (a, b, c) to p. Total on finite
/// input: degenerate triangles collapse to their closest segment or point.
TrianglePoint closest_point_on_triangle(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& p);

/// Edge-induced neighbour lists, sorted ascending, without self entries.
std::vector<std::vector<std::uint32_t>> vertex_adjacency(const MeshFrame& frame);

struct Bounds {
  Vec3 min{INFINITY, INFINITY, INFINITY};
  Vec3 max{-INFINITY, -INFINITY, -INFINITY};

  void extend(const Vec3& p);
  void extend(const Bounds& b);
  bool empty() const { return min.x > max.x; }
};

Bounds frame_bounds(const MeshFrame& frame);

}  // namespace uvwprop
