#include "uvwprop/mesh.hpp"

#include <algorithm>
#include <string>

#include "uvwprop/error.hpp"

namespace uvwprop {

void validate_frame(const MeshFrame& frame) {
  const std::size_t n = frame.positions.size();
  if (frame.velocities.size() != n) {
    throw validation_error("velocity count " + std::to_string(frame.velocities.size()) +
                           " does not match vertex count " + std::to_string(n));
  }
  if (frame.uvws && frame.uvws->size() != n) {
    throw validation_error("uvw count " + std::to_string(frame.uvws->size()) +
                           " does not match vertex count " + std::to_string(n));
  }
  for (std::size_t t = 0; t < frame.triangles.size(); ++t) {
    for (std::uint32_t v : frame.triangles[t]) {
      if (v >= n) {
        throw validation_error("face " + std::to_string(t) + " references vertex " +
                               std::to_string(v) + " but the frame has " + std::to_string(n) +
                               " vertices");
      }
    }
  }
  auto check_finite = [](const std::vector<Vec3>& values, const char* name) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!is_finite(values[i])) {
        throw validation_error(std::string("non-finite ") + name + " at vertex " +
                               std::to_string(i));
      }
    }
  };
  check_finite(frame.positions, "position");
  check_finite(frame.velocities, "velocity");
  if (frame.uvws) check_finite(*frame.uvws, "uvw");
}

Vec3 barycentric_interpolate(const MeshFrame& frame, const SurfaceLocation& location,
                             Channel channel) {
  if (location.triangle >= frame.triangles.size()) {
    throw validation_error("location references triangle " + std::to_string(location.triangle) +
                           " of a frame with " + std::to_string(frame.triangles.size()));
  }
  const std::vector<Vec3>* values = nullptr;
  switch (channel) {
    case Channel::kPosition:
      values = &frame.positions;
      break;
    case Channel::kVelocity:
      values = &frame.velocities;
      break;
    case Channel::kUvw:
      if (!frame.uvws) throw validation_error("frame has no uvw channel");
      values = &*frame.uvws;
      break;
  }
  const Triangle& tri = frame.triangles[location.triangle];
  return interpolate_corners((*values)[tri[0]], (*values)[tri[1]], (*values)[tri[2]],
                             location.bary);
}

namespace {

TrianglePoint finish(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& p,
                     std::array<double, 3> bary) {
  const Vec3 q = interpolate_corners(a, b, c, bary);
  return {bary, squared_norm(p - q)};
}

// Closest point on segment (corners i, j of the triangle).
TrianglePoint closest_on_edge(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& p, int i,
                              int j) {
  const Vec3* corner[3] = {&a, &b, &c};
  const Vec3 d = *corner[j] - *corner[i];
  const double len2 = squared_norm(d);
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(dot(p - *corner[i], d) / len2, 0.0, 1.0);
  std::array<double, 3> bary{0.0, 0.0, 0.0};
  bary[i] = 1.0 - t;
  bary[j] += t;
  return finish(a, b, c, p, bary);
}

TrianglePoint closest_on_boundary(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& p) {
  TrianglePoint best = closest_on_edge(a, b, c, p, 0, 1);
  for (auto [i, j] : {std::pair{1, 2}, std::pair{2, 0}}) {
    TrianglePoint cand = closest_on_edge(a, b, c, p, i, j);
    if (cand.squared_distance < best.squared_distance) best = cand;
  }
  return best;
}

}  // namespace

// Region classification follows Ericson, Real-Time Collision Detection 5.1.5.
TrianglePoint closest_point_on_triangle(const Vec3& a, const Vec3& b, const Vec3& c,
                                        const Vec3& p) {
  if (p == a) return {{1.0, 0.0, 0.0}, 0.0};
  if (p == b) return {{0.0, 1.0, 0.0}, 0.0};
  if (p == c) return {{0.0, 0.0, 1.0}, 0.0};

  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  if (squared_norm(cross(ab, ac)) == 0.0) return closest_on_boundary(a, b, c, p);

  const Vec3 ap = p - a;
  const double d1 = dot(ab, ap);
  const double d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return finish(a, b, c, p, {1.0, 0.0, 0.0});

  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp);
  const double d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return finish(a, b, c, p, {0.0, 1.0, 0.0});

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return finish(a, b, c, p, {1.0 - v, v, 0.0});
  }

  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp);
  const double d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return finish(a, b, c, p, {0.0, 0.0, 1.0});

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return finish(a, b, c, p, {1.0 - w, 0.0, w});
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return finish(a, b, c, p, {0.0, 1.0 - w, w});
  }

  const double sum = va + vb + vc;
  if (!(sum > 0.0) || va < 0.0 || vb < 0.0 || vc < 0.0) {
    // Rounding put us in no region (slivers); the boundary is the safe answer.
    return closest_on_boundary(a, b, c, p);
  }
  const double inv = 1.0 / sum;
  return finish(a, b, c, p, {va * inv, vb * inv, vc * inv});
}

std::vector<std::vector<std::uint32_t>> vertex_adjacency(const MeshFrame& frame) {
  std::vector<std::vector<std::uint32_t>> adj(frame.positions.size());
  for (const Triangle& t : frame.triangles) {
    for (int k = 0; k < 3; ++k) {
      const std::uint32_t u = t[k];
      const std::uint32_t v = t[(k + 1) % 3];
      if (u == v) continue;
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
  }
  for (auto& list : adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return adj;
}

void Bounds::extend(const Vec3& p) {
  min = {std::min(min.x, p.x), std::min(min.y, p.y), std::min(min.z, p.z)};
  max = {std::max(max.x, p.x), std::max(max.y, p.y), std::max(max.z, p.z)};
}

void Bounds::extend(const Bounds& b) {
  if (b.empty()) return;
  extend(b.min);
  extend(b.max);
}

Bounds frame_bounds(const MeshFrame& frame) {
  Bounds b;
  for (const Vec3& p : frame.positions) b.extend(p);
  return b;
}

}  // namespace uvwprop
