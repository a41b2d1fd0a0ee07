#pragma once

// Independent reference computations used only by tests.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "uvwprop/mesh.hpp"
#include "uvwprop/spatial.hpp"

namespace uvwprop::oracle {

/// Linear scan over all triangles with the (distance, index) tie-break.
inline ClosestHit brute_force_closest(const MeshFrame& frame, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  SurfaceLocation loc;
  for (std::size_t t = 0; t < frame.triangles.size(); ++t) {
    const Triangle& tri = frame.triangles[t];
    const TrianglePoint hit = closest_point_on_triangle(frame.positions[tri[0]], frame.positions[tri[1]],
                                                        frame.positions[tri[2]], p);
    if (hit.squared_distance < best) {
      best = hit.squared_distance;
      loc = {static_cast<std::uint32_t>(t), hit.bary};
    }
  }
  return {loc, std::sqrt(best)};
}

/// Decodes a binary16 bit pattern.
inline double decode_half(std::uint16_t bits) {
  const int sign = bits >> 15;
  const int exp = (bits >> 10) & 0x1f;
  const int mant = bits & 0x3ff;
  double v;
  if (exp == 0) {
    v = std::ldexp(static_cast<double>(mant), -24);
  } else if (exp == 31) {
    v = mant ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
  } else {
    v = std::ldexp(static_cast<double>(1024 + mant), exp - 25);
  }
  return sign ? -v : v;
}

/// Nearest finite binary16 by exhaustive search; ties go to the even pattern.
inline double nearest_half(double x) {
  if (x > 65504.0) return 65504.0;
  if (x < -65504.0) return -65504.0;
  double best = 0.0;
  double best_err = std::numeric_limits<double>::infinity();
  int best_bits = -1;
  for (int bits = 0; bits < 0x10000; ++bits) {
    const double v = decode_half(static_cast<std::uint16_t>(bits));
    if (!std::isfinite(v)) continue;
    if ((v == 0.0) && (std::signbit(v) != std::signbit(x))) continue;
    const double err = std::fabs(v - x);
    if (err < best_err || (err == best_err && (bits & 1) == 0 && (best_bits & 1) == 1)) {
      best = v;
      best_err = err;
      best_bits = bits;
    }
  }
  return best;
}

/// Number of connected components among vertices referenced by triangles.
inline std::size_t connected_components(const MeshFrame& frame) {
  std::vector<std::uint32_t> parent(frame.positions.size());
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  std::vector<bool> used(frame.positions.size(), false);
  for (const Triangle& t : frame.triangles) {
    for (int k = 0; k < 3; ++k) {
      used[t[k]] = true;
      parent[find(t[k])] = find(t[(k + 1) % 3]);
    }
  }
  std::size_t count = 0;
  for (std::uint32_t v = 0; v < parent.size(); ++v) {
    if (used[v] && find(v) == v) ++count;
  }
  return count;
}

/// Random triangle soup in the unit cube.
inline MeshFrame random_frame(std::size_t triangles, std::uint64_t seed, bool with_uvws = true) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MeshFrame f;
  for (std::size_t t = 0; t < triangles; ++t) {
    const Vec3 base{u(rng), u(rng), u(rng)};
    for (int k = 0; k < 3; ++k) {
      f.positions.push_back(base + 0.1 * Vec3{u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5});
    }
    const auto b = static_cast<std::uint32_t>(3 * t);
    f.triangles.push_back({b, b + 1, b + 2});
  }
  f.velocities.resize(f.positions.size());
  for (Vec3& v : f.velocities) v = {u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5};
  if (with_uvws) {
    f.uvws.emplace();
    for (std::size_t i = 0; i < f.positions.size(); ++i) f.uvws->push_back({u(rng), u(rng), u(rng)});
  }
  return f;
}

/// Signed enclosed volume via the divergence theorem; > 0 for outward winding.
inline double signed_volume(const MeshFrame& f) {
  double v = 0.0;
  for (const Triangle& t : f.triangles) {
    v += dot(f.positions[t[0]], cross(f.positions[t[1]], f.positions[t[2]])) / 6.0;
  }
  return v;
}

}  // namespace uvwprop::oracle
