#pragma once

#include <array>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "uvwprop/advect.hpp"
#include "uvwprop/mesh.hpp"

namespace uvwprop {

// --- Implicit field ---------------------------------------------------------

struct Ball {
  Vec3 center;
  double radius = 1.0;
  Vec3 velocity;
};

struct FieldSample {
  double value = 0.0;
  Vec3 gradient;
  Vec3 velocity;
};

/// Sum of Wyvill kernels (1 - t^2)^3, t = |p - c| / R, zero for t >= 1.
/// Velocity is the kernel-weighted mean of ball velocities.
FieldSample metaball_field(const Vec3& p, std::span<const Ball> balls);

// --- Marching cubes ---------------------------------------------------------

struct Grid {
  Vec3 origin;
  double cell = 1.0;
  std::array<int, 3> dims{2, 2, 2};  // nodes per axis

  Vec3 node(int i, int j, int k) const {
    return origin + Vec3{cell * i, cell * j, cell * k};
  }
};

using FieldSampler = std::function<FieldSample(const Vec3&)>;

/// Polygonizes {field >= iso}. One vertex per crossed grid edge, numbered in
/// grid-edge order; triangles in cell order, wound outward (toward lower
/// field values). Vertex velocities come from the sampler.
MeshFrame marching_cubes(const FieldSampler& field, const Grid& grid, double iso, int threads = 0);

namespace serial {
MeshFrame marching_cubes(const FieldSampler& field, const Grid& grid, double iso);
}  // namespace serial

// --- Presets ----------------------------------------------------------------

struct TranslateSphere {
  int resolution = 16;
  int frames = 10;
  Vec3 displacement{0.01, 0.005, 0.0025};
  Vec3 center;
  double radius = 1.0;
  VelocityConvention convention = VelocityConvention::kPrevious;
};

/// Alternates between two UV-sphere tessellations every frame.
struct RemeshSphere {
  int res_a = 16;
  int res_b = 12;
  int frames = 10;
  Vec3 displacement{0.01, 0.005, 0.0025};
  Vec3 center;
  double radius = 1.0;
  VelocityConvention convention = VelocityConvention::kPrevious;
};

struct RotateSphere {
  int resolution = 16;
  int frames = 60;
  double radians_per_frame = 2.0 * std::numbers::pi / 120.0;
  Vec3 axis{0.0, 1.0, 0.0};
  Vec3 center;
  double radius = 1.0;
  VelocityConvention convention = VelocityConvention::kPrevious;
};

/// Two balls moving toward each other on straight lines until they merge.
struct MetaballsMerge {
  int grid_resolution = 24;
  int frames = 60;
  std::array<Vec3, 2> start{Vec3{-1.6, 0.0, 0.0}, Vec3{1.6, 0.0, 0.0}};
  std::array<Vec3, 2> end{Vec3{-0.5, 0.0, 0.0}, Vec3{0.5, 0.0, 0.0}};
  std::array<double, 2> radii{1.0, 1.0};
  double iso = 0.25;
};

using GeneratorPreset = std::variant<TranslateSphere, RemeshSphere, RotateSphere, MetaballsMerge>;

/// Checks preset parameters; throws a usage error.
void validate_preset(const GeneratorPreset& preset);
int preset_frame_count(const GeneratorPreset& preset);
VelocityConvention preset_convention(const GeneratorPreset& preset);
std::string preset_name(const GeneratorPreset& preset);

/// Affine map uvw = linear * p + offset (row-major linear part).
struct AffineMap {
  std::array<double, 9> linear{1, 0, 0, 0, 1, 0, 0, 0, 1};
  Vec3 offset;

  Vec3 apply(const Vec3& p) const {
    return Vec3{linear[0] * p.x + linear[1] * p.y + linear[2] * p.z,
                linear[3] * p.x + linear[4] * p.y + linear[5] * p.z,
                linear[6] * p.x + linear[7] * p.y + linear[8] * p.z} +
           offset;
  }
};

/// Frame `index` (0-based) of the preset.
MeshFrame generate_frame(const GeneratorPreset& preset, int index, int threads = 0);

/// Inverse rigid motion back to frame-0 coordinates, for rigid presets.
std::optional<AffineMap> ground_truth_map(const GeneratorPreset& preset, int index);

struct GeneratedSequence {
  MeshSequence frames;
  // Empty for presets without an analytic material map.
  std::vector<AffineMap> ground_truth;
};

GeneratedSequence generate_preset(const GeneratorPreset& preset, int threads = 0);

/// UV sphere with `resolution` stacks and 2 * resolution slices.
MeshFrame uv_sphere(int resolution, const Vec3& center, double radius);

/// Rotation by `radians` about unit `axis`, row-major.
std::array<double, 9> rotation_matrix(const Vec3& axis, double radians);

}  // namespace uvwprop
