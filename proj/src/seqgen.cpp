#include "uvwprop/seqgen.hpp"

#include <algorithm>
#include <cmath>

#include "uvwprop/error.hpp"

namespace uvwprop {

FieldSample metaball_field(const Vec3& p, std::span<const Ball> balls) {
  FieldSample out;
  double weight_sum = 0.0;
  Vec3 weighted_velocity;
  for (const Ball& b : balls) {
    const Vec3 d = p - b.center;
    const double r2 = b.radius * b.radius;
    const double s = squared_norm(d) / r2;  // t^2
    if (s >= 1.0) continue;
    const double one_minus = 1.0 - s;
    const double k = one_minus * one_minus * one_minus;
    out.value += k;
    out.gradient += (-6.0 * one_minus * one_minus / r2) * d;
    weight_sum += k;
    weighted_velocity += k * b.velocity;
  }
  if (weight_sum > 0.0) out.velocity = (1.0 / weight_sum) * weighted_velocity;
  return out;
}

std::array<double, 9> rotation_matrix(const Vec3& axis, double radians) {
  const double len = norm(axis);
  const Vec3 a = (1.0 / len) * axis;
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  const double t = 1.0 - c;
  return {t * a.x * a.x + c,       t * a.x * a.y - s * a.z, t * a.x * a.z + s * a.y,
          t * a.x * a.y + s * a.z, t * a.y * a.y + c,       t * a.y * a.z - s * a.x,
          t * a.x * a.z - s * a.y, t * a.y * a.z + s * a.x, t * a.z * a.z + c};
}

MeshFrame uv_sphere(int resolution, const Vec3& center, double radius) {
  const int stacks = resolution;
  const int slices = 2 * resolution;
  MeshFrame f;
  f.positions.reserve(2 + static_cast<std::size_t>(stacks - 1) * slices);
  f.positions.push_back(center + Vec3{0.0, 0.0, radius});
  for (int k = 1; k < stacks; ++k) {
    const double theta = std::numbers::pi * k / stacks;
    for (int j = 0; j < slices; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / slices;
      f.positions.push_back(center + radius * Vec3{std::sin(theta) * std::cos(phi),
                                                   std::sin(theta) * std::sin(phi),
                                                   std::cos(theta)});
    }
  }
  f.positions.push_back(center + Vec3{0.0, 0.0, -radius});
  const auto south = static_cast<std::uint32_t>(f.positions.size() - 1);
  auto ring = [&](int k, int j) {
    return static_cast<std::uint32_t>(1 + (k - 1) * slices + (j % slices));
  };
  for (int j = 0; j < slices; ++j) f.triangles.push_back({0, ring(1, j), ring(1, j + 1)});
  for (int k = 1; k + 1 < stacks; ++k) {
    for (int j = 0; j < slices; ++j) {
      f.triangles.push_back({ring(k, j), ring(k + 1, j), ring(k + 1, j + 1)});
      f.triangles.push_back({ring(k, j), ring(k + 1, j + 1), ring(k, j + 1)});
    }
  }
  for (int j = 0; j < slices; ++j) {
    f.triangles.push_back({south, ring(stacks - 1, j + 1), ring(stacks - 1, j)});
  }
  f.velocities.assign(f.positions.size(), Vec3{});
  return f;
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& msg) {
  if (!ok) throw usage_error(msg);
}

Vec3 apply_linear(const std::array<double, 9>& m, const Vec3& p) {
  return {m[0] * p.x + m[1] * p.y + m[2] * p.z, m[3] * p.x + m[4] * p.y + m[5] * p.z,
          m[6] * p.x + m[7] * p.y + m[8] * p.z};
}

// Rigid presets share this: positions at frame i come from the rest mesh
// through `place(rest, i)`, velocities are exact displacements between frames.
template <typename Place>
MeshFrame rigid_frame(const MeshFrame& rest, int index, VelocityConvention convention,
                      Place place) {
  MeshFrame f;
  f.triangles = rest.triangles;
  f.positions.resize(rest.positions.size());
  f.velocities.resize(rest.positions.size());
  const int other = convention == VelocityConvention::kPrevious ? index - 1 : index + 1;
  for (std::size_t j = 0; j < rest.positions.size(); ++j) {
    const Vec3 here = place(rest.positions[j], index);
    const Vec3 there = place(rest.positions[j], other);
    f.positions[j] = here;
    f.velocities[j] = convention == VelocityConvention::kPrevious ? here - there : there - here;
  }
  return f;
}

struct MetaballSetup {
  Grid grid;
  std::array<Vec3, 2> step;
};

MetaballSetup metaball_setup(const MetaballsMerge& m) {
  MetaballSetup s;
  const double denom = m.frames > 1 ? static_cast<double>(m.frames - 1) : 1.0;
  Bounds box;
  for (int b = 0; b < 2; ++b) {
    s.step[b] = (1.0 / denom) * (m.end[b] - m.start[b]);
    const Vec3 r{m.radii[b], m.radii[b], m.radii[b]};
    box.extend(m.start[b] - r);
    box.extend(m.start[b] + r);
    box.extend(m.end[b] - r);
    box.extend(m.end[b] + r);
  }
  const Vec3 extent = box.max - box.min;
  const double longest = std::max({extent.x, extent.y, extent.z});
  s.grid.cell = longest / m.grid_resolution;
  // One empty cell of margin on every side keeps the surface closed.
  s.grid.origin = box.min - Vec3{s.grid.cell, s.grid.cell, s.grid.cell};
  for (int a = 0; a < 3; ++a) {
    s.grid.dims[a] = static_cast<int>(std::ceil(extent[a] / s.grid.cell)) + 3;
  }
  return s;
}

}  // namespace

void validate_preset(const GeneratorPreset& preset) {
  std::visit(Overloaded{
                 [](const TranslateSphere& p) {
                   require(p.frames >= 1, "frames must be >= 1");
                   require(p.resolution >= 4, "resolution must be >= 4");
                   require(p.radius > 0.0, "radius must be > 0");
                   require(is_finite(p.displacement), "displacement must be finite");
                 },
                 [](const RemeshSphere& p) {
                   require(p.frames >= 1, "frames must be >= 1");
                   require(p.res_a >= 4 && p.res_b >= 4, "resolutions must be >= 4");
                   require(p.radius > 0.0, "radius must be > 0");
                   require(is_finite(p.displacement), "displacement must be finite");
                 },
                 [](const RotateSphere& p) {
                   require(p.frames >= 1, "frames must be >= 1");
                   require(p.resolution >= 4, "resolution must be >= 4");
                   require(p.radius > 0.0, "radius must be > 0");
                   require(squared_norm(p.axis) > 0.0, "rotation axis must be non-zero");
                   require(std::isfinite(p.radians_per_frame), "rotation angle must be finite");
                 },
                 [](const MetaballsMerge& p) {
                   require(p.frames >= 1, "frames must be >= 1");
                   require(p.grid_resolution >= 4, "grid resolution must be >= 4");
                   require(p.radii[0] > 0.0 && p.radii[1] > 0.0, "radii must be > 0");
                   // A lone ball peaks at 1; overlapping balls cannot exceed 2.
                   require(p.iso > 0.0 && p.iso < 1.0, "iso level must lie in (0, 1)");
                 },
             },
             preset);
}

int preset_frame_count(const GeneratorPreset& preset) {
  return std::visit([](const auto& p) { return p.frames; }, preset);
}

VelocityConvention preset_convention(const GeneratorPreset& preset) {
  return std::visit(Overloaded{
                        [](const MetaballsMerge&) { return VelocityConvention::kPrevious; },
                        [](const auto& p) { return p.convention; },
                    },
                    preset);
}

std::string preset_name(const GeneratorPreset& preset) {
  return std::visit(Overloaded{
                        [](const TranslateSphere&) { return "translate_sphere"; },
                        [](const RemeshSphere&) { return "remesh_sphere"; },
                        [](const RotateSphere&) { return "rotate_sphere"; },
                        [](const MetaballsMerge&) { return "metaballs_merge"; },
                    },
                    preset);
}

MeshFrame generate_frame(const GeneratorPreset& preset, int index, int threads) {
  validate_preset(preset);
  require(index >= 0 && index < preset_frame_count(preset), "frame index out of range");
  return std::visit(
      Overloaded{
          [&](const TranslateSphere& p) {
            const MeshFrame rest = uv_sphere(p.resolution, p.center, p.radius);
            return rigid_frame(rest, index, p.convention, [&](const Vec3& x, int i) {
              return x + static_cast<double>(i) * p.displacement;
            });
          },
          [&](const RemeshSphere& p) {
            const int res = index % 2 == 0 ? p.res_a : p.res_b;
            const MeshFrame rest = uv_sphere(res, p.center, p.radius);
            return rigid_frame(rest, index, p.convention, [&](const Vec3& x, int i) {
              return x + static_cast<double>(i) * p.displacement;
            });
          },
          [&](const RotateSphere& p) {
            const MeshFrame rest = uv_sphere(p.resolution, p.center, p.radius);
            return rigid_frame(rest, index, p.convention, [&](const Vec3& x, int i) {
              const auto r = rotation_matrix(p.axis, p.radians_per_frame * i);
              return apply_linear(r, x - p.center) + p.center;
            });
          },
          [&](const MetaballsMerge& p) {
            const MetaballSetup s = metaball_setup(p);
            std::array<Ball, 2> balls;
            for (int b = 0; b < 2; ++b) {
              balls[b] = {p.start[b] + static_cast<double>(index) * s.step[b], p.radii[b], s.step[b]};
            }
            return marching_cubes(
                [&](const Vec3& x) { return metaball_field(x, balls); }, s.grid, p.iso, threads);
          },
      },
      preset);
}

std::optional<AffineMap> ground_truth_map(const GeneratorPreset& preset, int index) {
  return std::visit(
      Overloaded{
          [&](const TranslateSphere& p) -> std::optional<AffineMap> {
            AffineMap m;
            m.offset = -static_cast<double>(index) * p.displacement;
            return m;
          },
          [&](const RemeshSphere& p) -> std::optional<AffineMap> {
            AffineMap m;
            m.offset = -static_cast<double>(index) * p.displacement;
            return m;
          },
          [&](const RotateSphere& p) -> std::optional<AffineMap> {
            AffineMap m;
            m.linear = rotation_matrix(p.axis, -p.radians_per_frame * index);
            m.offset = p.center - apply_linear(m.linear, p.center);
            return m;
          },
          [](const MetaballsMerge&) -> std::optional<AffineMap> { return std::nullopt; },
      },
      preset);
}

GeneratedSequence generate_preset(const GeneratorPreset& preset, int threads) {
  validate_preset(preset);
  GeneratedSequence out;
  const int n = preset_frame_count(preset);
  out.frames.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.frames.push_back(generate_frame(preset, i, threads));
    if (auto m = ground_truth_map(preset, i)) out.ground_truth.push_back(*m);
  }
  return out;
}

}  // namespace uvwprop
