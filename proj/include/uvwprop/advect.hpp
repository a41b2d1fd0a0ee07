#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "uvwprop/mesh.hpp"
#include "uvwprop/spatial.hpp"

namespace uvwprop {

enum class InitKind { kPositional, kFromFile };
enum class VelocityConvention { kPrevious, kCurrent };
enum class Quantize { kNone, kHalf };

struct InitStrategy {
  InitKind kind = InitKind::kPositional;
  // Positional map uvw = (position - origin) * scale. Also the per-vertex
  // fallback rule when no transfer is possible, whatever `kind` is.
  Vec3 origin{0.0, 0.0, 0.0};
  Vec3 scale{1.0, 1.0, 1.0};
};

struct PropagationConfig {
  InitStrategy init;
  // Recorded with outputs. Backtracking is p = position - scale * velocity
  // either way; BFEC expects kCurrent.
  VelocityConvention velocity_convention = VelocityConvention::kPrevious;
  double velocity_scale = 1.0;
  bool bfec = false;
  int smooth_iterations = 0;
  double smooth_lambda = 0.5;
  Quantize quantize = Quantize::kNone;
  double max_distance = std::numeric_limits<double>::infinity();

  /// Throws a usage error naming the first out-of-range field.
  void validate() const;
};

const char* to_string(VelocityConvention convention);
const char* to_string(Quantize quantize);
const char* to_string(InitKind kind);
VelocityConvention parse_velocity_convention(const std::string& text);

std::vector<Vec3> init_uvw(const MeshFrame& frame, const InitStrategy& strategy);

inline Vec3 positional_uvw(const Vec3& position, const InitStrategy& strategy) {
  return hadamard(position - strategy.origin, strategy.scale);
}

inline Vec3 backtrack_point(const Vec3& position, const Vec3& velocity, double velocity_scale) {
  return position - velocity_scale * velocity;
}

/// MacCormack-style corrected query: backtrack, re-advect the hit forward
/// with the previous frame's own motion, and move the query point against
/// half the round-trip error before a second closest-location lookup.
ClosestHit bfec_corrected_location(const MeshFrame& prev, const TriangleIndex& prev_index,
                                   const Vec3& position, const Vec3& velocity,
                                   const PropagationConfig& cfg);

struct FrameResult {
  std::vector<Vec3> uvws;
  std::size_t fallback_count = 0;
};

/// Transfers uvws from `prev` onto every vertex of `cur`, then smooths and
/// quantizes per `cfg`. `threads` <= 0 uses the OpenMP default. The output
/// is bitwise independent of the thread count.
FrameResult propagate_frame(const MeshFrame& prev, const TriangleIndex& prev_index,
                            const MeshFrame& cur, const PropagationConfig& cfg, int threads = 0);
FrameResult propagate_frame(const MeshFrame& prev, const MeshFrame& cur,
                            const PropagationConfig& cfg, int threads = 0);

/// Jacobi sweeps of u <- u + lambda * (mean(neighbours) - u) with uniform weights.
std::vector<Vec3> laplacian_smooth_uvw(const MeshFrame& frame, std::vector<Vec3> uvws,
                                       int iterations, double lambda, int threads = 0);

/// Nearest IEEE binary16 value (ties to even), returned as a double.
/// Magnitudes beyond the largest finite half clamp to +-65504.
double quantize_half(double value);
Vec3 quantize_half(const Vec3& v);

/// Single-threaded reference kernels. Same results as the parallel versions;
/// kept for tests and the benchmark.
namespace serial {
FrameResult propagate_frame(const MeshFrame& prev, const TriangleIndex& prev_index,
                            const MeshFrame& cur, const PropagationConfig& cfg);
std::vector<Vec3> laplacian_smooth_uvw(const MeshFrame& frame, std::vector<Vec3> uvws,
                                       int iterations, double lambda);
}  // namespace serial

/// Pulls frames in temporal order; std::nullopt ends the sequence.
using FrameSource = std::function<std::optional<MeshFrame>()>;
/// Receives each frame (geometry unchanged, uvws filled) with its 0-based index.
using FrameSink = std::function<void(const MeshFrame&, std::size_t)>;

struct PropagationSummary {
  std::size_t frames = 0;
  std::size_t fallback_count = 0;
  std::vector<std::size_t> frame_fallbacks;
  double seconds = 0.0;
  std::vector<std::string> warnings;
};

/// Streams a sequence: frame 0 gets init_uvw, every later frame is
/// propagated from the previous frame's result. Holds at most the previous
/// frame, the current frame and one index at a time.
PropagationSummary propagate_sequence(const FrameSource& source, const PropagationConfig& cfg,
                                      const FrameSink& sink, int threads = 0);

}  // namespace uvwprop
