#include "uvwprop/advect.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>

#include "uvwprop/error.hpp"

namespace uvwprop {

void PropagationConfig::validate() const {
  if (!(velocity_scale > 0.0) || !std::isfinite(velocity_scale)) {
    throw usage_error("velocity scale must be a finite value > 0");
  }
  if (!(smooth_lambda >= 0.0 && smooth_lambda <= 1.0)) {
    throw usage_error("smoothing lambda must lie in [0, 1]");
  }
  if (smooth_iterations < 0) throw usage_error("smoothing iterations must be >= 0");
  if (!(max_distance > 0.0)) throw usage_error("max distance must be > 0");
  if (!is_finite(init.origin) || !is_finite(init.scale)) {
    throw usage_error("positional origin and scale must be finite");
  }
}

const char* to_string(VelocityConvention convention) {
  return convention == VelocityConvention::kPrevious ? "previous" : "current";
}

const char* to_string(Quantize quantize) { return quantize == Quantize::kNone ? "none" : "half"; }

const char* to_string(InitKind kind) {
  return kind == InitKind::kPositional ? "positional" : "file";
}

VelocityConvention parse_velocity_convention(const std::string& text) {
  if (text == "previous") return VelocityConvention::kPrevious;
  if (text == "current") return VelocityConvention::kCurrent;
  throw validation_error("velocity convention must be \"previous\" or \"current\", got \"" +
                         text + "\"");
}

std::vector<Vec3> init_uvw(const MeshFrame& frame, const InitStrategy& strategy) {
  if (strategy.kind == InitKind::kFromFile) {
    if (!frame.uvws) throw validation_error("init from file requires the first frame to carry uvws");
    if (frame.uvws->size() != frame.positions.size()) {
      throw validation_error("first frame uvw count does not match its vertex count");
    }
    return *frame.uvws;
  }
  std::vector<Vec3> out(frame.positions.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = positional_uvw(frame.positions[j], strategy);
  return out;
}

ClosestHit bfec_corrected_location(const MeshFrame& prev, const TriangleIndex& prev_index,
                                   const Vec3& position, const Vec3& velocity,
                                   const PropagationConfig& cfg) {
  const double s = cfg.velocity_scale;
  const Vec3 back = backtrack_point(position, velocity, s);
  const ClosestHit first = prev_index.closest_location(back);
  const Vec3 landed = barycentric_interpolate(prev, first.location, Channel::kPosition);
  const Vec3 landed_vel = barycentric_interpolate(prev, first.location, Channel::kVelocity);
  const Vec3 error = (landed + s * landed_vel) - position;
  if (error == Vec3{}) return first;
  return prev_index.closest_location(back - 0.5 * error);
}

double quantize_half(double value) {
  constexpr double kMaxHalf = 65504.0;
  if (value > kMaxHalf) return kMaxHalf;
  if (value < -kMaxHalf) return -kMaxHalf;
  if (value == 0.0) return value;
  const double mag = std::fabs(value);
  int exp = 0;
  std::frexp(mag, &exp);  // mag = m * 2^exp, m in [0.5, 1)
  // binary16 keeps 11 significant bits for normals; subnormals share the
  // fixed spacing 2^-24.
  const int ulp_exp = std::max(exp - 11, -24);
  const double scaled = std::ldexp(value, -ulp_exp);  // exact
  const double rounded = std::nearbyint(scaled);      // ties to even
  return std::ldexp(rounded, ulp_exp);
}

Vec3 quantize_half(const Vec3& v) { return {quantize_half(v.x), quantize_half(v.y), quantize_half(v.z)}; }

namespace {

int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

struct VertexTransfer {
  Vec3 uvw;
  bool fallback;
};

// The per-vertex step shared by the serial and parallel drivers. Never throws
// for inputs checked by check_frame_inputs.
VertexTransfer transfer_vertex(const MeshFrame& prev, const TriangleIndex& prev_index,
                               const Vec3& position, const Vec3& velocity,
                               const PropagationConfig& cfg) {
  if (prev_index.empty()) return {positional_uvw(position, cfg.init), true};
  const ClosestHit hit =
      cfg.bfec ? bfec_corrected_location(prev, prev_index, position, velocity, cfg)
               : prev_index.closest_location(backtrack_point(position, velocity, cfg.velocity_scale));
  if (hit.distance > cfg.max_distance) return {positional_uvw(position, cfg.init), true};
  return {barycentric_interpolate(prev, hit.location, Channel::kUvw), false};
}

void check_frame_inputs(const MeshFrame& prev, const TriangleIndex& prev_index,
                        const MeshFrame& cur, const PropagationConfig& cfg) {
  cfg.validate();
  if (!prev.uvws) throw validation_error("previous frame carries no uvws");
  validate_frame(prev);
  validate_frame(cur);
  if (prev_index.triangle_count() != prev.triangle_count()) {
    throw validation_error("triangle index was not built from the previous frame");
  }
}

void check_smooth_inputs(const MeshFrame& frame, const std::vector<Vec3>& uvws, double lambda) {
  if (uvws.size() != frame.positions.size()) {
    throw validation_error("uvw count " + std::to_string(uvws.size()) +
                           " does not match vertex count " + std::to_string(frame.positions.size()));
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw usage_error("smoothing lambda must lie in [0, 1]");
}

inline Vec3 smooth_vertex(const std::vector<Vec3>& src,
                          const std::vector<std::uint32_t>& neighbours, std::size_t j,
                          double lambda) {
  if (neighbours.empty()) return src[j];
  Vec3 sum;
  for (std::uint32_t k : neighbours) sum += src[k];
  const Vec3 mean = (1.0 / static_cast<double>(neighbours.size())) * sum;
  return src[j] + lambda * (mean - src[j]);
}

void finish_frame(const MeshFrame& cur, const PropagationConfig& cfg, FrameResult& result,
                  int threads, bool parallel) {
  if (cfg.smooth_iterations > 0 && cfg.smooth_lambda > 0.0) {
    result.uvws = parallel ? laplacian_smooth_uvw(cur, std::move(result.uvws),
                                                  cfg.smooth_iterations, cfg.smooth_lambda, threads)
                           : serial::laplacian_smooth_uvw(cur, std::move(result.uvws),
                                                          cfg.smooth_iterations, cfg.smooth_lambda);
  }
  if (cfg.quantize == Quantize::kHalf) {
    for (Vec3& u : result.uvws) u = quantize_half(u);
  }
}

}  // namespace

FrameResult propagate_frame(const MeshFrame& prev, const TriangleIndex& prev_index,
                            const MeshFrame& cur, const PropagationConfig& cfg, int threads) {
  check_frame_inputs(prev, prev_index, cur, cfg);
  const auto n = static_cast<std::ptrdiff_t>(cur.positions.size());
  FrameResult result;
  result.uvws.resize(cur.positions.size());
  std::size_t fallbacks = 0;
#pragma omp parallel for schedule(dynamic, 256) num_threads(resolve_threads(threads)) \
    reduction(+ : fallbacks)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    const VertexTransfer t = transfer_vertex(prev, prev_index, cur.positions[j], cur.velocities[j], cfg);
    result.uvws[j] = t.uvw;
    if (t.fallback) ++fallbacks;
  }
  result.fallback_count = fallbacks;
  finish_frame(cur, cfg, result, threads, true);
  return result;
}

FrameResult propagate_frame(const MeshFrame& prev, const MeshFrame& cur,
                            const PropagationConfig& cfg, int threads) {
  const TriangleIndex index(prev);
  return propagate_frame(prev, index, cur, cfg, threads);
}

std::vector<Vec3> laplacian_smooth_uvw(const MeshFrame& frame, std::vector<Vec3> uvws,
                                       int iterations, double lambda, int threads) {
  check_smooth_inputs(frame, uvws, lambda);
  if (iterations <= 0 || lambda == 0.0) return uvws;
  const auto adjacency = vertex_adjacency(frame);
  std::vector<Vec3> next(uvws.size());
  const auto n = static_cast<std::ptrdiff_t>(uvws.size());
  for (int it = 0; it < iterations; ++it) {
#pragma omp parallel for schedule(static) num_threads(resolve_threads(threads))
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      next[j] = smooth_vertex(uvws, adjacency[j], static_cast<std::size_t>(j), lambda);
    }
    uvws.swap(next);
  }
  return uvws;
}

namespace serial {

FrameResult propagate_frame(const MeshFrame& prev, const TriangleIndex& prev_index,
                            const MeshFrame& cur, const PropagationConfig& cfg) {
  check_frame_inputs(prev, prev_index, cur, cfg);
  FrameResult result;
  result.uvws.reserve(cur.positions.size());
  for (std::size_t j = 0; j < cur.positions.size(); ++j) {
    const VertexTransfer t = transfer_vertex(prev, prev_index, cur.positions[j], cur.velocities[j], cfg);
    result.uvws.push_back(t.uvw);
    if (t.fallback) ++result.fallback_count;
  }
  finish_frame(cur, cfg, result, 1, false);
  return result;
}

std::vector<Vec3> laplacian_smooth_uvw(const MeshFrame& frame, std::vector<Vec3> uvws,
                                       int iterations, double lambda) {
  check_smooth_inputs(frame, uvws, lambda);
  if (iterations <= 0 || lambda == 0.0) return uvws;
  const auto adjacency = vertex_adjacency(frame);
  for (int it = 0; it < iterations; ++it) {
    std::vector<Vec3> next(uvws.size());
    for (std::size_t j = 0; j < uvws.size(); ++j) next[j] = smooth_vertex(uvws, adjacency[j], j, lambda);
    uvws = std::move(next);
  }
  return uvws;
}

}  // namespace serial

PropagationSummary propagate_sequence(const FrameSource& source, const PropagationConfig& cfg,
                                      const FrameSink& sink, int threads) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  PropagationSummary summary;
  if (cfg.bfec && cfg.velocity_convention == VelocityConvention::kPrevious) {
    summary.warnings.emplace_back(
        "bfec assumes current-motion velocities but the sequence declares previous motion");
  }

  std::optional<MeshFrame> prev;
  for (std::size_t i = 0;; ++i) {
    std::optional<MeshFrame> cur;
    try {
      cur = source();
      if (!cur) break;
      if (!prev) {
        validate_frame(*cur);
        std::vector<Vec3> uvws = init_uvw(*cur, cfg.init);
        if (cfg.quantize == Quantize::kHalf) {
          for (Vec3& u : uvws) u = quantize_half(u);
        }
        cur->uvws = std::move(uvws);
        summary.frame_fallbacks.push_back(0);
      } else {
        const TriangleIndex index(*prev);
        FrameResult result = propagate_frame(*prev, index, *cur, cfg, threads);
        cur->uvws = std::move(result.uvws);
        summary.frame_fallbacks.push_back(result.fallback_count);
        summary.fallback_count += result.fallback_count;
        if (result.fallback_count > 0) {
          summary.warnings.push_back("frame " + std::to_string(i) + ": " +
                                     std::to_string(result.fallback_count) +
                                     " vertices used the positional fallback");
        }
      }
      sink(*cur, i);
    } catch (const Error& e) {
      throw Error(e.kind(), "frame " + std::to_string(i) + ": " + e.what());
    }
    prev = std::move(cur);
    ++summary.frames;
  }
  if (summary.frames == 0) throw validation_error("sequence has no frames");
  summary.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

}  // namespace uvwprop
