#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "uvwprop/mesh.hpp"

namespace uvwprop {

struct DriftError {
  double mean = 0.0;
  double max = 0.0;
};

using UvwMap = std::function<Vec3(const Vec3& position)>;

/// Euclidean uvw error per vertex against a reference list.
DriftError drift_error(const MeshFrame& frame, std::span<const Vec3> reference);
/// Same, against an analytic position -> uvw map.
DriftError drift_error(const MeshFrame& frame, const UvwMap& reference);

/// uvw at the closest surface location to each probe.
std::vector<Vec3> sample_probes(const MeshFrame& frame, std::span<const Vec3> probes,
                                int threads = 0);

/// Mean |u[t+1] - 2u[t] + u[t-1]| over probes for every interior frame t.
/// Element t of the result belongs to frame t; the two end frames get 0.
std::vector<double> jitter_per_frame(const std::vector<std::vector<Vec3>>& samples);

/// Mean temporal second difference of probe samples over probes and
/// interior frames. Needs >= 3 frames, each with triangles and uvws.
double probe_jitter(std::span<const MeshFrame> frames, std::span<const Vec3> probes,
                    int threads = 0);

/// Deterministic probe points, uniform inside `box`.
std::vector<Vec3> sample_probe_points(const Bounds& box, std::size_t count, std::uint64_t seed);

struct FrameMetrics {
  std::optional<DriftError> drift;
  double probe_jitter = 0.0;
  std::size_t fallback_count = 0;
};

struct MetricsReport {
  std::vector<FrameMetrics> frames;
  std::optional<double> probe_jitter;
  std::size_t probe_count = 0;
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json() const;
};

}  // namespace uvwprop
