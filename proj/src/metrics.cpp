#include "uvwprop/metrics.hpp"

#include <omp.h>

#include <algorithm>
#include <random>

#include "uvwprop/error.hpp"
#include "uvwprop/spatial.hpp"

namespace uvwprop {

namespace {

const std::vector<Vec3>& require_uvws(const MeshFrame& frame) {
  if (!frame.uvws) throw validation_error("frame carries no uvws");
  return *frame.uvws;
}

DriftError reduce(const std::vector<double>& errors) {
  DriftError out;
  if (errors.empty()) return out;
  double sum = 0.0;
  for (double e : errors) {
    sum += e;
    out.max = std::max(out.max, e);
  }
  out.mean = sum / static_cast<double>(errors.size());
  return out;
}

}  // namespace

DriftError drift_error(const MeshFrame& frame, std::span<const Vec3> reference) {
  const auto& uvws = require_uvws(frame);
  if (reference.size() != uvws.size()) {
    throw validation_error("reference has " + std::to_string(reference.size()) +
                           " uvws but the frame has " + std::to_string(uvws.size()));
  }
  std::vector<double> errors(uvws.size());
  for (std::size_t j = 0; j < uvws.size(); ++j) errors[j] = norm(uvws[j] - reference[j]);
  return reduce(errors);
}

DriftError drift_error(const MeshFrame& frame, const UvwMap& reference) {
  const auto& uvws = require_uvws(frame);
  std::vector<double> errors(uvws.size());
  for (std::size_t j = 0; j < uvws.size(); ++j) {
    errors[j] = norm(uvws[j] - reference(frame.positions[j]));
  }
  return reduce(errors);
}

std::vector<Vec3> sample_probes(const MeshFrame& frame, std::span<const Vec3> probes, int threads) {
  require_uvws(frame);
  if (frame.triangles.empty()) throw validation_error("cannot sample probes on an empty frame");
  const TriangleIndex index(frame);
  std::vector<Vec3> out(probes.size());
  const auto n = static_cast<std::ptrdiff_t>(probes.size());
#pragma omp parallel for schedule(static) num_threads(threads > 0 ? threads : omp_get_max_threads())
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const ClosestHit hit = index.closest_location(probes[k]);
    out[k] = barycentric_interpolate(frame, hit.location, Channel::kUvw);
  }
  return out;
}

std::vector<double> jitter_per_frame(const std::vector<std::vector<Vec3>>& samples) {
  std::vector<double> out(samples.size(), 0.0);
  for (std::size_t t = 1; t + 1 < samples.size(); ++t) {
    const auto& a = samples[t - 1];
    const auto& b = samples[t];
    const auto& c = samples[t + 1];
    if (a.size() != b.size() || b.size() != c.size()) {
      throw validation_error("probe sample counts differ between frames");
    }
    if (b.empty()) continue;
    double sum = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) sum += norm(c[k] - 2.0 * b[k] + a[k]);
    out[t] = sum / static_cast<double>(b.size());
  }
  return out;
}

double probe_jitter(std::span<const MeshFrame> frames, std::span<const Vec3> probes, int threads) {
  if (frames.size() < 3) throw validation_error("probe jitter needs at least 3 frames");
  std::vector<std::vector<Vec3>> samples;
  samples.reserve(frames.size());
  for (const MeshFrame& f : frames) samples.push_back(sample_probes(f, probes, threads));
  const std::vector<double> per_frame = jitter_per_frame(samples);
  double sum = 0.0;
  for (std::size_t t = 1; t + 1 < per_frame.size(); ++t) sum += per_frame[t];
  return sum / static_cast<double>(frames.size() - 2);
}

std::vector<Vec3> sample_probe_points(const Bounds& box, std::size_t count, std::uint64_t seed) {
  if (box.empty()) throw validation_error("cannot place probes in an empty bounding box");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec3> out(count);
  const Vec3 extent = box.max - box.min;
  for (Vec3& p : out) {
    const double u = unit(rng);
    const double v = unit(rng);
    const double w = unit(rng);
    p = box.min + Vec3{u * extent.x, v * extent.y, w * extent.z};
  }
  return out;
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["version"] = 1;
  nlohmann::ordered_json frame_list = nlohmann::ordered_json::array();
  double drift_mean_sum = 0.0;
  double drift_max = 0.0;
  std::size_t drift_frames = 0;
  std::size_t fallbacks = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const FrameMetrics& f = frames[i];
    nlohmann::ordered_json rec;
    rec["index"] = i;
    if (f.drift) {
      rec["drift_mean"] = f.drift->mean;
      rec["drift_max"] = f.drift->max;
      drift_mean_sum += f.drift->mean;
      drift_max = std::max(drift_max, f.drift->max);
      ++drift_frames;
    }
    rec["probe_jitter"] = f.probe_jitter;
    rec["fallback_count"] = f.fallback_count;
    fallbacks += f.fallback_count;
    frame_list.push_back(std::move(rec));
  }
  doc["frames"] = std::move(frame_list);

  nlohmann::ordered_json agg;
  agg["frame_count"] = frames.size();
  if (drift_frames > 0) {
    agg["drift_mean"] = drift_mean_sum / static_cast<double>(drift_frames);
    agg["drift_max"] = drift_max;
    agg["final_drift_mean"] = frames.back().drift->mean;
    agg["final_drift_max"] = frames.back().drift->max;
  }
  if (probe_jitter) agg["probe_jitter"] = *probe_jitter;
  agg["probe_count"] = probe_count;
  agg["probe_seed"] = seed;
  agg["fallback_count"] = fallbacks;
  doc["aggregate"] = std::move(agg);
  return doc;
}

}  // namespace uvwprop
