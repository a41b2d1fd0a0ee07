#include "uvwprop/cli.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "uvwprop/advect.hpp"
#include "uvwprop/error.hpp"
#include "uvwprop/meshio.hpp"
#include "uvwprop/metrics.hpp"
#include "uvwprop/seqgen.hpp"
#include "uvwprop/spatial.hpp"

namespace uvwprop {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kManifestName = "seq.json";
constexpr const char* kSummaryName = "summary.json";
constexpr const char* kGroundTruthName = "ground_truth.json";

Vec3 to_vec3(const std::vector<double>& v) { return {v.at(0), v.at(1), v.at(2)}; }

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v.x, v.y, v.z}); }

std::string frame_file_name(std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04zu.%s", i + 1, ext);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write " + path.string());
  out << text;
  if (!out) throw io_error("failed writing " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw parse_error(path.string() + ": invalid JSON: " + e.what());
  }
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw io_error("cannot create directory " + dir.string());
}

// --- gen --------------------------------------------------------------------

struct GenOptions {
  std::string preset;
  int frames = 0;
  int resolution = 0;
  std::string out = ".";
  std::string convention = "previous";
  double fps = 24.0;
  bool ascii = false;
  int threads = 0;
};

GeneratorPreset make_preset(const GenOptions& o) {
  const VelocityConvention conv = parse_velocity_convention(o.convention);
  if (o.preset == "translate_sphere") {
    TranslateSphere p;
    p.frames = o.frames;
    if (o.resolution > 0) p.resolution = o.resolution;
    p.convention = conv;
    return p;
  }
  if (o.preset == "remesh_sphere") {
    RemeshSphere p;
    p.frames = o.frames;
    if (o.resolution > 0) {
      p.res_a = o.resolution;
      p.res_b = std::max(4, 3 * o.resolution / 4);
    }
    p.convention = conv;
    return p;
  }
  if (o.preset == "rotate_sphere") {
    RotateSphere p;
    p.frames = o.frames;
    if (o.resolution > 0) p.resolution = o.resolution;
    p.convention = conv;
    return p;
  }
  MetaballsMerge p;
  p.frames = o.frames;
  if (o.resolution > 0) p.grid_resolution = o.resolution;
  if (conv != VelocityConvention::kPrevious) {
    throw usage_error("metaballs_merge only emits previous-motion velocities");
  }
  return p;
}

int run_gen(const GenOptions& o, std::ostream& out) {
  const GeneratorPreset preset = make_preset(o);
  validate_preset(preset);
  const fs::path dir(o.out);
  ensure_directory(dir);

  SequenceManifest manifest;
  manifest.fps = o.fps;
  manifest.velocity_convention = preset_convention(preset);
  ordered_json truth = ordered_json::array();
  bool analytic = false;
  const int n = preset_frame_count(preset);
  for (int i = 0; i < n; ++i) {
    const MeshFrame frame = generate_frame(preset, i, o.threads);
    const std::string name = frame_file_name(static_cast<std::size_t>(i), "ply");
    write_frame(frame, dir / name, o.ascii ? FrameFormat::kPlyAscii : FrameFormat::kPlyBinary);
    manifest.frames.push_back(name);
    if (const auto m = ground_truth_map(preset, i)) {
      analytic = true;
      ordered_json rec;
      rec["linear"] = m->linear;
      rec["offset"] = vec_json(m->offset);
      truth.push_back(std::move(rec));
    }
  }
  save_manifest(manifest, dir / kManifestName);
  if (analytic) {
    ordered_json doc;
    doc["version"] = 1;
    doc["preset"] = preset_name(preset);
    doc["frames"] = std::move(truth);
    write_text(dir / kGroundTruthName, doc.dump(2) + "\n");
  }
  out << "wrote " << n << " frames to " << dir.string() << "\n";
  return kExitOk;
}

// --- propagate --------------------------------------------------------------

struct PropagateOptions {
  std::string manifest;
  std::string init = "positional";
  std::vector<double> origin{0.0, 0.0, 0.0};
  std::vector<double> scale{1.0, 1.0, 1.0};
  double vel_scale = 1.0;
  std::string vel_convention;  // empty: take the manifest's
  bool bfec = false;
  int smooth_iters = 0;
  double smooth_lambda = 0.5;
  std::string quantize = "none";
  double max_distance = std::numeric_limits<double>::infinity();
  std::string format = "ply";
  int threads = 0;
  std::string out;
};

ordered_json config_json(const PropagationConfig& cfg) {
  ordered_json c;
  c["init"] = to_string(cfg.init.kind);
  c["origin"] = vec_json(cfg.init.origin);
  c["scale"] = vec_json(cfg.init.scale);
  c["velocity_convention"] = to_string(cfg.velocity_convention);
  c["velocity_scale"] = cfg.velocity_scale;
  c["bfec"] = cfg.bfec;
  c["smooth_iterations"] = cfg.smooth_iterations;
  c["smooth_lambda"] = cfg.smooth_lambda;
  c["quantize"] = to_string(cfg.quantize);
  if (std::isfinite(cfg.max_distance)) {
    c["max_distance"] = cfg.max_distance;
  } else {
    c["max_distance"] = nullptr;  // unbounded
  }
  return c;
}

int run_propagate(const PropagateOptions& o, std::ostream& out, std::ostream& err) {
  const SequenceManifest in = load_manifest(o.manifest);

  PropagationConfig cfg;
  cfg.init.kind = o.init == "file" ? InitKind::kFromFile : InitKind::kPositional;
  cfg.init.origin = to_vec3(o.origin);
  cfg.init.scale = to_vec3(o.scale);
  cfg.velocity_convention =
      o.vel_convention.empty() ? in.velocity_convention : parse_velocity_convention(o.vel_convention);
  cfg.velocity_scale = o.vel_scale;
  cfg.bfec = o.bfec;
  cfg.smooth_iterations = o.smooth_iters;
  cfg.smooth_lambda = o.smooth_lambda;
  cfg.quantize = o.quantize == "half" ? Quantize::kHalf : Quantize::kNone;
  cfg.max_distance = o.max_distance;
  cfg.validate();

  const fs::path dir(o.out);
  ensure_directory(dir);
  const bool obj = o.format == "obj";
  const FrameFormat format = obj ? FrameFormat::kObj
                                 : (o.format == "ply_ascii" ? FrameFormat::kPlyAscii : FrameFormat::kPlyBinary);

  SequenceManifest result;
  result.fps = in.fps;
  result.velocity_convention = cfg.velocity_convention;

  FramePrefetcher prefetch(in);
  const PropagationSummary summary = propagate_sequence(
      [&] { return prefetch.next(); }, cfg,
      [&](const MeshFrame& frame, std::size_t i) {
        const std::string name = frame_file_name(i, obj ? "obj" : "ply");
        write_frame(frame, dir / name, format);
        result.frames.push_back(name);
      },
      o.threads);
  save_manifest(result, dir / kManifestName);

  // Timing and thread count stay out of the file so reruns are byte-identical.
  ordered_json doc;
  doc["version"] = 1;
  doc["input_manifest"] = fs::path(o.manifest).lexically_normal().generic_string();
  doc["config"] = config_json(cfg);
  doc["frames"] = summary.frames;
  doc["fallback_count"] = summary.fallback_count;
  doc["frame_fallbacks"] = summary.frame_fallbacks;
  doc["warnings"] = summary.warnings;
  write_text(dir / kSummaryName, doc.dump(2) + "\n");

  for (const auto& w : prefetch.warnings()) err << "uvwprop: warning: " << w << "\n";
  for (const auto& w : summary.warnings) err << "uvwprop: warning: " << w << "\n";
  out << "propagated " << summary.frames << " frames in " << summary.seconds << " s ("
      << summary.fallback_count << " fallbacks)\n";
  return kExitOk;
}

// --- metrics ----------------------------------------------------------------

struct MetricsOptions {
  std::string manifest;
  std::string reference;
  std::string ground_truth;
  std::vector<double> origin{0.0, 0.0, 0.0};
  std::vector<double> scale{1.0, 1.0, 1.0};
  std::size_t probes = 64;
  std::uint64_t seed = 1;
  std::string report;
  int threads = 0;
};

std::vector<AffineMap> load_ground_truth(const fs::path& path) {
  const nlohmann::json doc = read_json(path);
  std::vector<AffineMap> maps;
  try {
    if (doc.at("version").get<int>() != 1) throw validation_error(path.string() + ": version must be 1");
    for (const auto& rec : doc.at("frames")) {
      AffineMap m;
      m.linear = rec.at("linear").get<std::array<double, 9>>();
      const auto off = rec.at("offset").get<std::vector<double>>();
      if (off.size() != 3) throw validation_error(path.string() + ": offset needs 3 values");
      m.offset = to_vec3(off);
      maps.push_back(m);
    }
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(path.string() + ": " + e.what());
  }
  return maps;
}

int run_metrics(const MetricsOptions& o, std::ostream& out) {
  const SequenceManifest manifest = load_manifest(o.manifest);
  const std::size_t n = manifest.frames.size();

  std::vector<AffineMap> truth;
  std::optional<SequenceManifest> reference;
  if (!o.ground_truth.empty()) {
    truth = load_ground_truth(o.ground_truth);
    if (truth.size() != n) {
      throw validation_error("ground truth has " + std::to_string(truth.size()) +
                             " frames but the sequence has " + std::to_string(n));
    }
  }
  if (!o.reference.empty()) {
    reference = load_manifest(o.reference);
    if (reference->frames.size() != n) throw validation_error("reference sequence length differs");
  }

  std::vector<std::size_t> fallbacks(n, 0);
  const fs::path summary_path = manifest.directory / kSummaryName;
  if (fs::is_regular_file(summary_path)) {
    const auto doc = read_json(summary_path);
    if (doc.contains("frame_fallbacks")) {
      const auto list = doc["frame_fallbacks"].get<std::vector<std::size_t>>();
      for (std::size_t i = 0; i < std::min(n, list.size()); ++i) fallbacks[i] = list[i];
    }
  }

  // Probes are placed inside the union of all frame bounds, so bounds are
  // gathered in a first pass and uvws are sampled in a second.
  Bounds all;
  for (std::size_t i = 0; i < n; ++i) all.extend(frame_bounds(read_frame(manifest.frame_path(i))));

  MetricsReport report;
  report.seed = o.seed;
  report.probe_count = o.probes;
  const bool want_jitter = n >= 3 && o.probes > 0 && !all.empty();
  const std::vector<Vec3> probes =
      want_jitter ? sample_probe_points(all, o.probes, o.seed) : std::vector<Vec3>{};
  std::vector<std::vector<Vec3>> samples;
  InitStrategy material;
  material.origin = to_vec3(o.origin);
  material.scale = to_vec3(o.scale);

  for (std::size_t i = 0; i < n; ++i) {
    const MeshFrame frame = read_frame(manifest.frame_path(i));
    if (!frame.uvws) throw validation_error(manifest.frame_path(i).string() + ": frame carries no uvws");
    FrameMetrics fm;
    fm.fallback_count = fallbacks[i];
    if (!truth.empty()) {
      const AffineMap& m = truth[i];
      fm.drift = drift_error(frame, [&](const Vec3& p) { return positional_uvw(m.apply(p), material); });
    } else if (reference) {
      const MeshFrame ref = read_frame(reference->frame_path(i));
      if (!ref.uvws) throw validation_error(reference->frame_path(i).string() + ": frame carries no uvws");
      fm.drift = drift_error(frame, *ref.uvws);
    }
    if (want_jitter) samples.push_back(sample_probes(frame, probes, o.threads));
    report.frames.push_back(fm);
  }
  if (want_jitter) {
    const std::vector<double> per_frame = jitter_per_frame(samples);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      report.frames[i].probe_jitter = per_frame[i];
      sum += per_frame[i];
    }
    report.probe_jitter = sum / static_cast<double>(n - 2);
  }
  write_text(o.report, report.to_json().dump(2) + "\n");
  out << "wrote metrics for " << n << " frames to " << o.report << "\n";
  return kExitOk;
}

// --- query ------------------------------------------------------------------

int run_query(const std::string& frame_path, const std::vector<double>& point, std::ostream& out) {
  const MeshFrame frame = read_frame(frame_path);
  const TriangleIndex index(frame);
  const ClosestHit hit = index.closest_location(to_vec3(point));
  const auto& b = hit.location.bary;
  out.precision(17);
  out << "triangle " << hit.location.triangle << "\n";
  out << "bary " << b[0] << " " << b[1] << " " << b[2] << "\n";
  out << "distance " << hit.distance << "\n";
  if (frame.uvws) {
    const Vec3 u = barycentric_interpolate(frame, hit.location, Channel::kUvw);
    out << "uvw " << u.x << " " << u.y << " " << u.z << "\n";
  }
  return kExitOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
      return kExitUsage;
    case ErrorKind::kIo:
    case ErrorKind::kParse:
      return kExitIo;
    case ErrorKind::kValidation:
    case ErrorKind::kNoSurface:
      return kExitValidation;
  }
  return kExitIo;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temporally coherent 3D texture coordinates for mesh sequences", "uvwprop"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic mesh sequence");
  gen_cmd->add_option("--preset", gen.preset, "Sequence preset")
      ->required()
      ->check(CLI::IsMember({"translate_sphere", "remesh_sphere", "rotate_sphere", "metaballs_merge"}));
  gen_cmd->add_option("--frames", gen.frames, "Number of frames")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--resolution", gen.resolution,
                      "Sphere stacks, or metaball grid cells along the longest axis "
                      "(default: 16 for spheres, 24 for metaballs; remesh_sphere alternates R and 3R/4)")
      ->check(CLI::Range(4, 4096));
  gen_cmd->add_option("--out", gen.out, "Output directory")->capture_default_str();
  gen_cmd->add_option("--vel-convention", gen.convention,
                      "Velocities emitted by rigid presets: previous or current motion")
      ->check(CLI::IsMember({"previous", "current"}))
      ->capture_default_str();
  gen_cmd->add_option("--fps", gen.fps, "Frame rate recorded in the manifest")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen_cmd->add_flag("--ascii", gen.ascii, "Write ascii PLY instead of binary");
  gen_cmd->add_option("--threads", gen.threads, "Worker threads (0: OpenMP default)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  PropagateOptions prop;
  auto* prop_cmd = app.add_subcommand("propagate", "Generate uvws for a sequence");
  prop_cmd->add_option("--manifest", prop.manifest, "Input sequence manifest")->required();
  prop_cmd->add_option("--init", prop.init, "Frame-1 uvws: positional map or the file's own uvws")
      ->check(CLI::IsMember({"positional", "file"}))
      ->capture_default_str();
  prop_cmd->add_option("--origin", prop.origin, "Positional origin x,y,z")
      ->delimiter(',')
      ->expected(3)
      ->capture_default_str();
  prop_cmd->add_option("--scale", prop.scale, "Positional scale x,y,z")
      ->delimiter(',')
      ->expected(3)
      ->capture_default_str();
  prop_cmd->add_option("--vel-scale", prop.vel_scale, "Multiplier turning stored velocities into per-frame displacement")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  prop_cmd->add_option("--vel-convention", prop.vel_convention,
                       "Velocity convention (default: the manifest's)")
      ->check(CLI::IsMember({"previous", "current"}));
  prop_cmd->add_flag("--bfec", prop.bfec, "Backward-forward error compensation (default: off)");
  prop_cmd->add_option("--smooth-iters", prop.smooth_iters, "Laplacian uvw smoothing sweeps per frame")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  prop_cmd->add_option("--smooth-lambda", prop.smooth_lambda, "Smoothing step in [0,1]")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  prop_cmd->add_option("--quantize", prop.quantize, "Store uvws at none or half precision")
      ->check(CLI::IsMember({"none", "half"}))
      ->capture_default_str();
  prop_cmd->add_option("--max-distance", prop.max_distance,
                       "Beyond this query distance the positional rule is used (default: unbounded)")
      ->check(CLI::PositiveNumber);
  prop_cmd->add_option("--format", prop.format, "Output frame format: ply (binary), ply_ascii or obj")
      ->check(CLI::IsMember({"ply", "ply_ascii", "obj"}))
      ->capture_default_str();
  prop_cmd->add_option("--threads", prop.threads, "Worker threads (0: OpenMP default)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  prop_cmd->add_option("--out", prop.out, "Output directory")->required();

  MetricsOptions met;
  auto* met_cmd = app.add_subcommand("metrics", "Measure drift and probe jitter of a uvw sequence");
  met_cmd->add_option("--manifest", met.manifest, "Sequence manifest with uvws")->required();
  auto* ref_opt = met_cmd->add_option("--reference", met.reference, "Manifest of reference uvw frames");
  auto* gt_opt = met_cmd->add_option("--ground-truth", met.ground_truth, "Analytic map JSON written by gen");
  ref_opt->excludes(gt_opt);
  met_cmd->add_option("--origin", met.origin, "Positional origin applied to the ground-truth map")
      ->delimiter(',')
      ->expected(3)
      ->capture_default_str();
  met_cmd->add_option("--scale", met.scale, "Positional scale applied to the ground-truth map")
      ->delimiter(',')
      ->expected(3)
      ->capture_default_str();
  met_cmd->add_option("--probes", met.probes, "Number of world-space jitter probes")->capture_default_str();
  met_cmd->add_option("--seed", met.seed, "Probe placement seed")->capture_default_str();
  met_cmd->add_option("--threads", met.threads, "Worker threads (0: OpenMP default)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  met_cmd->add_option("--report", met.report, "Output report JSON")->required();

  std::string query_frame;
  std::vector<double> query_point;
  auto* query_cmd = app.add_subcommand("query", "Closest surface location on one frame");
  query_cmd->add_option("--frame", query_frame, "PLY frame")->required();
  query_cmd->add_option("--point", query_point, "Query point x,y,z")
      ->required()
      ->delimiter(',')
      ->expected(3);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "uvwprop: usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen(gen, out);
    if (*prop_cmd) return run_propagate(prop, out, err);
    if (*met_cmd) return run_metrics(met, out);
    return run_query(query_frame, query_point, out);
  } catch (const Error& e) {
    err << "uvwprop: error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "uvwprop: error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "uvwprop: error: " << e.what() << "\n";
    return kExitIo;
  }
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"uvwprop"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace uvwprop
