#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "uvwprop/advect.hpp"
#include "uvwprop/mesh.hpp"

namespace uvwprop {

enum class FrameFormat { kPlyAscii, kPlyBinary, kObj };

/// Reads an ascii or binary_little_endian PLY frame. Vertex properties
/// x,y,z are required, vx,vy,vz and u,v,w optional (all float32). Faces use
/// `property list uchar int vertex_indices`; n-gons are fan-triangulated.
/// Unknown properties and elements are skipped and reported in `warnings`.
MeshFrame read_frame(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

/// Parses PLY bytes already in memory; `name` only labels diagnostics.
MeshFrame parse_ply(std::string_view bytes, const std::string& name,
                    std::vector<std::string>* warnings = nullptr);

/// Writes a frame as PLY (float32 payload, properties x,y,z,vx,vy,vz[,u,v,w])
/// or as OBJ. OBJ drops velocities.
void write_frame(const MeshFrame& frame, const std::filesystem::path& path, FrameFormat format);

/// Shortest decimal text that reads back as the same float.
std::string format_float(float value);

struct SequenceManifest {
  int version = 1;
  double fps = 24.0;
  VelocityConvention velocity_convention = VelocityConvention::kPrevious;
  std::vector<std::string> frames;
  // Directory the frame paths are relative to. Not serialized.
  std::filesystem::path directory;

  std::filesystem::path frame_path(std::size_t i) const { return directory / frames.at(i); }

  friend bool operator==(const SequenceManifest& a, const SequenceManifest& b) {
    return a.version == b.version && a.fps == b.fps &&
           a.velocity_convention == b.velocity_convention && a.frames == b.frames;
  }
};

SequenceManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const SequenceManifest& manifest, const std::filesystem::path& path);

/// Frame source over a manifest that reads up to two frames ahead on
/// background threads. Frames come out strictly in manifest order.
class FramePrefetcher {
 public:
  static constexpr std::size_t kDepth = 2;

  explicit FramePrefetcher(SequenceManifest manifest);
  ~FramePrefetcher();
  FramePrefetcher(const FramePrefetcher&) = delete;
  FramePrefetcher& operator=(const FramePrefetcher&) = delete;

  std::optional<MeshFrame> next();
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  struct Loaded {
    MeshFrame frame;
    std::vector<std::string> warnings;
  };
  void refill();

  SequenceManifest manifest_;
  std::size_t scheduled_ = 0;
  std::deque<std::future<Loaded>> pending_;
  std::vector<std::string> warnings_;
};

}  // namespace uvwprop
