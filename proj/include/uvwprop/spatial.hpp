#pragma once

#include <cstdint>
#include <vector>

#include "uvwprop/mesh.hpp"

namespace uvwprop {

struct ClosestHit {
  SurfaceLocation location;
  double distance = 0.0;
};

/// Bounding-volume hierarchy over one frame's triangles for closest-location
/// queries. Immutable after construction; queries are safe from any thread.
///
/// Triangle corners are copied into leaf order, so the index stays valid
/// after the source frame is gone.
class TriangleIndex {
 public:
  struct Node {
    Bounds box;
    // Leaves: triangles [first, first + count). Inner nodes: count == 0 and
    // children are at `first` and `first + 1`.
    std::uint32_t first = 0;
    std::uint32_t count = 0;
  };

  static constexpr std::uint32_t kMaxLeafSize = 4;

  TriangleIndex() = default;
  explicit TriangleIndex(const MeshFrame& frame);

  bool empty() const { return corners_.empty(); }
  std::size_t triangle_count() const { return corners_.size(); }

  /// Closest surface location to p. Ties on exact distance resolve to the
  /// smallest original triangle index. Throws kNoSurface when empty.
  ClosestHit closest_location(const Vec3& p) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  /// Original triangle index for each leaf slot.
  const std::vector<std::uint32_t>& order() const { return order_; }

 private:
  struct Corners {
    Vec3 a, b, c;
  };

  void build_child(std::uint32_t node, std::uint32_t first, std::uint32_t count,
                   std::vector<Vec3>& centroids);

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  std::vector<Corners> corners_;
};

inline TriangleIndex build_index(const MeshFrame& frame) { return TriangleIndex(frame); }

inline ClosestHit closest_location(const TriangleIndex& index, const Vec3& p) {
  return index.closest_location(p);
}

/// Squared distance from p to an axis-aligned box (0 inside).
double squared_distance_to_box(const Bounds& box, const Vec3& p);

}  // namespace uvwprop
