#include "uvwprop/spatial.hpp"

#include <algorithm>
#include <limits>

#include "uvwprop/error.hpp"

namespace uvwprop {

double squared_distance_to_box(const Bounds& box, const Vec3& p) {
  double d2 = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    const double v = p[axis];
    const double lo = box.min[axis];
    const double hi = box.max[axis];
    if (v < lo) {
      d2 += (lo - v) * (lo - v);
    } else if (v > hi) {
      d2 += (v - hi) * (v - hi);
    }
  }
  return d2;
}

TriangleIndex::TriangleIndex(const MeshFrame& frame) {
  const std::size_t n = frame.triangles.size();
  if (n == 0) return;
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw validation_error("too many triangles for the spatial index");
  }
  std::vector<Vec3> centroids(n);
  order_.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const Triangle& tri = frame.triangles[t];
    const Vec3& a = frame.positions.at(tri[0]);
    const Vec3& b = frame.positions.at(tri[1]);
    const Vec3& c = frame.positions.at(tri[2]);
    centroids[t] = (1.0 / 3.0) * (a + b + c);
    order_[t] = static_cast<std::uint32_t>(t);
  }
  nodes_.reserve(2 * (n / kMaxLeafSize + 1));
  nodes_.emplace_back();
  build_child(0, 0, static_cast<std::uint32_t>(n), centroids);

  corners_.resize(n);
  for (std::size_t slot = 0; slot < n; ++slot) {
    const Triangle& tri = frame.triangles[order_[slot]];
    corners_[slot] = {frame.positions[tri[0]], frame.positions[tri[1]], frame.positions[tri[2]]};
  }

  // Boxes bottom-up from exact vertex coordinates. Children always follow
  // their parent in nodes_, so a reverse sweep sees children first.
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& node = nodes_[i];
    Bounds box;
    if (node.count > 0) {
      for (std::uint32_t s = node.first; s < node.first + node.count; ++s) {
        box.extend(corners_[s].a);
        box.extend(corners_[s].b);
        box.extend(corners_[s].c);
      }
    } else {
      box.extend(nodes_[node.first].box);
      box.extend(nodes_[node.first + 1].box);
    }
    node.box = box;
  }
}

void TriangleIndex::build_child(std::uint32_t node, std::uint32_t first, std::uint32_t count,
                                std::vector<Vec3>& centroids) {
  if (count <= kMaxLeafSize) {
    nodes_[node].first = first;
    nodes_[node].count = count;
    return;
  }
  Bounds cbox;
  for (std::uint32_t s = first; s < first + count; ++s) cbox.extend(centroids[order_[s]]);
  int axis = 0;
  const Vec3 extent = cbox.max - cbox.min;
  if (extent.y > extent[axis]) axis = 1;
  if (extent.z > extent[axis]) axis = 2;

  const std::uint32_t mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                   [&](std::uint32_t l, std::uint32_t r) {
                     const double cl = centroids[l][axis];
                     const double cr = centroids[r][axis];
                     return cl < cr || (cl == cr && l < r);
                   });
  const auto left = static_cast<std::uint32_t>(nodes_.size());
  nodes_[node].first = left;
  nodes_[node].count = 0;
  nodes_.emplace_back();
  nodes_.emplace_back();
  build_child(left, first, mid - first, centroids);
  build_child(left + 1, mid, first + count - mid, centroids);
}

ClosestHit TriangleIndex::closest_location(const Vec3& p) const {
  if (empty()) throw Error(ErrorKind::kNoSurface, "closest-location query on a frame with no triangles");

  double best_d2 = std::numeric_limits<double>::infinity();
  std::uint32_t best_tri = std::numeric_limits<std::uint32_t>::max();
  std::array<double, 3> best_bary{1.0, 0.0, 0.0};

  // Box distances are lower bounds up to rounding; the relative slack keeps
  // pruning conservative so exact ties are never cut off.
  constexpr double kSlack = 1.0 + 1e-9;

  std::uint32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (squared_distance_to_box(node.box, p) > best_d2 * kSlack) continue;
    if (node.count > 0) {
      for (std::uint32_t s = node.first; s < node.first + node.count; ++s) {
        const Corners& t = corners_[s];
        const TrianglePoint hit = closest_point_on_triangle(t.a, t.b, t.c, p);
        const std::uint32_t tri = order_[s];
        if (hit.squared_distance < best_d2 ||
            (hit.squared_distance == best_d2 && tri < best_tri)) {
          best_d2 = hit.squared_distance;
          best_tri = tri;
          best_bary = hit.bary;
        }
      }
      continue;
    }
    const std::uint32_t l = node.first;
    const std::uint32_t r = node.first + 1;
    const double dl = squared_distance_to_box(nodes_[l].box, p);
    const double dr = squared_distance_to_box(nodes_[r].box, p);
    // Push the farther child first so the nearer one is visited next.
    if (dl <= dr) {
      if (dr <= best_d2 * kSlack) stack[top++] = r;
      if (dl <= best_d2 * kSlack) stack[top++] = l;
    } else {
      if (dl <= best_d2 * kSlack) stack[top++] = l;
      if (dr <= best_d2 * kSlack) stack[top++] = r;
    }
  }
  return {SurfaceLocation{best_tri, best_bary}, std::sqrt(best_d2)};
}

}  // namespace uvwprop
