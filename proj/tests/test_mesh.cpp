#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "uvwprop/error.hpp"
#include "uvwprop/mesh.hpp"

using namespace uvwprop;

namespace {

MeshFrame corner_frame() {
  MeshFrame f;
  f.positions = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  f.velocities.assign(3, Vec3{});
  f.triangles = {{0, 1, 2}};
  return f;
}

void check_bary(const std::array<double, 3>& got, const std::array<double, 3>& want) {
  for (int k = 0; k < 3; ++k) CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-15));
}

}  // namespace

TEST_CASE("barycentric_interpolate reproduces corner, centroid and linear combinations") {
  MeshFrame f = corner_frame();
  f.uvws = std::vector<Vec3>{{2, 2, 2}, {4, 4, 4}, {6, 6, 6}};

  CHECK(barycentric_interpolate(f, {0, {1, 0, 0}}, Channel::kPosition) == Vec3{0, 0, 0});
  const Vec3 centroid = barycentric_interpolate(f, {0, {1.0 / 3, 1.0 / 3, 1.0 / 3}}, Channel::kPosition);
  CHECK(centroid.x == doctest::Approx(1.0 / 3));
  CHECK(centroid.y == doctest::Approx(1.0 / 3));
  CHECK(centroid.z == 0.0);
  CHECK(barycentric_interpolate(f, {0, {0.5, 0.25, 0.25}}, Channel::kUvw) == Vec3{3.5, 3.5, 3.5});
}

TEST_CASE("barycentric_interpolate errors") {
  MeshFrame f = corner_frame();
  CHECK_THROWS_AS(barycentric_interpolate(f, {0, {1, 0, 0}}, Channel::kUvw), Error);
  CHECK_THROWS_AS(barycentric_interpolate(f, {1, {1, 0, 0}}, Channel::kPosition), Error);
}

TEST_CASE("closest_point_on_triangle regions") {
  const Vec3 a{0, 0, 0}, b{1, 0, 0}, c{0, 1, 0};
  SUBCASE("interior projection") {
    const auto r = closest_point_on_triangle(a, b, c, {0.25, 0.25, 1});
    check_bary(r.bary, {0.5, 0.25, 0.25});
    CHECK(r.squared_distance == doctest::Approx(1.0));
  }
  SUBCASE("vertex region") {
    const auto r = closest_point_on_triangle(a, b, c, {2, 0, 0});
    check_bary(r.bary, {0, 1, 0});
    CHECK(r.squared_distance == 1.0);
  }
  SUBCASE("edge region") {
    const auto r = closest_point_on_triangle(a, b, c, {0.5, -1, 0});
    check_bary(r.bary, {0.5, 0.5, 0});
    CHECK(r.squared_distance == 1.0);
  }
  SUBCASE("query at a vertex is exact") {
    const auto r = closest_point_on_triangle(a, b, c, c);
    CHECK(r.bary == std::array<double, 3>{0, 0, 1});
    CHECK(r.squared_distance == 0.0);
  }
}

TEST_CASE("closest_point_on_triangle handles degenerate triangles") {
  SUBCASE("collinear") {
    const auto r = closest_point_on_triangle({0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {1.5, 1, 0});
    CHECK(r.squared_distance == doctest::Approx(1.0));
    const Vec3 q = interpolate_corners({0, 0, 0}, {1, 0, 0}, {2, 0, 0}, r.bary);
    CHECK(q.x == doctest::Approx(1.5));
  }
  SUBCASE("coincident") {
    const Vec3 p{1, 1, 1};
    const auto r = closest_point_on_triangle(p, p, p, {1, 1, 3});
    CHECK(r.squared_distance == doctest::Approx(4.0));
    CHECK(r.bary[0] + r.bary[1] + r.bary[2] == doctest::Approx(1.0));
  }
  SUBCASE("two coincident corners") {
    const auto r = closest_point_on_triangle({0, 0, 0}, {0, 0, 0}, {0, 2, 0}, {1, 1, 0});
    CHECK(r.squared_distance == doctest::Approx(1.0));
  }
}

TEST_CASE("closest_point_on_triangle properties on random input") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  auto rv = [&] { return Vec3{u(rng), u(rng), u(rng)}; };
  for (int i = 0; i < 10000; ++i) {
    const Vec3 a = rv(), b = rv(), c = rv(), p = rv();
    const auto r = closest_point_on_triangle(a, b, c, p);
    const double sum = r.bary[0] + r.bary[1] + r.bary[2];
    REQUIRE(std::fabs(sum - 1.0) <= 1e-12);
    for (double w : r.bary) REQUIRE((w >= 0.0 && w <= 1.0));
    const double bound = std::min({squared_norm(p - a), squared_norm(p - b), squared_norm(p - c)});
    REQUIRE(r.squared_distance <= bound * (1.0 + 1e-12));
    // Distance is consistent with the reconstructed point.
    const Vec3 q = interpolate_corners(a, b, c, r.bary);
    REQUIRE(r.squared_distance == squared_norm(p - q));
  }
}

TEST_CASE("closest point of an in-plane projection reconstructs the projection") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Vec3 a{0.1, 0.2, 0.3}, b{1.4, 0.1, 0.5}, c{0.3, 1.2, 0.2};
  const Vec3 n = cross(b - a, c - a);
  const Vec3 unit_n = (1.0 / norm(n)) * n;
  for (int i = 0; i < 1000; ++i) {
    double s = u(rng), t = u(rng);
    if (s + t > 1.0) {
      s = 1.0 - s;
      t = 1.0 - t;
    }
    const Vec3 inside = a + s * (b - a) + t * (c - a);
    const Vec3 p = inside + (u(rng) - 0.5) * unit_n;
    const auto r = closest_point_on_triangle(a, b, c, p);
    const Vec3 q = interpolate_corners(a, b, c, r.bary);
    REQUIRE(norm(q - inside) <= 1e-12 * norm(inside));
  }
}

TEST_CASE("vertex_adjacency") {
  MeshFrame f;
  f.positions.assign(5, Vec3{});
  f.velocities.assign(5, Vec3{});
  f.triangles = {{0, 1, 2}, {1, 3, 2}};
  const auto adj = vertex_adjacency(f);
  CHECK(adj[0] == std::vector<std::uint32_t>{1, 2});
  CHECK(adj[1] == std::vector<std::uint32_t>{0, 2, 3});
  CHECK(adj[2] == std::vector<std::uint32_t>{0, 1, 3});
  CHECK(adj[4].empty());

  const MeshFrame single = corner_frame();
  const auto a1 = vertex_adjacency(single);
  CHECK(a1[0] == std::vector<std::uint32_t>{1, 2});
  CHECK(a1[1] == std::vector<std::uint32_t>{0, 2});
  CHECK(a1[2] == std::vector<std::uint32_t>{0, 1});
}

TEST_CASE("vertex_adjacency is symmetric without self loops") {
  MeshFrame f = oracle::random_frame(200, 3);
  // Stitch random triangles together, including degenerate ones.
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(f.positions.size() - 1));
  for (int i = 0; i < 300; ++i) f.triangles.push_back({pick(rng), pick(rng), pick(rng)});
  const auto adj = vertex_adjacency(f);
  for (std::uint32_t j = 0; j < adj.size(); ++j) {
    for (std::uint32_t k : adj[j]) {
      REQUIRE(k != j);
      REQUIRE(std::binary_search(adj[k].begin(), adj[k].end(), j));
    }
  }
}

TEST_CASE("validate_frame catches broken invariants") {
  MeshFrame f = corner_frame();
  CHECK_NOTHROW(validate_frame(f));
  f.triangles.push_back({0, 1, 7});
  CHECK_THROWS_WITH_AS(validate_frame(f), doctest::Contains("face 1"), Error);
  f = corner_frame();
  f.velocities.pop_back();
  CHECK_THROWS_AS(validate_frame(f), Error);
  f = corner_frame();
  f.positions[1].x = std::nan("");
  CHECK_THROWS_AS(validate_frame(f), Error);
}
