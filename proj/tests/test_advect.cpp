#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "oracles.hpp"
#include "uvwprop/advect.hpp"
#include "uvwprop/error.hpp"
#include "uvwprop/seqgen.hpp"

using namespace uvwprop;

namespace {

MeshFrame unit_triangle() {
  MeshFrame f;
  f.positions = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  f.velocities.assign(3, Vec3{});
  f.triangles = {{0, 1, 2}};
  return f;
}

// Splits every triangle into four at edge midpoints.
MeshFrame subdivide(const MeshFrame& f) {
  MeshFrame out;
  out.positions = f.positions;
  out.velocities = f.velocities;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
  auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
    const auto key = std::minmax(a, b);
    const auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(out.positions.size());
    out.positions.push_back(0.5 * (f.positions[a] + f.positions[b]));
    out.velocities.push_back(0.5 * (f.velocities[a] + f.velocities[b]));
    mid.emplace(key, id);
    return id;
  };
  for (const Triangle& t : f.triangles) {
    const auto ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
    out.triangles.push_back({t[0], ab, ca});
    out.triangles.push_back({ab, t[1], bc});
    out.triangles.push_back({ca, bc, t[2]});
    out.triangles.push_back({ab, bc, ca});
  }
  return out;
}

std::vector<Vec3> random_uvws(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Vec3> out(n);
  for (Vec3& v : out) v = {u(rng), u(rng), u(rng)};
  return out;
}

std::vector<MeshFrame> run_sequence(std::vector<MeshFrame> frames, const PropagationConfig& cfg,
                                    PropagationSummary* summary = nullptr, int threads = 0) {
  std::size_t next = 0;
  std::vector<MeshFrame> out;
  const auto s = propagate_sequence(
      [&]() -> std::optional<MeshFrame> {
        if (next == frames.size()) return std::nullopt;
        return frames[next++];
      },
      cfg, [&](const MeshFrame& f, std::size_t) { out.push_back(f); }, threads);
  if (summary) *summary = s;
  return out;
}

}  // namespace

TEST_CASE("backtrack point") {
  CHECK(backtrack_point({1, 2, 3}, {0.5, 0, -1}, 1.0) == Vec3{0.5, 2, 4});
  CHECK(backtrack_point({1, 2, 3}, {0.5, 0, -1}, 2.0) == Vec3{0, 2, 5});
  CHECK(backtrack_point({1, 2, 3}, {}, 3.0) == Vec3{1, 2, 3});
}

TEST_CASE("init_uvw strategies") {
  MeshFrame f = unit_triangle();
  InitStrategy s;
  CHECK(init_uvw(f, s) == f.positions);
  s.origin = {1, 1, 1};
  s.scale = {2, 1, 0.5};
  CHECK(init_uvw(f, s)[1] == Vec3{0, -1, -0.5});

  InitStrategy file{InitKind::kFromFile, {}, {1, 1, 1}};
  CHECK_THROWS_AS(init_uvw(f, file), Error);
  f.uvws = std::vector<Vec3>{{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}, {0.7, 0.8, 0.9}};
  CHECK(init_uvw(f, file) == *f.uvws);
  f.uvws->pop_back();
  CHECK_THROWS_AS(init_uvw(f, file), Error);
}

TEST_CASE("identity sequence reproduces uvws bitwise") {
  MeshFrame prev = oracle::random_frame(300, 3);
  MeshFrame cur = prev;
  for (Vec3& v : cur.velocities) v = {};
  const auto r = propagate_frame(prev, cur, PropagationConfig{}, 4);
  CHECK(r.fallback_count == 0);
  CHECK(r.uvws == *prev.uvws);
}

TEST_CASE("exact rigid translation carries uvws to 1e-9") {
  MeshFrame prev = uv_sphere(12, {}, 1.0);
  prev.uvws = random_uvws(prev.positions.size(), 7);
  MeshFrame cur = prev;
  cur.uvws.reset();
  const Vec3 d{0.3, -0.2, 0.1};
  for (std::size_t j = 0; j < cur.positions.size(); ++j) {
    cur.positions[j] += d;
    cur.velocities[j] = d;
  }
  const auto r = propagate_frame(prev, cur, PropagationConfig{});
  for (std::size_t j = 0; j < r.uvws.size(); ++j) REQUIRE(norm(r.uvws[j] - (*prev.uvws)[j]) <= 1e-9);
}

TEST_CASE("midpoint subdivision transfers linearly interpolated uvws") {
  MeshFrame prev = uv_sphere(8, {}, 1.0);
  prev.uvws = random_uvws(prev.positions.size(), 11);
  MeshFrame cur = subdivide(prev);
  const auto r = propagate_frame(prev, cur, PropagationConfig{}, 3);
  for (std::size_t j = 0; j < prev.positions.size(); ++j) REQUIRE(r.uvws[j] == (*prev.uvws)[j]);
  // Each edge midpoint carries the mean of its endpoints' uvws.
  for (const Triangle& t : prev.triangles) {
    for (int k = 0; k < 3; ++k) {
      const std::uint32_t a = t[k], b = t[(k + 1) % 3];
      const Vec3 mp = 0.5 * (prev.positions[a] + prev.positions[b]);
      for (std::size_t j = prev.positions.size(); j < cur.positions.size(); ++j) {
        if (cur.positions[j] == mp) {
          const Vec3 expected = 0.5 * ((*prev.uvws)[a] + (*prev.uvws)[b]);
          REQUIRE(norm(r.uvws[j] - expected) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("laplacian smoothing examples") {
  MeshFrame f;
  f.positions = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {5, 5, 5}};
  f.velocities.assign(4, Vec3{});
  f.triangles = {{0, 1, 2}};
  const std::vector<Vec3> u{{0, 0, 0}, {3, 0, 0}, {0, 0, 0}, {9, 9, 9}};
  const auto once = laplacian_smooth_uvw(f, u, 1, 0.5, 2);
  CHECK(once[0] == Vec3{0.75, 0, 0});
  CHECK(once[1] == Vec3{1.5, 0, 0});
  CHECK(once[2] == Vec3{0.75, 0, 0});
  CHECK(once[3] == Vec3{9, 9, 9});  // isolated
  CHECK(laplacian_smooth_uvw(f, u, 0, 0.5) == u);
  CHECK(laplacian_smooth_uvw(f, u, 3, 0.0) == u);
  const auto full = laplacian_smooth_uvw(f, u, 1, 1.0);
  CHECK(full[1] == Vec3{0, 0, 0});
  CHECK_THROWS_AS(laplacian_smooth_uvw(f, u, 1, 1.5), Error);
  CHECK_THROWS_AS(laplacian_smooth_uvw(f, std::vector<Vec3>(2), 1, 0.5), Error);
}

TEST_CASE("smoothing stays inside the bounding box of inputs and preserves constants") {
  MeshFrame f = uv_sphere(10, {}, 1.0);
  const auto u = random_uvws(f.positions.size(), 13);
  Bounds box;
  for (const Vec3& v : u) box.extend(v);
  const auto s = laplacian_smooth_uvw(f, u, 25, 0.7);
  for (const Vec3& v : s) {
    for (int a = 0; a < 3; ++a) {
      REQUIRE(v[a] >= box.min[a] - 1e-12);
      REQUIRE(v[a] <= box.max[a] + 1e-12);
    }
  }
  const std::vector<Vec3> c(f.positions.size(), Vec3{0.25, -1.5, 3});
  for (const Vec3& v : laplacian_smooth_uvw(f, c, 10, 0.5)) REQUIRE(norm(v - Vec3{0.25, -1.5, 3}) <= 1e-15);
  CHECK(laplacian_smooth_uvw(f, u, 7, 0.4, 8) == serial::laplacian_smooth_uvw(f, u, 7, 0.4));
}

TEST_CASE("quantize_half examples") {
  CHECK(quantize_half(0.1) == 0.0999755859375);
  CHECK(quantize_half(70000.0) == 65504.0);
  CHECK(quantize_half(-70000.0) == -65504.0);
  CHECK(quantize_half(1.0) == 1.0);
  CHECK(quantize_half(0.0) == 0.0);
  CHECK(quantize_half(1.0 + std::ldexp(1.0, -11)) == 1.0);  // tie to even
  CHECK(quantize_half(1.0 + 3 * std::ldexp(1.0, -11)) == 1.0 + std::ldexp(1.0, -9));
  CHECK(quantize_half(std::ldexp(1.0, -25)) == 0.0);  // tie below smallest subnormal
  CHECK(quantize_half(std::ldexp(3.0, -26)) == std::ldexp(1.0, -24));
  CHECK(quantize_half(65519.0) == 65504.0);
}

TEST_CASE("quantize_half matches an exhaustive nearest-half search") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> e(-26.0, 16.5);
  std::uniform_real_distribution<double> m(1.0, 2.0);
  for (int i = 0; i < 300; ++i) {
    double x = m(rng) * std::exp2(std::floor(e(rng)));
    if (i % 2) x = -x;
    const double q = quantize_half(x);
    REQUIRE(q == oracle::nearest_half(x));
    REQUIRE(quantize_half(q) == q);
  }
  // Every exact half value, and every midpoint between neighbours.
  for (int bits = 0; bits < 0x7c00; bits += 37) {
    const double h = oracle::decode_half(static_cast<std::uint16_t>(bits));
    REQUIRE(quantize_half(h) == h);
    const double up = oracle::decode_half(static_cast<std::uint16_t>(bits + 1));
    if (std::isfinite(up)) REQUIRE(quantize_half(0.5 * (h + up)) == oracle::nearest_half(0.5 * (h + up)));
  }
}

TEST_CASE("bfec returns the first hit when the round trip is exact") {
  MeshFrame prev = unit_triangle();
  prev.uvws = prev.positions;
  PropagationConfig cfg;
  cfg.bfec = true;
  const TriangleIndex index(prev);
  // Static surface, zero velocity: no error.
  const auto hit = bfec_corrected_location(prev, index, {0.25, 0.125, 0}, {}, cfg);
  CHECK(hit.location.bary == std::array<double, 3>{0.625, 0.25, 0.125});
  CHECK(hit.distance == 0.0);
  // Uniform translation with current-motion velocity: the round trip closes.
  for (Vec3& v : prev.velocities) v = {0.25, 0, 0};
  const auto moved = bfec_corrected_location(prev, index, Vec3{0.2, 0.3, 0} + Vec3{0.25, 0, 0},
                                             {0.25, 0, 0}, cfg);
  CHECK(norm(barycentric_interpolate(prev, moved.location, Channel::kPosition) - Vec3{0.2, 0.3, 0}) <= 1e-15);
}

TEST_CASE("bfec compensates a biased velocity field") {
  // Previous surface: plane z = 0 moving with v(x) = (0.1 + 0.2 x, 0, 0).
  // The query vertex uses its own velocity, which over-shoots the true
  // pre-image; the corrected query lands closer to it.
  MeshFrame prev;
  const int n = 20;
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const Vec3 p{-1.0 + 2.0 * i / n, -1.0 + 2.0 * j / n, 0};
      prev.positions.push_back(p);
      prev.velocities.push_back({0.1 + 0.2 * p.x, 0, 0});
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const auto a = static_cast<std::uint32_t>(j * (n + 1) + i);
      prev.triangles.push_back({a, a + 1, a + n + 2});
      prev.triangles.push_back({a, a + n + 2, a + n + 1});
    }
  }
  prev.uvws = prev.positions;
  const TriangleIndex index(prev);
  PropagationConfig cfg;
  cfg.bfec = true;
  const double x0 = 0.3;
  const Vec3 pos{x0 + 0.1 + 0.2 * x0, 0.1, 0};  // true pre-image x0
  const Vec3 vel{0.1 + 0.2 * pos.x, 0, 0};       // evaluated at the current point
  const Vec3 plain = barycentric_interpolate(prev, index.closest_location(pos - vel).location, Channel::kPosition);
  const Vec3 fixed = barycentric_interpolate(prev, bfec_corrected_location(prev, index, pos, vel, cfg).location,
                                             Channel::kPosition);
  CHECK(std::fabs(fixed.x - x0) < std::fabs(plain.x - x0));
}

TEST_CASE("parallel propagate_frame equals the serial reference bitwise") {
  MeshFrame prev = oracle::random_frame(800, 31);
  MeshFrame cur = oracle::random_frame(900, 32, false);
  for (bool bfec : {false, true}) {
    PropagationConfig cfg;
    cfg.bfec = bfec;
    cfg.smooth_iterations = 3;
    cfg.quantize = Quantize::kHalf;
    cfg.max_distance = 0.05;
    const TriangleIndex index(prev);
    const auto ref = serial::propagate_frame(prev, index, cur, cfg);
    for (int threads : {1, 2, 8}) {
      const auto r = propagate_frame(prev, index, cur, cfg, threads);
      CHECK(r.uvws == ref.uvws);
      CHECK(r.fallback_count == ref.fallback_count);
    }
  }
}

TEST_CASE("fallback when the previous frame has no surface or is too far") {
  MeshFrame prev;
  prev.positions = {{0, 0, 0}};
  prev.velocities = {{0, 0, 0}};
  prev.uvws = std::vector<Vec3>{{9, 9, 9}};
  MeshFrame cur = unit_triangle();
  PropagationConfig cfg;
  cfg.init.origin = {1, 0, 0};
  const auto r = propagate_frame(prev, cur, cfg);
  CHECK(r.fallback_count == 3);
  CHECK(r.uvws[0] == Vec3{-1, 0, 0});

  MeshFrame far = unit_triangle();
  far.uvws = std::vector<Vec3>(3, Vec3{5, 5, 5});
  MeshFrame query = unit_triangle();
  query.positions[2] = {0, 1, 3};
  cfg.max_distance = 1.0;
  const auto r2 = propagate_frame(far, query, cfg);
  CHECK(r2.fallback_count == 1);
  CHECK(r2.uvws[0] == Vec3{5, 5, 5});
  CHECK(r2.uvws[2] == Vec3{-1, 1, 3});
}

TEST_CASE("propagate_frame input checks") {
  MeshFrame prev = unit_triangle();
  MeshFrame cur = unit_triangle();
  CHECK_THROWS_AS(propagate_frame(prev, cur, PropagationConfig{}), Error);  // no uvws
  prev.uvws = prev.positions;
  PropagationConfig bad;
  bad.smooth_lambda = 1.5;
  try {
    propagate_frame(prev, cur, bad);
    FAIL("expected usage error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUsage);
  }
  bad = {};
  bad.velocity_scale = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.max_distance = -1;
  CHECK_THROWS_AS(bad.validate(), Error);
  cur.triangles.push_back({0, 1, 7});
  CHECK_THROWS_AS(propagate_frame(prev, cur, PropagationConfig{}), Error);
}

TEST_CASE("sequence of one frame is just the init") {
  MeshFrame f = unit_triangle();
  PropagationConfig cfg;
  cfg.init.scale = {2, 2, 2};
  PropagationSummary s;
  const auto out = run_sequence({f}, cfg, &s);
  REQUIRE(out.size() == 1);
  CHECK(*out[0].uvws == std::vector<Vec3>{{0, 0, 0}, {2, 0, 0}, {0, 2, 0}});
  CHECK(s.frames == 1);
  CHECK(s.fallback_count == 0);
}

TEST_CASE("static sequence keeps uvws bitwise") {
  MeshFrame f = uv_sphere(10, {}, 1.0);
  const auto out = run_sequence(std::vector<MeshFrame>(10, f), PropagationConfig{});
  REQUIRE(out.size() == 10);
  for (const auto& g : out) CHECK(*g.uvws == f.positions);
}

TEST_CASE("100 frame translation drifts less than 1e-6") {
  TranslateSphere p;
  p.frames = 100;
  p.resolution = 12;
  const auto seq = generate_preset(p);
  const auto out = run_sequence(seq.frames, PropagationConfig{}, nullptr, 4);
  const MeshFrame& last = out.back();
  for (std::size_t j = 0; j < last.positions.size(); ++j) {
    REQUIRE(norm((*last.uvws)[j] - seq.ground_truth.back().apply(last.positions[j])) <= 1e-6);
  }
}

TEST_CASE("sequence errors name the frame; empty sequence is rejected") {
  MeshFrame f = unit_triangle();
  MeshFrame broken = unit_triangle();
  broken.triangles = {{0, 1, 9}};
  try {
    run_sequence({f, f, broken}, PropagationConfig{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).rfind("frame 2: ", 0) == 0);
    CHECK(e.kind() == ErrorKind::kValidation);
  }
  CHECK_THROWS_AS(run_sequence({}, PropagationConfig{}), Error);

  PropagationConfig cfg;
  cfg.bfec = true;
  PropagationSummary s;
  run_sequence({f, f}, cfg, &s);
  CHECK(s.warnings.size() == 1);
}

TEST_CASE("quantized sequence stores representable halves") {
  RemeshSphere p;
  p.frames = 4;
  PropagationConfig cfg;
  cfg.quantize = Quantize::kHalf;
  cfg.smooth_iterations = 2;
  for (const auto& f : run_sequence(generate_preset(p).frames, cfg)) {
    for (const Vec3& u : *f.uvws) REQUIRE(quantize_half(u) == u);
  }
}
