#include <benchmark/benchmark.h>

#include <random>

#include "uvwprop/advect.hpp"
#include "uvwprop/seqgen.hpp"
#include "uvwprop/spatial.hpp"

using namespace uvwprop;

namespace {

struct Pair {
  MeshFrame prev;
  MeshFrame cur;
};

Pair sphere_pair(int resolution) {
  const RemeshSphere preset{.res_a = resolution, .res_b = resolution * 3 / 4, .frames = 2};
  Pair p{generate_frame(preset, 0), generate_frame(preset, 1)};
  p.prev.uvws = init_uvw(p.prev, {});
  return p;
}

void BM_PropagateSerial(benchmark::State& state) {
  const Pair p = sphere_pair(static_cast<int>(state.range(0)));
  const TriangleIndex index(p.prev);
  const PropagationConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(serial::propagate_frame(p.prev, index, p.cur, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(p.cur.positions.size()));
}

void BM_PropagateParallel(benchmark::State& state) {
  const Pair p = sphere_pair(static_cast<int>(state.range(0)));
  const TriangleIndex index(p.prev);
  const PropagationConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(propagate_frame(p.prev, index, p.cur, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(p.cur.positions.size()));
}

void BM_SmoothSerial(benchmark::State& state) {
  const Pair p = sphere_pair(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(serial::laplacian_smooth_uvw(p.prev, *p.prev.uvws, 10, 0.5));
}

void BM_SmoothParallel(benchmark::State& state) {
  const Pair p = sphere_pair(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(laplacian_smooth_uvw(p.prev, *p.prev.uvws, 10, 0.5));
}

void BM_BuildIndex(benchmark::State& state) {
  const Pair p = sphere_pair(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(TriangleIndex(p.prev));
}

void BM_ClosestBvh(benchmark::State& state) {
  const Pair p = sphere_pair(static_cast<int>(state.range(0)));
  const TriangleIndex index(p.prev);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.closest_location(p.cur.positions[i]));
    i = (i + 1) % p.cur.positions.size();
  }
}

void BM_ClosestBruteForce(benchmark::State& state) {
  const Pair p = sphere_pair(static_cast<int>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) {
    const Vec3& q = p.cur.positions[i];
    double best = 1e300;
    for (const Triangle& t : p.prev.triangles) {
      const auto hit = closest_point_on_triangle(p.prev.positions[t[0]], p.prev.positions[t[1]],
                                                 p.prev.positions[t[2]], q);
      best = std::min(best, hit.squared_distance);
    }
    benchmark::DoNotOptimize(best);
    i = (i + 1) % p.cur.positions.size();
  }
}

void BM_MarchingCubesSerial(benchmark::State& state) {
  const MetaballsMerge preset{.grid_resolution = static_cast<int>(state.range(0)), .frames = 1};
  for (auto _ : state) {
    const std::array<Ball, 2> balls{Ball{{-0.5, 0, 0}, 1.0, {}}, Ball{{0.5, 0, 0}, 1.0, {}}};
    Grid g;
    g.cell = 4.0 / preset.grid_resolution;
    g.origin = {-2, -2, -2};
    g.dims = {preset.grid_resolution + 1, preset.grid_resolution + 1, preset.grid_resolution + 1};
    benchmark::DoNotOptimize(
        serial::marching_cubes([&](const Vec3& x) { return metaball_field(x, balls); }, g, 0.25));
  }
}

void BM_MarchingCubesParallel(benchmark::State& state) {
  const int res = static_cast<int>(state.range(0));
  for (auto _ : state) {
    const std::array<Ball, 2> balls{Ball{{-0.5, 0, 0}, 1.0, {}}, Ball{{0.5, 0, 0}, 1.0, {}}};
    Grid g;
    g.cell = 4.0 / res;
    g.origin = {-2, -2, -2};
    g.dims = {res + 1, res + 1, res + 1};
    benchmark::DoNotOptimize(marching_cubes([&](const Vec3& x) { return metaball_field(x, balls); }, g, 0.25));
  }
}

}  // namespace

BENCHMARK(BM_PropagateSerial)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PropagateParallel)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SmoothSerial)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SmoothParallel)->Arg(128)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BuildIndex)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClosestBvh)->Arg(32)->Arg(128);
BENCHMARK(BM_ClosestBruteForce)->Arg(32)->Arg(128);
BENCHMARK(BM_MarchingCubesSerial)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MarchingCubesParallel)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
