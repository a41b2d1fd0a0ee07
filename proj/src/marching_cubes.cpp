#include <omp.h>

#include <map>

#include "uvwprop/error.hpp"

#include "uvwprop/seqgen.hpp"

namespace uvwprop {

namespace {

#include "mc_table.inc"

// Corner offsets in table order.
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};

// Table edge -> (axis, offset of its lower endpoint within the cell).
constexpr int kEdge[12][4] = {{0, 0, 0, 0}, {1, 1, 0, 0}, {0, 0, 1, 0}, {1, 0, 0, 0},
                              {0, 0, 0, 1}, {1, 1, 0, 1}, {0, 0, 1, 1}, {1, 0, 0, 1},
                              {2, 0, 0, 0}, {2, 1, 0, 0}, {2, 1, 1, 0}, {2, 0, 1, 0}};

// Table order already faces toward decreasing field when bit k means
// "corner k below iso".
constexpr int kWinding[3] = {0, 1, 2};

struct Layout {
  std::int64_t nx, ny, nz;
  std::int64_t nodes;

  explicit Layout(const Grid& g) : nx(g.dims[0]), ny(g.dims[1]), nz(g.dims[2]), nodes(nx * ny * nz) {}

  std::int64_t node(std::int64_t i, std::int64_t j, std::int64_t k) const { return i + nx * (j + ny * k); }
  // Edge ids: axis-major, then lower-endpoint node id.
  std::int64_t edge(int axis, std::int64_t i, std::int64_t j, std::int64_t k) const {
    return axis * nodes + node(i, j, k);
  }
  std::int64_t cells() const { return (nx - 1) * (ny - 1) * (nz - 1); }
};

int resolve(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

void check_grid(const Grid& grid) {
  for (int a = 0; a < 3; ++a) {
    if (grid.dims[a] < 2) throw usage_error("marching cubes grid needs >= 2 nodes per axis");
  }
}

int case_index(const double* v, double iso) {
  int index = 0;
  for (int c = 0; c < 8; ++c) {
    if (v[c] < iso) index |= 1 << c;
  }
  return index;
}

int triangle_count(int cube) {
  int n = 0;
  while (n < 15 && kTriTable[cube][n] != -1) n += 3;
  return n / 3;
}

// Vertex on the edge from node a to node b (a is the lower endpoint).
Vec3 edge_point(const Vec3& pa, const Vec3& pb, double va, double vb, double iso) {
  const double t = (iso - va) / (vb - va);
  return pa + t * (pb - pa);
}

}  // namespace

MeshFrame marching_cubes(const FieldSampler& field, const Grid& grid, double iso, int threads) {
  check_grid(grid);
  const Layout L(grid);
  const int nthreads = resolve(threads);

  std::vector<double> values(static_cast<std::size_t>(L.nodes));
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (std::int64_t n = 0; n < L.nodes; ++n) {
    const std::int64_t i = n % L.nx;
    const std::int64_t j = (n / L.nx) % L.ny;
    const std::int64_t k = n / (L.nx * L.ny);
    values[n] = field(grid.node(static_cast<int>(i), static_cast<int>(j), static_cast<int>(k))).value;
  }

  // Crossed edges get vertex ids in edge-id order.
  const std::int64_t edge_count = 3 * L.nodes;
  std::vector<std::int64_t> edge_vertex(static_cast<std::size_t>(edge_count), -1);
  std::vector<unsigned char> crossed(static_cast<std::size_t>(edge_count), 0);
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (std::int64_t n = 0; n < L.nodes; ++n) {
    const std::int64_t i = n % L.nx;
    const std::int64_t j = (n / L.nx) % L.ny;
    const std::int64_t k = n / (L.nx * L.ny);
    const std::int64_t lim[3] = {L.nx, L.ny, L.nz};
    const std::int64_t at[3] = {i, j, k};
    for (int a = 0; a < 3; ++a) {
      if (at[a] + 1 >= lim[a]) continue;
      const std::int64_t other = L.node(i + (a == 0), j + (a == 1), k + (a == 2));
      crossed[a * L.nodes + n] = (values[n] < iso) != (values[other] < iso);
    }
  }
  std::vector<std::int64_t> crossing_edges;
  for (std::int64_t e = 0; e < edge_count; ++e) {
    if (crossed[e]) {
      edge_vertex[e] = static_cast<std::int64_t>(crossing_edges.size());
      crossing_edges.push_back(e);
    }
  }

  MeshFrame mesh;
  const auto nverts = static_cast<std::int64_t>(crossing_edges.size());
  mesh.positions.resize(crossing_edges.size());
  mesh.velocities.resize(crossing_edges.size());
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (std::int64_t v = 0; v < nverts; ++v) {
    const std::int64_t e = crossing_edges[v];
    const int axis = static_cast<int>(e / L.nodes);
    const std::int64_t n = e % L.nodes;
    const int i = static_cast<int>(n % L.nx);
    const int j = static_cast<int>((n / L.nx) % L.ny);
    const int k = static_cast<int>(n / (L.nx * L.ny));
    const int i2 = i + (axis == 0), j2 = j + (axis == 1), k2 = k + (axis == 2);
    const Vec3 p = edge_point(grid.node(i, j, k), grid.node(i2, j2, k2), values[n],
                              values[L.node(i2, j2, k2)], iso);
    mesh.positions[v] = p;
    mesh.velocities[v] = field(p).velocity;
  }

  // Triangles: count per cell, scan, fill in cell order.
  const std::int64_t cells = L.cells();
  const std::int64_t cx = L.nx - 1, cy = L.ny - 1;
  std::vector<std::int64_t> offsets(static_cast<std::size_t>(cells + 1), 0);
  std::vector<unsigned char> cases(static_cast<std::size_t>(cells));
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (std::int64_t c = 0; c < cells; ++c) {
    const std::int64_t i = c % cx, j = (c / cx) % cy, k = c / (cx * cy);
    double v[8];
    for (int q = 0; q < 8; ++q) v[q] = values[L.node(i + kCorner[q][0], j + kCorner[q][1], k + kCorner[q][2])];
    const int cube = case_index(v, iso);
    cases[c] = static_cast<unsigned char>(cube);
    offsets[c + 1] = triangle_count(cube);
  }
  for (std::int64_t c = 0; c < cells; ++c) offsets[c + 1] += offsets[c];
  mesh.triangles.resize(static_cast<std::size_t>(offsets[cells]));
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (std::int64_t c = 0; c < cells; ++c) {
    const int cube = cases[c];
    const std::int64_t i = c % cx, j = (c / cx) % cy, k = c / (cx * cy);
    std::int64_t out = offsets[c];
    for (int t = 0; kTriTable[cube][t] != -1; t += 3, ++out) {
      Triangle tri;
      for (int q = 0; q < 3; ++q) {
        const int* e = kEdge[kTriTable[cube][t + kWinding[q]]];
        tri[q] = static_cast<std::uint32_t>(edge_vertex[L.edge(e[0], i + e[1], j + e[2], k + e[3])]);
      }
      mesh.triangles[out] = tri;
    }
  }
  return mesh;
}

namespace serial {

// Classic per-cell loop with a map weld, renumbered to edge-id order at the
// end so its output is comparable with the parallel version.
MeshFrame marching_cubes(const FieldSampler& field, const Grid& grid, double iso) {
  check_grid(grid);
  const Layout L(grid);
  std::map<std::int64_t, Vec3> edge_points;
  std::vector<std::array<std::int64_t, 3>> tris;
  for (int k = 0; k + 1 < grid.dims[2]; ++k) {
    for (int j = 0; j + 1 < grid.dims[1]; ++j) {
      for (int i = 0; i + 1 < grid.dims[0]; ++i) {
        double v[8];
        for (int q = 0; q < 8; ++q) {
          v[q] = field(grid.node(i + kCorner[q][0], j + kCorner[q][1], k + kCorner[q][2])).value;
        }
        const int cube = case_index(v, iso);
        for (int t = 0; kTriTable[cube][t] != -1; t += 3) {
          std::array<std::int64_t, 3> tri;
          for (int q = 0; q < 3; ++q) {
            const int* e = kEdge[kTriTable[cube][t + kWinding[q]]];
            const int i0 = i + e[1], j0 = j + e[2], k0 = k + e[3];
            const int i1 = i0 + (e[0] == 0), j1 = j0 + (e[0] == 1), k1 = k0 + (e[0] == 2);
            const std::int64_t id = L.edge(e[0], i0, j0, k0);
            if (!edge_points.contains(id)) {
              const Vec3 pa = grid.node(i0, j0, k0);
              const Vec3 pb = grid.node(i1, j1, k1);
              edge_points[id] = edge_point(pa, pb, field(pa).value, field(pb).value, iso);
            }
            tri[q] = id;
          }
          tris.push_back(tri);
        }
      }
    }
  }
  MeshFrame mesh;
  std::map<std::int64_t, std::uint32_t> renumber;
  for (const auto& [id, p] : edge_points) {
    renumber[id] = static_cast<std::uint32_t>(mesh.positions.size());
    mesh.positions.push_back(p);
    mesh.velocities.push_back(field(p).velocity);
  }
  for (const auto& t : tris) mesh.triangles.push_back({renumber[t[0]], renumber[t[1]], renumber[t[2]]});
  return mesh;
}

}  // namespace serial

}  // namespace uvwprop
