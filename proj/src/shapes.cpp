#include "ceig/shapes.hpp"

#include "ceig/errors.hpp"

#include <cmath>

namespace ceig {

TriangleMesh icosahedron() {
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  const double raw[12][3] = {{-1, p, 0}, {1, p, 0},   {-1, -p, 0}, {1, -p, 0},
                             {0, -1, p}, {0, 1, p},   {0, -1, -p}, {0, 1, -p},
                             {p, 0, -1}, {p, 0, 1},   {-p, 0, -1}, {-p, 0, 1}};
  const int faces[20][3] = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                            {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                            {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                            {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  TriangleMesh mesh;
  for (const auto& v : raw) mesh.vertices.push_back(Eigen::Vector3d(v[0], v[1], v[2]).normalized());
  for (const auto& f : faces) mesh.triangles.push_back({f[0], f[1], f[2]});
  finalize(mesh);
  return mesh;
}

TriangleMesh icosphere(int level) {
  TriangleMesh mesh = icosahedron();
  for (int i = 0; i < level; ++i) mesh = subdivide_midpoint(mesh, true);
  return mesh;
}

TriangleMesh disk_mesh(int rings) {
  if (rings < 1) throw input_error("disk_mesh needs at least one ring");
  TriangleMesh mesh;
  mesh.vertices.emplace_back(0.0, 0.0, 0.0);
  std::vector<int> ring_start{0};  // ring 0 = center
  for (int j = 1; j <= rings; ++j) {
    ring_start.push_back(mesh.vertex_count());
    const int count = 6 * j;
    const double radius = static_cast<double>(j) / rings;
    for (int i = 0; i < count; ++i) {
      const double angle = 2.0 * M_PI * i / count;
      mesh.vertices.emplace_back(radius * std::cos(angle), radius * std::sin(angle), 0.0);
    }
  }
  // Center fan.
  for (int i = 0; i < 6; ++i)
    mesh.triangles.push_back({0, ring_start[1] + i, ring_start[1] + (i + 1) % 6});
  // Annuli between rings j-1 and j, stitched by angular order.
  for (int j = 2; j <= rings; ++j) {
    const int m = 6 * (j - 1), M = 6 * j;
    const int in = ring_start[j - 1], out = ring_start[j];
    int i = 0, o = 0;
    while (i < m || o < M) {
      const bool advance_outer = (i == m) || (o < M && (o + 1.0) / M <= (i + 1.0) / m);
      if (advance_outer) {
        mesh.triangles.push_back({in + i % m, out + o % M, out + (o + 1) % M});
        ++o;
      } else {
        mesh.triangles.push_back({in + i % m, out + o % M, in + (i + 1) % m});
        ++i;
      }
    }
  }
  finalize(mesh);
  return mesh;
}

TriangleMesh flat_torus(int n) {
  if (n < 3) throw input_error("flat_torus needs n >= 3");
  TriangleMesh mesh;
  const double h = 1.0 / n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) mesh.vertices.emplace_back(i * h, j * h, 0.0);
  auto vid = [&](int i, int j) { return ((i % n + n) % n) * n + ((j % n + n) % n); };
  const double diag = h * std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      mesh.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      mesh.intrinsic_lengths.push_back({h, diag, h});
      mesh.triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
      mesh.intrinsic_lengths.push_back({h, h, diag});
    }
  }
  finalize(mesh);
  return mesh;
}

TriangleMesh grid_mesh(int nx, int ny, double x0, double y0, double width, double height) {
  if (nx < 1 || ny < 1) throw input_error("grid_mesh needs at least one cell per axis");
  TriangleMesh mesh;
  const double dx = width / nx, dy = height / ny;
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= ny; ++j) mesh.vertices.emplace_back(x0 + i * dx, y0 + j * dy, 0.0);
  auto vid = [&](int i, int j) { return i * (ny + 1) + j; };
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      mesh.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      mesh.triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  }
  finalize(mesh);
  return mesh;
}

TriangleMesh unit_square() { return grid_mesh(1, 1, 0.0, 0.0, 1.0, 1.0); }

}  // namespace ceig
