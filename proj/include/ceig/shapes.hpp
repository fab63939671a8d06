#pragma once

#include "ceig/mesh.hpp"

namespace ceig {

/// Unit icosahedron (12 vertices, 20 faces).
TriangleMesh icosahedron();

/// Icosahedron subdivided `level` times, vertices projected to the unit
/// sphere. Vertex count is 10*4^level + 2.
TriangleMesh icosphere(int level);

/// Unit disk built from hexagonal rings; ring j of `rings` has 6j vertices at
/// radius j/rings. Vertex count is 1 + 3*rings*(rings+1).
TriangleMesh disk_mesh(int rings);

/// Flat unit-square torus on an n x n identified grid (n >= 3). Geometry is
/// intrinsic; vertex positions hold fundamental-domain coordinates.
TriangleMesh flat_torus(int n);

/// Planar rectangle [x0, x0+width] x [y0, y0+height] on an nx x ny grid of
/// squares, each split into two right triangles.
TriangleMesh grid_mesh(int nx, int ny, double x0, double y0, double width, double height);

/// Two right isoceles triangles forming the unit square.
TriangleMesh unit_square();

}  // namespace ceig
