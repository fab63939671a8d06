#pragma once

#include <Eigen/Core>
#include <Eigen/Sparse>

#include <array>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace ceig {

/// Triangle mesh carrying the reference conformal structure. Geometry comes
/// from vertex positions unless `intrinsic_lengths` is set, in which case each
/// triangle's shape is given by its three side lengths (entry c = length of
/// the side opposite corner c). Intrinsic lengths let us represent flat tori
/// and other surfaces with no isometric embedding.
struct TriangleMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::vector<int>> boundary_loops;  // filled by finalize()
  std::vector<std::array<double, 3>> intrinsic_lengths;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
  bool has_boundary() const { return !boundary_loops.empty(); }

  std::array<double, 3> corner_lengths(int t) const;
  double triangle_area(int t) const;
  double total_area() const;
};

enum class MeshFormat { off, obj };

TriangleMesh load_mesh(std::istream& in, MeshFormat format);
TriangleMesh load_mesh_file(const std::string& path);
void save_off(const TriangleMesh& mesh, std::ostream& out);
void save_off_file(const TriangleMesh& mesh, const std::string& path);

/// Checks manifoldness, orientability and positive triangle areas, makes the
/// orientation consistent, and extracts boundary loops. Throws input_error on
/// violations, naming the offending element.
void finalize(TriangleMesh& mesh);

int genus(const TriangleMesh& mesh);
int connected_components(const TriangleMesh& mesh);

/// Cotangent-weight stiffness matrix. For vertex functions u the quadratic
/// form u^T K u is the Dirichlet energy of the piecewise-linear interpolant;
/// it depends only on triangle angles, hence is conformally invariant.
Eigen::SparseMatrix<double> assemble_stiffness(const TriangleMesh& mesh);

/// Vertex adjacency with edge lengths, shared by the graph-metric routines.
struct VertexGraph {
  std::vector<int> offsets;
  std::vector<int> neighbors;
  std::vector<double> lengths;
};
VertexGraph build_vertex_graph(const TriangleMesh& mesh);

std::vector<double> graph_distances(const VertexGraph& graph, const std::vector<int>& sources,
                                    double cutoff = -1.0);
std::vector<double> graph_distances(const TriangleMesh& mesh, int source);
double median_edge_length(const TriangleMesh& mesh);

enum class RegionKind { ball, annulus, custom };

struct Region {
  std::vector<int> vertices;  // sorted, unique
  RegionKind kind = RegionKind::custom;
  int center = -1;
  double r = 0.0;
  double R = 0.0;

  bool contains(int v) const;
  bool empty() const { return vertices.empty(); }
  int size() const { return static_cast<int>(vertices.size()); }
};

Region make_region(std::vector<int> vertices);
bool regions_disjoint(const Region& a, const Region& b);
Region region_union(const Region& a, const Region& b);

/// Vertices at graph distance < r from the center. r = +infinity exhausts the
/// component.
Region graph_ball(const TriangleMesh& mesh, int center, double r);
Region graph_ball(const TriangleMesh& mesh, const VertexGraph& graph, int center, double r);

/// Returns (A, 2A) with A = {r <= d < R} and 2A = {r/2 <= d < 2R}.
std::pair<Region, Region> graph_annulus(const TriangleMesh& mesh, int center, double r, double R);
std::pair<Region, Region> graph_annulus(const TriangleMesh& mesh, const VertexGraph& graph,
                                        int center, double r, double R);

std::vector<double> vertex_lumped_areas(const TriangleMesh& mesh);

/// Midpoint 1->4 subdivision; optionally reprojects new vertices to the unit
/// sphere. Intrinsic lengths, when present, are halved (exact for flat
/// metrics).
TriangleMesh subdivide_midpoint(const TriangleMesh& mesh, bool project_to_unit_sphere = false);

std::vector<int> farthest_point_sample(const TriangleMesh& mesh, int count, int start = 0);

}  // namespace ceig
