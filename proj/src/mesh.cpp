#include "ceig/mesh.hpp"

#include "ceig/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace ceig {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<uint64_t>(a) << 32) | static_cast<uint64_t>(b);
}

double heron_area(double a, double b, double c) {
  // Kahan's numerically stable form; requires a >= b >= c.
  if (a < b) std::swap(a, b);
  if (b < c) std::swap(b, c);
  if (a < b) std::swap(a, b);
  const double s = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
  if (!(s > 0.0)) return 0.0;
  return 0.25 * std::sqrt(s);
}

struct EdgeRecord {
  int tri[2] = {-1, -1};
  int count = 0;
};

using EdgeMap = std::unordered_map<uint64_t, EdgeRecord>;

EdgeMap build_edge_map(const TriangleMesh& mesh) {
  EdgeMap edges;
  edges.reserve(mesh.triangles.size() * 3);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int c = 0; c < 3; ++c) {
      auto& rec = edges[edge_key(tri[c], tri[(c + 1) % 3])];
      if (rec.count >= 2)
        throw input_error("non-manifold edge (" + std::to_string(tri[c]) + "," +
                          std::to_string(tri[(c + 1) % 3]) + ") shared by more than 2 triangles");
      rec.tri[rec.count++] = t;
    }
  }
  return edges;
}

// Direction of undirected edge (a,b) inside triangle t: +1 if traversed as
// a->b, -1 if b->a, 0 if absent.
int edge_direction(const std::array<int, 3>& tri, int a, int b) {
  for (int c = 0; c < 3; ++c) {
    int u = tri[c], v = tri[(c + 1) % 3];
    if (u == a && v == b) return 1;
    if (u == b && v == a) return -1;
  }
  return 0;
}

}  // namespace

std::array<double, 3> TriangleMesh::corner_lengths(int t) const {
  if (!intrinsic_lengths.empty()) return intrinsic_lengths[t];
  const auto& tri = triangles[t];
  const Eigen::Vector3d& p0 = vertices[tri[0]];
  const Eigen::Vector3d& p1 = vertices[tri[1]];
  const Eigen::Vector3d& p2 = vertices[tri[2]];
  return {(p1 - p2).norm(), (p2 - p0).norm(), (p0 - p1).norm()};
}

double TriangleMesh::triangle_area(int t) const {
  const auto l = corner_lengths(t);
  return heron_area(l[0], l[1], l[2]);
}

double TriangleMesh::total_area() const {
  double s = 0.0;
  for (int t = 0; t < triangle_count(); ++t) s += triangle_area(t);
  return s;
}

TriangleMesh load_mesh(std::istream& in, MeshFormat format) {
  TriangleMesh mesh;
  auto next_token_line = [&](std::string& line) -> bool {
    while (std::getline(in, line)) {
      const auto pos = line.find_first_not_of(" \t\r\n");
      if (pos == std::string::npos) continue;
      if (line[pos] == '#') continue;
      return true;
    }
    return false;
  };

  if (format == MeshFormat::off) {
    std::string line;
    if (!next_token_line(line)) throw input_error("OFF: empty stream");
    std::istringstream header(line);
    std::string magic;
    header >> magic;
    if (magic != "OFF") throw input_error("OFF: missing OFF header");
    long nv = -1, nf = -1, ne = -1;
    if (!(header >> nv >> nf >> ne)) {
      if (!next_token_line(line)) throw input_error("OFF: missing element counts");
      std::istringstream counts(line);
      if (!(counts >> nv >> nf >> ne)) throw input_error("OFF: malformed element counts");
    }
    if (nv < 0 || nf < 0) throw input_error("OFF: negative element counts");
    mesh.vertices.reserve(nv);
    for (long i = 0; i < nv; ++i) {
      if (!next_token_line(line)) throw input_error("OFF: truncated vertex list at vertex " + std::to_string(i));
      std::istringstream vs(line);
      double x, y, z;
      if (!(vs >> x >> y >> z)) throw input_error("OFF: malformed vertex " + std::to_string(i));
      mesh.vertices.emplace_back(x, y, z);
    }
    mesh.triangles.reserve(nf);
    for (long i = 0; i < nf; ++i) {
      if (!next_token_line(line)) throw input_error("OFF: truncated face list at face " + std::to_string(i));
      std::istringstream fs(line);
      int valence;
      if (!(fs >> valence)) throw input_error("OFF: malformed face " + std::to_string(i));
      if (valence != 3) throw input_error("OFF: face " + std::to_string(i) + " is not a triangle");
      std::array<int, 3> tri{};
      if (!(fs >> tri[0] >> tri[1] >> tri[2])) throw input_error("OFF: malformed face " + std::to_string(i));
      mesh.triangles.push_back(tri);
    }
  } else {
    std::string line;
    long face_index = 0;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::string tag;
      if (!(ls >> tag)) continue;
      if (tag == "v") {
        double x, y, z;
        if (!(ls >> x >> y >> z))
          throw input_error("OBJ: malformed vertex " + std::to_string(mesh.vertices.size()));
        mesh.vertices.emplace_back(x, y, z);
      } else if (tag == "f") {
        std::array<int, 3> tri{};
        std::string item;
        int c = 0;
        while (ls >> item) {
          if (c >= 3) throw input_error("OBJ: face " + std::to_string(face_index) + " is not a triangle");
          long idx = 0;
          try {
            idx = std::stol(item.substr(0, item.find('/')));
          } catch (const std::exception&) {
            throw input_error("OBJ: malformed face " + std::to_string(face_index));
          }
          if (idx <= 0) throw input_error("OBJ: face " + std::to_string(face_index) + " has non-positive index");
          tri[c++] = static_cast<int>(idx - 1);
        }
        if (c != 3) throw input_error("OBJ: face " + std::to_string(face_index) + " is not a triangle");
        mesh.triangles.push_back(tri);
        ++face_index;
      }
    }
  }

  finalize(mesh);
  return mesh;
}

TriangleMesh load_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open mesh file: " + path);
  MeshFormat format;
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".obj")
    format = MeshFormat::obj;
  else if (path.size() >= 4 && path.substr(path.size() - 4) == ".off")
    format = MeshFormat::off;
  else
    throw input_error("unknown mesh extension (expected .off or .obj): " + path);
  return load_mesh(in, format);
}

void save_off(const TriangleMesh& mesh, std::ostream& out) {
  out << "OFF\n" << mesh.vertex_count() << " " << mesh.triangle_count() << " 0\n";
  out.precision(17);
  for (const auto& p : mesh.vertices) out << p.x() << " " << p.y() << " " << p.z() << "\n";
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
}

void save_off_file(const TriangleMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot open file for writing: " + path);
  save_off(mesh, out);
}

void finalize(TriangleMesh& mesh) {
  const int nv = mesh.vertex_count();
  const int nt = mesh.triangle_count();
  if (nv == 0 || nt == 0) throw input_error("mesh has no vertices or no triangles");
  if (!mesh.intrinsic_lengths.empty() &&
      static_cast<int>(mesh.intrinsic_lengths.size()) != nt)
    throw input_error("intrinsic length table size does not match triangle count");

  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    for (int c = 0; c < 3; ++c) {
      if (tri[c] < 0 || tri[c] >= nv)
        throw input_error("face " + std::to_string(t) + " references vertex " + std::to_string(tri[c]) +
                          " of a " + std::to_string(nv) + "-vertex mesh");
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[2] == tri[0])
      throw input_error("face " + std::to_string(t) + " repeats a vertex");
    if (!(mesh.triangle_area(t) > 0.0))
      throw input_error("degenerate (zero-area) triangle " + std::to_string(t));
  }

  EdgeMap edges = build_edge_map(mesh);

  // Orient consistently: adjacent triangles must traverse their shared edge in
  // opposite directions. BFS over triangle adjacency, flipping as needed.
  std::vector<int> flip(nt, -1);  // -1 unvisited, 0 keep, 1 flip
  for (int seed = 0; seed < nt; ++seed) {
    if (flip[seed] >= 0) continue;
    flip[seed] = 0;
    std::queue<int> frontier;
    frontier.push(seed);
    while (!frontier.empty()) {
      const int t = frontier.front();
      frontier.pop();
      const auto& tri = mesh.triangles[t];
      for (int c = 0; c < 3; ++c) {
        const int a = tri[c], b = tri[(c + 1) % 3];
        const auto& rec = edges.at(edge_key(a, b));
        const int other = rec.tri[0] == t ? rec.tri[1] : rec.tri[0];
        if (other < 0) continue;
        int dir_t = edge_direction(mesh.triangles[t], a, b) * (flip[t] ? -1 : 1);
        int dir_o = edge_direction(mesh.triangles[other], a, b);
        const int needed = dir_t == dir_o ? 1 : 0;  // same direction -> other must flip
        if (flip[other] < 0) {
          flip[other] = needed;
          frontier.push(other);
        } else if (flip[other] != needed) {
          throw input_error("mesh is non-orientable (conflict at triangle " + std::to_string(other) + ")");
        }
      }
    }
  }
  for (int t = 0; t < nt; ++t) {
    if (flip[t] == 1) {
      std::swap(mesh.triangles[t][1], mesh.triangles[t][2]);
      if (!mesh.intrinsic_lengths.empty())
        std::swap(mesh.intrinsic_lengths[t][1], mesh.intrinsic_lengths[t][2]);
    }
  }

  // Boundary loops: chain directed boundary edges (as traversed by their
  // unique triangle).
  std::unordered_map<int, int> boundary_next;
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    for (int c = 0; c < 3; ++c) {
      const int a = tri[c], b = tri[(c + 1) % 3];
      if (edges.at(edge_key(a, b)).count == 1) {
        if (boundary_next.count(a))
          throw input_error("non-manifold boundary vertex " + std::to_string(a));
        boundary_next[a] = b;
      }
    }
  }
  mesh.boundary_loops.clear();
  std::unordered_map<int, bool> used;
  for (const auto& [start, _] : boundary_next) {
    if (used[start]) continue;
    std::vector<int> loop;
    int v = start;
    do {
      loop.push_back(v);
      used[v] = true;
      auto it = boundary_next.find(v);
      if (it == boundary_next.end())
        throw input_error("open boundary chain at vertex " + std::to_string(v));
      v = it->second;
    } while (v != start);
    mesh.boundary_loops.push_back(std::move(loop));
  }
  std::sort(mesh.boundary_loops.begin(), mesh.boundary_loops.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
}

int connected_components(const TriangleMesh& mesh) {
  const int nv = mesh.vertex_count();
  std::vector<int> parent(nv);
  for (int i = 0; i < nv; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& tri : mesh.triangles) {
    for (int c = 0; c < 3; ++c) {
      int a = find(tri[c]), b = find(tri[(c + 1) % 3]);
      if (a != b) parent[a] = b;
    }
  }
  int count = 0;
  for (int i = 0; i < nv; ++i)
    if (find(i) == i) ++count;
  return count;
}

int genus(const TriangleMesh& mesh) {
  if (connected_components(mesh) != 1) throw input_error("genus requires a connected mesh");
  EdgeMap edges = build_edge_map(mesh);
  const long v = mesh.vertex_count();
  const long e = static_cast<long>(edges.size());
  const long f = mesh.triangle_count();
  const long b = static_cast<long>(mesh.boundary_loops.size());
  const long chi = v - e + f;
  const long two_gamma = 2 - b - chi;
  if (two_gamma < 0 || two_gamma % 2 != 0)
    throw input_error("Euler characteristic is inconsistent with an orientable surface");
  return static_cast<int>(two_gamma / 2);
}

Eigen::SparseMatrix<double> assemble_stiffness(const TriangleMesh& mesh) {
  const int nv = mesh.vertex_count();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.triangles.size() * 12);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto l = mesh.corner_lengths(t);
    const double area = heron_area(l[0], l[1], l[2]);
    for (int c = 0; c < 3; ++c) {
      // Half-cotangent of the angle at corner c, weighting the opposite edge.
      const double a = l[(c + 1) % 3], b = l[(c + 2) % 3], o = l[c];
      const double w = (a * a + b * b - o * o) / (8.0 * area);
      const int i = tri[(c + 1) % 3], j = tri[(c + 2) % 3];
      triplets.emplace_back(i, j, -w);
      triplets.emplace_back(j, i, -w);
      triplets.emplace_back(i, i, w);
      triplets.emplace_back(j, j, w);
    }
  }
  Eigen::SparseMatrix<double> K(nv, nv);
  K.setFromTriplets(triplets.begin(), triplets.end());
  K.makeCompressed();
  return K;
}

VertexGraph build_vertex_graph(const TriangleMesh& mesh) {
  const int nv = mesh.vertex_count();
  std::unordered_map<uint64_t, double> lengths;
  lengths.reserve(mesh.triangles.size() * 2);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto l = mesh.corner_lengths(t);
    for (int c = 0; c < 3; ++c)
      lengths[edge_key(tri[(c + 1) % 3], tri[(c + 2) % 3])] = l[c];
  }
  std::vector<int> degree(nv, 0);
  for (const auto& [key, len] : lengths) {
    (void)len;
    ++degree[static_cast<int>(key >> 32)];
    ++degree[static_cast<int>(key & 0xffffffffu)];
  }
  VertexGraph g;
  g.offsets.assign(nv + 1, 0);
  for (int i = 0; i < nv; ++i) g.offsets[i + 1] = g.offsets[i] + degree[i];
  g.neighbors.resize(g.offsets[nv]);
  g.lengths.resize(g.offsets[nv]);
  std::vector<int> cursor(g.offsets.begin(), g.offsets.end() - 1);
  // Deterministic fill: iterate edges in sorted key order.
  std::vector<std::pair<uint64_t, double>> sorted(lengths.begin(), lengths.end());
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [key, len] : sorted) {
    const int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
    g.neighbors[cursor[a]] = b;
    g.lengths[cursor[a]++] = len;
    g.neighbors[cursor[b]] = a;
    g.lengths[cursor[b]++] = len;
  }
  return g;
}

std::vector<double> graph_distances(const VertexGraph& graph, const std::vector<int>& sources,
                                    double cutoff) {
  const int nv = static_cast<int>(graph.offsets.size()) - 1;
  std::vector<double> dist(nv, kInf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  for (int s : sources) {
    if (s < 0 || s >= nv) throw input_error("vertex index out of range: " + std::to_string(s));
    dist[s] = 0.0;
    heap.emplace(0.0, s);
  }
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    if (cutoff >= 0.0 && d > cutoff) continue;
    for (int e = graph.offsets[v]; e < graph.offsets[v + 1]; ++e) {
      const double nd = d + graph.lengths[e];
      if (nd < dist[graph.neighbors[e]]) {
        dist[graph.neighbors[e]] = nd;
        heap.emplace(nd, graph.neighbors[e]);
      }
    }
  }
  return dist;
}

std::vector<double> graph_distances(const TriangleMesh& mesh, int source) {
  return graph_distances(build_vertex_graph(mesh), std::vector<int>{source});
}

double median_edge_length(const TriangleMesh& mesh) {
  std::unordered_map<uint64_t, double> lengths;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto l = mesh.corner_lengths(t);
    for (int c = 0; c < 3; ++c)
      lengths[edge_key(tri[(c + 1) % 3], tri[(c + 2) % 3])] = l[c];
  }
  std::vector<double> values;
  values.reserve(lengths.size());
  for (const auto& [key, len] : lengths) {
    (void)key;
    values.push_back(len);
  }
  std::sort(values.begin(), values.end());
  return values.empty() ? 0.0 : values[values.size() / 2];
}

bool Region::contains(int v) const {
  return std::binary_search(vertices.begin(), vertices.end(), v);
}

Region make_region(std::vector<int> vertices) {
  std::sort(vertices.begin(), vertices.end());
  vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
  Region region;
  region.vertices = std::move(vertices);
  region.kind = RegionKind::custom;
  return region;
}

bool regions_disjoint(const Region& a, const Region& b) {
  auto it_a = a.vertices.begin();
  auto it_b = b.vertices.begin();
  while (it_a != a.vertices.end() && it_b != b.vertices.end()) {
    if (*it_a == *it_b) return false;
    if (*it_a < *it_b)
      ++it_a;
    else
      ++it_b;
  }
  return true;
}

Region region_union(const Region& a, const Region& b) {
  std::vector<int> merged;
  merged.reserve(a.vertices.size() + b.vertices.size());
  std::set_union(a.vertices.begin(), a.vertices.end(), b.vertices.begin(), b.vertices.end(),
                 std::back_inserter(merged));
  return make_region(std::move(merged));
}

Region graph_ball(const TriangleMesh& mesh, const VertexGraph& graph, int center, double r) {
  if (center < 0 || center >= mesh.vertex_count())
    throw input_error("ball center out of range: " + std::to_string(center));
  if (r < 0.0) throw input_error("ball radius must be nonnegative");
  Region region;
  region.kind = RegionKind::ball;
  region.center = center;
  region.r = 0.0;
  region.R = r;
  if (r == 0.0) return region;
  const auto dist = graph_distances(graph, {center}, std::isinf(r) ? -1.0 : r);
  for (int v = 0; v < mesh.vertex_count(); ++v)
    if (dist[v] < r) region.vertices.push_back(v);
  return region;
}

Region graph_ball(const TriangleMesh& mesh, int center, double r) {
  return graph_ball(mesh, build_vertex_graph(mesh), center, r);
}

std::pair<Region, Region> graph_annulus(const TriangleMesh& mesh, const VertexGraph& graph,
                                        int center, double r, double R) {
  if (!(r >= 0.0 && r < R)) throw input_error("annulus radii must satisfy 0 <= r < R");
  if (center < 0 || center >= mesh.vertex_count())
    throw input_error("annulus center out of range: " + std::to_string(center));
  const auto dist = graph_distances(graph, {center}, std::isinf(R) ? -1.0 : 2.0 * R);
  Region inner, outer;
  inner.kind = outer.kind = RegionKind::annulus;
  inner.center = outer.center = center;
  inner.r = r;
  inner.R = R;
  outer.r = r / 2.0;
  outer.R = 2.0 * R;
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (dist[v] >= r && dist[v] < R) inner.vertices.push_back(v);
    if (dist[v] >= r / 2.0 && dist[v] < 2.0 * R) outer.vertices.push_back(v);
  }
  return {inner, outer};
}

std::pair<Region, Region> graph_annulus(const TriangleMesh& mesh, int center, double r, double R) {
  return graph_annulus(mesh, build_vertex_graph(mesh), center, r, R);
}

std::vector<double> vertex_lumped_areas(const TriangleMesh& mesh) {
  std::vector<double> areas(mesh.vertex_count(), 0.0);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double third = mesh.triangle_area(t) / 3.0;
    for (int c = 0; c < 3; ++c) areas[mesh.triangles[t][c]] += third;
  }
  return areas;
}

TriangleMesh subdivide_midpoint(const TriangleMesh& mesh, bool project_to_unit_sphere) {
  if (project_to_unit_sphere && !mesh.intrinsic_lengths.empty())
    throw input_error("cannot reproject an intrinsic mesh to the sphere");
  TriangleMesh out;
  out.vertices = mesh.vertices;
  std::unordered_map<uint64_t, int> midpoint;
  auto mid = [&](int a, int b) {
    const uint64_t key = edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int idx = static_cast<int>(out.vertices.size());
    Eigen::Vector3d p = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
    if (project_to_unit_sphere) p.normalize();
    out.vertices.push_back(p);
    midpoint.emplace(key, idx);
    return idx;
  };
  const bool intrinsic = !mesh.intrinsic_lengths.empty();
  out.triangles.reserve(mesh.triangles.size() * 4);
  if (intrinsic) out.intrinsic_lengths.reserve(mesh.triangles.size() * 4);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const int m01 = mid(tri[0], tri[1]);
    const int m12 = mid(tri[1], tri[2]);
    const int m20 = mid(tri[2], tri[0]);
    out.triangles.push_back({tri[0], m01, m20});
    out.triangles.push_back({tri[1], m12, m01});
    out.triangles.push_back({tri[2], m20, m12});
    out.triangles.push_back({m01, m12, m20});
    if (intrinsic) {
      const auto& l = mesh.intrinsic_lengths[t];
      const double a = l[0] / 2.0, b = l[1] / 2.0, c = l[2] / 2.0;
      out.intrinsic_lengths.push_back({a, b, c});
      out.intrinsic_lengths.push_back({b, c, a});
      out.intrinsic_lengths.push_back({c, a, b});
      out.intrinsic_lengths.push_back({c, a, b});
    }
  }
  finalize(out);
  return out;
}

std::vector<int> farthest_point_sample(const TriangleMesh& mesh, int count, int start) {
  const auto graph = build_vertex_graph(mesh);
  std::vector<int> chosen{start};
  auto dist = graph_distances(graph, chosen);
  while (static_cast<int>(chosen.size()) < std::min(count, mesh.vertex_count())) {
    int best = -1;
    double best_d = -1.0;
    for (int v = 0; v < mesh.vertex_count(); ++v) {
      if (std::isfinite(dist[v]) && dist[v] > best_d) {
        best_d = dist[v];
        best = v;
      }
    }
    if (best < 0 || best_d == 0.0) break;
    chosen.push_back(best);
    const auto d2 = graph_distances(graph, {best});
    for (int v = 0; v < mesh.vertex_count(); ++v) dist[v] = std::min(dist[v], d2[v]);
  }
  return chosen;
}

}  // namespace ceig
