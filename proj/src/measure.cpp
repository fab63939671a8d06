#include "ceig/measure.hpp"

#include "ceig/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace ceig {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SupportKind classify_support(const TriangleMesh& mesh, const DiscreteMeasure& mu) {
  std::vector<char> on_boundary(mesh.vertex_count(), 0);
  for (const auto& loop : mesh.boundary_loops)
    for (int v : loop) on_boundary[v] = 1;
  bool any_boundary = false, any_interior = false;
  for (int v : mu.support()) (on_boundary[v] ? any_boundary : any_interior) = true;
  if (any_boundary && !any_interior) return SupportKind::boundary;
  if (any_boundary && any_interior) return SupportKind::mixed;
  return SupportKind::interior;
}

}  // namespace

double DiscreteMeasure::total_mass() const {
  double total = 0.0;
  for (double w : weights) total += w;
  for (const auto& [v, m] : atoms) {
    (void)v;
    total += m;
  }
  return total;
}

bool DiscreteMeasure::is_probability(double tol) const {
  return std::abs(total_mass() - 1.0) <= tol;
}

std::vector<double> DiscreteMeasure::vertex_masses() const {
  std::vector<double> masses = weights;
  for (const auto& [v, m] : atoms) masses[v] += m;
  return masses;
}

std::vector<int> DiscreteMeasure::support(double rel_tol) const {
  const auto masses = vertex_masses();
  double max_mass = 0.0;
  for (double m : masses) max_mass = std::max(max_mass, m);
  std::vector<int> result;
  for (int v = 0; v < static_cast<int>(masses.size()); ++v)
    if (masses[v] > rel_tol * max_mass) result.push_back(v);
  return result;
}

bool DiscreteMeasure::is_dirac() const { return support().size() == 1; }

double DiscreteMeasure::region_mass(const Region& region) const {
  const auto masses = vertex_masses();
  double total = 0.0;
  for (int v : region.vertices) total += masses[v];
  return total;
}

DiscreteMeasure DiscreteMeasure::normalized() const {
  const double total = total_mass();
  if (!(total > 0.0)) throw input_error("cannot normalize a measure with zero total mass");
  DiscreteMeasure out = *this;
  for (double& w : out.weights) w /= total;
  for (auto& [v, m] : out.atoms) {
    (void)v;
    m /= total;
  }
  return out;
}

DiscreteMeasure uniform_area_measure(const TriangleMesh& mesh) {
  if (mesh.vertex_count() == 0) throw input_error("empty mesh");
  DiscreteMeasure mu;
  mu.weights = vertex_lumped_areas(mesh);
  mu.support_kind = SupportKind::interior;
  if (mesh.has_boundary()) mu.support_kind = SupportKind::mixed;
  return mu;
}

DiscreteMeasure boundary_measure(const TriangleMesh& mesh) {
  if (!mesh.has_boundary()) throw input_error("no boundary");
  DiscreteMeasure mu;
  mu.weights.assign(mesh.vertex_count(), 0.0);
  for (const auto& loop : mesh.boundary_loops) {
    const int n = static_cast<int>(loop.size());
    for (int i = 0; i < n; ++i) {
      const int a = loop[i], b = loop[(i + 1) % n];
      const double len = (mesh.vertices[a] - mesh.vertices[b]).norm();
      mu.weights[a] += 0.5 * len;
      mu.weights[b] += 0.5 * len;
    }
  }
  mu.support_kind = SupportKind::boundary;
  return mu;
}

DiscreteMeasure atomic_measure(const TriangleMesh& mesh,
                               const std::vector<std::pair<int, double>>& atoms) {
  DiscreteMeasure mu;
  mu.weights.assign(mesh.vertex_count(), 0.0);
  std::set<int> seen;
  for (const auto& [v, m] : atoms) {
    if (v < 0 || v >= mesh.vertex_count())
      throw input_error("atom vertex out of range: " + std::to_string(v));
    if (!(m > 0.0)) throw input_error("atom mass must be positive");
    if (!seen.insert(v).second) throw input_error("repeated atom vertex: " + std::to_string(v));
  }
  mu.atoms = atoms;
  mu.support_kind = classify_support(mesh, mu);
  return mu;
}

DiscreteMeasure density_measure(const TriangleMesh& mesh, const std::vector<double>& density) {
  if (static_cast<int>(density.size()) != mesh.vertex_count())
    throw input_error("density size does not match vertex count");
  const auto areas = vertex_lumped_areas(mesh);
  DiscreteMeasure mu;
  mu.weights.resize(mesh.vertex_count());
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (density[v] < 0.0) throw input_error("negative density at vertex " + std::to_string(v));
    mu.weights[v] = density[v] * areas[v];
  }
  mu.support_kind = SupportKind::interior;
  if (mesh.has_boundary()) mu.support_kind = SupportKind::mixed;
  return mu;
}

DeformationFamily make_deformation(const DiscreteMeasure& base, Eigen::VectorXd phi) {
  if (phi.size() != base.size()) throw input_error("phi size does not match vertex count");
  if (!phi.allFinite()) throw input_error("phi must be bounded");
  DeformationFamily family;
  family.base = base.normalized();
  const auto masses = family.base.vertex_masses();
  double mean = 0.0;
  for (int v = 0; v < family.base.size(); ++v) mean += masses[v] * phi[v];
  phi.array() -= mean;  // total mass is 1 after normalization
  family.phi = std::move(phi);
  family.phi_inf_norm = family.phi.lpNorm<Eigen::Infinity>();
  return family;
}

DiscreteMeasure deform(const DeformationFamily& family, double t) {
  if (std::abs(t) * family.phi_inf_norm > 700.0)
    throw input_error("deform overflow guard: |t|*sup|phi| > 700");
  DiscreteMeasure out = family.base;
  double total = 0.0;
  for (int v = 0; v < out.size(); ++v) {
    out.weights[v] *= std::exp(family.phi[v] * t);
    total += out.weights[v];
  }
  for (auto& [v, m] : out.atoms) {
    m *= std::exp(family.phi[v] * t);
    total += m;
  }
  if (!(total > 0.0) || !std::isfinite(total)) throw numeric_error("deform produced a degenerate measure");
  for (double& w : out.weights) w /= total;
  for (auto& [v, m] : out.atoms) {
    (void)v;
    m /= total;
  }
  return out;
}

IntegralDistance integral_distance(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (!a.is_probability() || !b.is_probability())
    throw input_error("integral distance requires probability measures");
  if (a.size() != b.size()) throw input_error("measures live on different meshes");
  const auto ma = a.vertex_masses();
  const auto mb = b.vertex_masses();
  const auto sa = a.support();
  const auto sb = b.support();
  if (sa != sb) return {kInf, kInf};
  double d = 0.0;
  for (int v : sa) d = std::max(d, std::abs(std::log(ma[v] / mb[v])));
  return {d, std::expm1(d)};
}

double max_ball_mass(const TriangleMesh& mesh, const VertexGraph& graph,
                     const DiscreteMeasure& mu, double r) {
  const auto masses = mu.vertex_masses();
  double best = 0.0;
  for (int x = 0; x < mesh.vertex_count(); ++x) {
    const auto dist = graph_distances(graph, {x}, r);
    double ball = 0.0;
    for (int v = 0; v < mesh.vertex_count(); ++v)
      if (dist[v] < r) ball += masses[v];
    best = std::max(best, ball);
  }
  return best;
}

BallGrowthProfile ball_growth_diagnostic(const TriangleMesh& mesh, const DiscreteMeasure& mu,
                                         double q, const std::vector<double>& radii) {
  if (q < 1.0) throw input_error("ball growth diagnostic requires q >= 1");
  if (radii.empty()) throw input_error("empty radius grid");
  BallGrowthProfile profile;
  profile.radii = radii;
  std::sort(profile.radii.begin(), profile.radii.end());
  for (double r : profile.radii)
    if (!(r > 0.0 && r < 1.0)) throw input_error("radii must lie in (0,1)");

  const auto graph = build_vertex_graph(mesh);
  const auto masses = mu.vertex_masses();
  const double r_max = profile.radii.back();
  std::vector<double> sup_mass(profile.radii.size(), 0.0);
  for (int x = 0; x < mesh.vertex_count(); ++x) {
    const auto dist = graph_distances(graph, {x}, r_max);
    std::vector<double> ball(profile.radii.size(), 0.0);
    for (int v = 0; v < mesh.vertex_count(); ++v) {
      if (dist[v] >= r_max) continue;
      // add mass to every radius bin that contains this vertex
      const auto it = std::upper_bound(profile.radii.begin(), profile.radii.end(), dist[v]);
      for (size_t i = it - profile.radii.begin(); i < profile.radii.size(); ++i) ball[i] += masses[v];
    }
    for (size_t i = 0; i < profile.radii.size(); ++i) sup_mass[i] = std::max(sup_mass[i], ball[i]);
  }
  profile.values.resize(profile.radii.size());
  for (size_t i = 0; i < profile.radii.size(); ++i)
    profile.values[i] = sup_mass[i] * std::pow(std::log(1.0 / profile.radii[i]), q);

  const double peak = *std::max_element(profile.values.begin(), profile.values.end());
  const double at_smallest = profile.values.front();
  const double at_largest = profile.values.back();
  if (peak <= 0.0) {
    profile.trend = GrowthTrend::decaying;
  } else if (at_smallest >= 0.8 * peak && at_smallest > 2.0 * at_largest) {
    profile.trend = GrowthTrend::growing;
  } else if (at_smallest <= 0.5 * peak) {
    profile.trend = GrowthTrend::decaying;
  } else {
    profile.trend = GrowthTrend::bounded;
  }
  return profile;
}

std::vector<double> default_radii(const TriangleMesh& mesh, int count) {
  const double hi = std::min(0.9, median_edge_length(mesh));
  const double lo = 1e-3;
  std::vector<double> radii;
  if (hi <= lo) {
    radii.push_back(lo);
    return radii;
  }
  for (int i = 0; i < count; ++i)
    radii.push_back(hi * std::pow(lo / hi, static_cast<double>(i) / (count - 1)));
  std::sort(radii.begin(), radii.end());
  return radii;
}

}  // namespace ceig
