#pragma once

#include "ceig/mesh.hpp"

#include <Eigen/Core>

#include <string>
#include <utility>
#include <vector>

namespace ceig {

enum class SupportKind { interior, boundary, mixed };

/// Discrete Radon measure: nonnegative vertex weights plus optional atoms.
/// Atoms carry an explicit flag because on a fixed mesh every measure is
/// formally atomic; the flag encodes which continuum object is being modeled.
struct DiscreteMeasure {
  std::vector<double> weights;
  std::vector<std::pair<int, double>> atoms;
  SupportKind support_kind = SupportKind::interior;

  int size() const { return static_cast<int>(weights.size()); }
  bool has_atoms() const { return !atoms.empty(); }
  double total_mass() const;
  bool is_probability(double tol = 1e-12) const;

  /// Per-vertex masses with atoms folded in.
  std::vector<double> vertex_masses() const;
  std::vector<int> support(double rel_tol = 1e-14) const;
  bool is_dirac() const;
  double region_mass(const Region& region) const;
  DiscreteMeasure normalized() const;
};

DiscreteMeasure uniform_area_measure(const TriangleMesh& mesh);
DiscreteMeasure boundary_measure(const TriangleMesh& mesh);
DiscreteMeasure atomic_measure(const TriangleMesh& mesh,
                               const std::vector<std::pair<int, double>>& atoms);
DiscreteMeasure density_measure(const TriangleMesh& mesh, const std::vector<double>& density);

/// Exponential-tilt family mu_t with generating function phi. phi is centered
/// to zero mu-mean on construction.
struct DeformationFamily {
  DiscreteMeasure base;  // probability-normalized
  Eigen::VectorXd phi;
  double phi_inf_norm = 0.0;
};

DeformationFamily make_deformation(const DiscreteMeasure& base, Eigen::VectorXd phi);
DiscreteMeasure deform(const DeformationFamily& family, double t);

struct IntegralDistance {
  double d = 0.0;      // sup over support of |ln(w/w')|; +inf when supports differ
  double delta = 0.0;  // exp(d) - 1
};
IntegralDistance integral_distance(const DiscreteMeasure& a, const DiscreteMeasure& b);

enum class GrowthTrend { decaying, bounded, growing };

struct BallGrowthProfile {
  std::vector<double> radii;   // ascending, in (0,1)
  std::vector<double> values;  // sup_x mu(B(x,r)) * ln^q(1/r)
  GrowthTrend trend = GrowthTrend::bounded;
};

BallGrowthProfile ball_growth_diagnostic(const TriangleMesh& mesh, const DiscreteMeasure& mu,
                                         double q, const std::vector<double>& radii);

/// Geometric radius grid from the median edge length down to 1e-3.
std::vector<double> default_radii(const TriangleMesh& mesh, int count = 16);

/// sup_x mu(B(x, r)) over vertex-centered graph balls.
double max_ball_mass(const TriangleMesh& mesh, const VertexGraph& graph,
                     const DiscreteMeasure& mu, double r);

}  // namespace ceig
