#pragma once

#include "ceig/capacity.hpp"
#include "ceig/measure.hpp"
#include "ceig/mesh.hpp"

#include <Eigen/Core>

#include <vector>

namespace ceig {

/// Conformal dilation of the unit sphere, indexed by the open unit ball;
/// a = 0 is the identity and |a| -> 1 degenerates to a Dirac at a/|a|.
struct MobiusParameter {
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
};

Eigen::MatrixX3d mobius_apply(const MobiusParameter& param, const Eigen::MatrixX3d& points);

struct BalanceResult {
  MobiusParameter parameter;
  double residual = 0.0;  // max |coordinate integral| of the pushed measure
  int iterations = 0;
};

/// Finds the dilation that zeroes the center of mass of the pushed-forward
/// measure (damped Newton with a mass-interpolation homotopy fallback).
BalanceResult hersch_balance(const Eigen::MatrixX3d& sphere_map, const DiscreteMeasure& mu);

struct HerschBoundReport {
  double bound = 0.0;    // discrete upper bound for lambda_1 * mu(M)
  double ceiling = 0.0;  // 8 pi d
  MobiusParameter parameter;
  double balance_residual = 0.0;
  double test_energy = 0.0;  // summed Dirichlet energy of the balanced test maps
};

/// Hersch/Yang-Yau bound from the three balanced coordinate test functions of
/// a degree-d sphere map.
HerschBoundReport hersch_bound(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K,
                               const DiscreteMeasure& mu, const Eigen::MatrixX3d& sphere_map,
                               int degree, double mesh_tol = 0.05);

struct AnnulusDescriptor {
  int center = -1;
  double r = 0.0;
  double R = 0.0;
  Region inner;   // A
  Region outer;   // 2A
  double mass = 0.0;
  double capacity = 0.0;  // filled by capacitor_bound
};

struct AnnulusSystem {
  std::vector<AnnulusDescriptor> annuli;  // k+1 annuli with disjoint outer parts
  double v = 0.0;      // min_i mu(A_i)
  double kappa = 0.0;  // max_i CAP(A_i, 2A_i), filled by capacitor_bound
  double c_eff = 0.0;  // v * k / mu(M)
};

/// Greedy search for k+1 annuli with pairwise disjoint (and non-adjacent)
/// doubled annuli, maximizing the minimum inner mass.
AnnulusSystem gy_annuli(const TriangleMesh& mesh, const DiscreteMeasure& mu, int k);

/// kappa / v for the annulus system; checks lambda_k <= (kappa/v)(1 + tol) on
/// the same discretization and fills the per-annulus capacities.
double capacitor_bound(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K,
                       const DiscreteMeasure& mu, AnnulusSystem& system, int k,
                       double tol = 1e-6);

}  // namespace ceig
