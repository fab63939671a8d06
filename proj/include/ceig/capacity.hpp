#pragma once

#include "ceig/measure.hpp"
#include "ceig/mesh.hpp"
#include "ceig/spectrum.hpp"

#include <Eigen/Core>
#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace ceig {

struct Capacitor {
  Region F;  // inner compact set, potential 1
  Region G;  // outer open set, potential 0 outside
};

struct CapacityResult {
  double cap_value = 0.0;
  Eigen::VectorXd potential;  // 1 on F, 0 outside G, in [0,1]
};

/// CAP(F, G): minimal Dirichlet energy over functions = 1 on F, = 0 outside G.
CapacityResult cap(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K,
                   const Capacitor& capacitor);

/// Whole-space capacity: minimal u^T K u + u^T M_g u with u = 1 on F, where
/// M_g is the lumped area mass.
double capty(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K, const Region& F);

/// Smallest Rayleigh quotient over functions vanishing outside omega; +inf
/// when the measure gives omega no mass.
double fundamental_tone(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K,
                        const DiscreteMeasure& mu, const Region& omega);

struct IsocapacityCandidate {
  std::string kind;
  int size = 0;
  double mass = 0.0;
  double capacity = 0.0;
  double ratio = 0.0;
};

struct IsocapacityResult {
  double beta_lower = 0.0;  // lower bound on beta(Omega, mu)
  std::vector<IsocapacityCandidate> candidate_log;
};

/// Lower bound for the isocapacity constant via a finite candidate family:
/// graph balls inside omega, superlevel sets of the tone eigenfunction, and
/// superlevel sets of equilibrium potentials.
IsocapacityResult isocapacity_constant(const TriangleMesh& mesh,
                                       const Eigen::SparseMatrix<double>& K,
                                       const DiscreteMeasure& mu, const Region& omega);

struct MazjaBracket {
  double lhs = 0.0;   // (4 beta_lower)^{-1}, informational
  double tone = 0.0;  // lambda_*(Omega, mu)
  double rhs = 0.0;   // beta_lower^{-1}
  bool pass = false;  // tone <= rhs * (1 + tol)
};

MazjaBracket mazja_bracket(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K,
                           const DiscreteMeasure& mu, const Region& omega, double tol = 0.05);

struct ToneBracket {
  double inf_tone = 0.0;
  double lambda1 = 0.0;
  double factor = 0.0;  // lambda1 / inf_tone
  bool pass = false;    // inf_tone <= lambda1 * (1 + tol)
};

/// Lemma-style bracket: the infimum of fundamental tones over the candidate
/// family (always augmented with the median-split superlevel domains of the
/// first eigenfunction) against lambda_1.
ToneBracket tone_bracket(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K,
                         const DiscreteMeasure& mu, const std::vector<Region>& omegas,
                         double tol = 1e-9);

}  // namespace ceig
