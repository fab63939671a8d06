#pragma once

#include "ceig/measure.hpp"
#include "ceig/mesh.hpp"
#include "ceig/spectrum.hpp"

#include <Eigen/Core>

#include <optional>

namespace ceig {

/// First-variation form L_phi(u, mu) = -lambda * (int u^2 phi dmu)/(int u^2 dmu).
double l_phi(const Eigen::VectorXd& u, const MassMatrix& M, const Eigen::VectorXd& phi,
             double lam);

struct DerivativePair {
  double left = 0.0;   // d/dt at 0-
  double right = 0.0;  // d/dt at 0+, right <= left
};

/// One-sided derivatives of lambda_k along the deformation generated by phi:
/// extreme values of L_phi over the eigenvalue's full cluster eigenspace.
/// phi is centered to zero mu-mean first.
DerivativePair one_sided_derivatives(const TriangleMesh& mesh,
                                     const Eigen::SparseMatrix<double>& K,
                                     const DiscreteMeasure& mu, const Eigen::VectorXd& phi, int k,
                                     double cluster_tol = 1e-6);
DerivativePair derivatives_on_eigenspace(const Eigenspace& space, const MassMatrix& M,
                                         Eigen::VectorXd phi);

struct ProjectionGapReport {
  double gap = 0.0;    // operator norm of (Pi_k - Pi'_k) in L2(mu)
  double delta = 0.0;  // exp(d(mu, mu')) - 1
  double ratio = 0.0;  // gap / delta
  bool inconclusive = false;
};

ProjectionGapReport projection_gap(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K,
                                   const DiscreteMeasure& mu, const DiscreteMeasure& mu2, int k,
                                   double cluster_tol = 1e-6);

enum class Verdict { extremal, non_extremal, inconclusive };

/// Nonnegative combination of squared cluster eigenfunctions fitted to 1 on
/// the support. Coefficients are reported over a rotated M-orthonormal cluster
/// basis (the fit runs over the full positive-semidefinite cone of squares).
struct ExtremalityCertificate {
  Eigen::VectorXd coefficients;
  double residual = 0.0;  // sup over the support of |sum c_i u_i^2 - 1|
  Verdict verdict = Verdict::inconclusive;
  double tolerance = 0.0;
  int eigenspace_dim = 0;
  uint64_t seed = 0;
};

ExtremalityCertificate extremality_certificate(const TriangleMesh& mesh,
                                               const Eigen::SparseMatrix<double>& K,
                                               const DiscreteMeasure& mu, int k, double tol,
                                               double cluster_tol = 1e-6);

struct SeparatingDirection {
  std::optional<Eigen::VectorXd> phi;  // zero mu-mean, |phi|_inf <= 1
  double margin = 0.0;                 // min over E_k of int u^2 phi dmu at |u|_mu = 1
  bool inconclusive = false;
};

/// For a non-extremal measure, a direction phi with int u^2 phi dmu > 0 for
/// every u in the cluster eigenspace; empty when the certificate verdict is
/// extremal. lambda increases along -phi (right derivative lambda * margin).
SeparatingDirection separating_direction(const TriangleMesh& mesh,
                                         const Eigen::SparseMatrix<double>& K,
                                         const DiscreteMeasure& mu, int k, double cert_tol = 1e-3,
                                         double cluster_tol = 1e-6);

/// Core of separating_direction, reusable with a precomputed eigenspace and an
/// optional set of vertices where phi must vanish (cap-feasible directions).
SeparatingDirection separating_direction_on_eigenspace(const Eigenspace& space,
                                                       const MassMatrix& M,
                                                       const std::vector<char>& forbidden = {},
                                                       int max_iterations = 400);

}  // namespace ceig
