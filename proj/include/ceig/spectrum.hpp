#pragma once

#include "ceig/measure.hpp"
#include "ceig/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/Sparse>

#include <cstdint>
#include <vector>

namespace ceig {

/// Diagonal (lumped) mass matrix of a measure; possibly singular.
struct MassMatrix {
  Eigen::VectorXd diag;

  int size() const { return static_cast<int>(diag.size()); }
  int rank() const;
  std::vector<int> support() const;  // strictly positive entries
  double total() const { return diag.sum(); }
};

MassMatrix assemble_mass(const TriangleMesh& mesh, const DiscreteMeasure& mu);

/// (u^T K u)/(u^T M u); +inf when the denominator vanishes and the energy does
/// not; NaN when both vanish. Tiny negative energies are clamped to zero.
double rayleigh(const Eigen::SparseMatrix<double>& K, const MassMatrix& M,
                const Eigen::VectorXd& u);

struct SolveOptions {
  double tol = 1e-9;         // residual <= tol * (|K| + lambda |M|)
  int dense_threshold = 500;
  int max_basis = 0;         // 0 = auto
  uint64_t seed = 7349;
  bool deflate_constants = true;  // Neumann pencil: peel off the constant kernel
  bool force_dense = false;
};

/// Eigenpairs of K u = lambda M u in min-max order. Singular M is handled by
/// Schur-complement restriction to its support with harmonic extension;
/// eigenvalues past rank(M) are +inf.
struct SpectralResult {
  std::vector<double> eigenvalues;  // size k_max+1, +inf padded
  Eigen::MatrixXd eigenfunctions;   // one column per finite eigenvalue, M-orthonormal
  int n_finite = 0;
  std::vector<double> residuals;    // |K u - lambda M u|_2 per finite pair
};

SpectralResult solve_spectrum(const Eigen::SparseMatrix<double>& K, const MassMatrix& M,
                              int k_max, double tol);
SpectralResult solve_spectrum(const Eigen::SparseMatrix<double>& K, const MassMatrix& M,
                              int k_max, const SolveOptions& opts);

/// Dense full decomposition; the brute-force reference path.
SpectralResult solve_spectrum_dense(const Eigen::SparseMatrix<double>& K, const MassMatrix& M,
                                    int k_max);

struct Eigenspace {
  int k = 0;
  double lambda = 0.0;
  Eigen::MatrixXd basis;  // M-orthonormal, one column per cluster member
  int multiplicity = 0;
  double cluster_tolerance = 0.0;
};

/// All computed eigenfunctions with |lambda_j - lambda_k| <= tol * max(1, lambda_k).
Eigenspace eigenspace(const SpectralResult& result, int k, double cluster_tol = 1e-6);

/// Discrete residual of the weak eigenfunction identity, maximized over
/// canonical test functions and normalized by |u|_2.
double weak_eigen_identity_residual(const Eigen::SparseMatrix<double>& K, const MassMatrix& M,
                                    const SpectralResult& result, int k);

struct SemicontinuityReport {
  std::vector<double> lambdas;
  double limsup_estimate = 0.0;
  double lambda_limit = 0.0;
  bool upper_semicontinuous = false;
};

/// lambda_k along a sequence of measures against the weak limit.
SemicontinuityReport semicontinuity_probe(const TriangleMesh& mesh,
                                          const Eigen::SparseMatrix<double>& K,
                                          const std::vector<DiscreteMeasure>& measures,
                                          const DiscreteMeasure& limit, int k, double tol = 1e-6);

}  // namespace ceig
