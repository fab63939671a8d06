#include "ceig/spectrum.hpp"

#include "ceig/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>

namespace ceig {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sparse_inf_norm(const Eigen::SparseMatrix<double>& A) {
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(A.rows());
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
      row_sums[it.row()] += std::abs(it.value());
  return row_sums.size() ? row_sums.maxCoeff() : 0.0;
}

Eigen::SparseMatrix<double> extract_submatrix(const Eigen::SparseMatrix<double>& A,
                                              const std::vector<int>& rows,
                                              const std::vector<int>& cols) {
  std::vector<int> row_of(A.rows(), -1), col_of(A.cols(), -1);
  for (size_t i = 0; i < rows.size(); ++i) row_of[rows[i]] = static_cast<int>(i);
  for (size_t j = 0; j < cols.size(); ++j) col_of[cols[j]] = static_cast<int>(j);
  std::vector<Eigen::Triplet<double>> triplets;
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
      if (row_of[it.row()] >= 0 && col_of[it.col()] >= 0)
        triplets.emplace_back(row_of[it.row()], col_of[it.col()], it.value());
  Eigen::SparseMatrix<double> sub(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  sub.setFromTriplets(triplets.begin(), triplets.end());
  return sub;
}

// Connected components of the sparsity pattern (mesh connectivity).
std::vector<int> pattern_components(const Eigen::SparseMatrix<double>& K) {
  const int n = static_cast<int>(K.rows());
  std::vector<int> component(n, -1);
  int current = 0;
  for (int seed = 0; seed < n; ++seed) {
    if (component[seed] >= 0) continue;
    component[seed] = current;
    std::queue<int> frontier;
    frontier.push(seed);
    while (!frontier.empty()) {
      const int v = frontier.front();
      frontier.pop();
      for (Eigen::SparseMatrix<double>::InnerIterator it(K, v); it; ++it) {
        if (component[it.row()] < 0) {
          component[it.row()] = current;
          frontier.push(it.row());
        }
      }
    }
    ++current;
  }
  return component;
}

struct RestrictedPencil {
  int n_global = 0;
  std::vector<int> sup;      // global indices carrying mass
  std::vector<int> off;      // live vertices without mass
  std::vector<char> live;    // per global vertex
  Eigen::VectorXd masses;    // over sup
  Eigen::VectorXd scale;     // sqrt(masses)
  bool dense_operator = false;
  Eigen::SparseMatrix<double> C_sparse;  // D^{-1} K_ss D^{-1} when off empty
  Eigen::MatrixXd C_dense;               // scaled Schur complement otherwise
  Eigen::SparseMatrix<double> K_off_sup;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> off_solver;
  std::vector<std::vector<int>> component_support;  // sup-local indices per live component
  double norm_C = 0.0;
  double norm_K = 0.0;
  double max_mass = 0.0;
  double max_scale = 0.0;

  Eigen::VectorXd apply_C(const Eigen::VectorXd& w) const {
    return dense_operator ? Eigen::VectorXd(C_dense * w) : Eigen::VectorXd(C_sparse * w);
  }

  // Lift a support-space vector to the full mesh by harmonic extension.
  Eigen::VectorXd extend(const Eigen::VectorXd& w) const {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n_global);
    Eigen::VectorXd u_sup = w.cwiseQuotient(scale);
    for (size_t i = 0; i < sup.size(); ++i) u[sup[i]] = u_sup[static_cast<int>(i)];
    if (!off.empty()) {
      Eigen::VectorXd rhs = -(K_off_sup * u_sup);
      Eigen::VectorXd u_off = off_solver.solve(rhs);
      for (size_t i = 0; i < off.size(); ++i) u[off[i]] = u_off[static_cast<int>(i)];
    }
    return u;
  }
};

RestrictedPencil build_pencil(const Eigen::SparseMatrix<double>& K, const MassMatrix& M) {
  if (K.rows() != M.size()) throw input_error("stiffness/mass size mismatch");
  RestrictedPencil pencil;
  pencil.n_global = static_cast<int>(K.rows());

  const auto component = pattern_components(K);
  const int n_components = component.empty() ? 0 : *std::max_element(component.begin(), component.end()) + 1;
  std::vector<char> component_live(n_components, 0);
  for (int v = 0; v < pencil.n_global; ++v)
    if (M.diag[v] > 0.0) component_live[component[v]] = 1;

  pencil.live.assign(pencil.n_global, 0);
  for (int v = 0; v < pencil.n_global; ++v) {
    if (!component_live[component[v]]) continue;
    pencil.live[v] = 1;
    (M.diag[v] > 0.0 ? pencil.sup : pencil.off).push_back(v);
  }
  if (pencil.sup.empty()) throw input_error("measure has empty support");

  const int r = static_cast<int>(pencil.sup.size());
  pencil.masses.resize(r);
  for (int i = 0; i < r; ++i) pencil.masses[i] = M.diag[pencil.sup[i]];
  pencil.scale = pencil.masses.cwiseSqrt();
  pencil.norm_K = sparse_inf_norm(K);
  pencil.max_mass = pencil.masses.maxCoeff();
  pencil.max_scale = pencil.scale.maxCoeff();

  // Support-local component lists, for kernel deflation.
  std::vector<int> live_components;
  for (int c = 0; c < n_components; ++c)
    if (component_live[c]) live_components.push_back(c);
  pencil.component_support.resize(live_components.size());
  for (int i = 0; i < r; ++i) {
    const int c = component[pencil.sup[i]];
    const auto it = std::find(live_components.begin(), live_components.end(), c);
    pencil.component_support[it - live_components.begin()].push_back(i);
  }

  Eigen::SparseMatrix<double> K_ss = extract_submatrix(K, pencil.sup, pencil.sup);
  if (pencil.off.empty()) {
    const Eigen::VectorXd inv_scale = pencil.scale.cwiseInverse();
    pencil.C_sparse = inv_scale.asDiagonal() * K_ss * inv_scale.asDiagonal();
    pencil.dense_operator = false;
    pencil.norm_C = sparse_inf_norm(pencil.C_sparse);
  } else {
    if (r > 4000)
      throw numeric_error("singular mass support of size " + std::to_string(r) +
                          " is too large for the Schur-complement path");
    Eigen::SparseMatrix<double> K_oo = extract_submatrix(K, pencil.off, pencil.off);
    pencil.K_off_sup = extract_submatrix(K, pencil.off, pencil.sup);
    pencil.off_solver.compute(K_oo);
    if (pencil.off_solver.info() != Eigen::Success)
      throw numeric_error("harmonic extension factorization failed");
    // Dense Schur complement K_ss - K_so K_oo^{-1} K_os, column by column.
    Eigen::MatrixXd schur = Eigen::MatrixXd(K_ss);
    Eigen::MatrixXd K_os = Eigen::MatrixXd(pencil.K_off_sup);
    Eigen::MatrixXd X = pencil.off_solver.solve(K_os);
    if (!X.allFinite()) throw numeric_error("harmonic extension solve failed");
    schur.noalias() -= K_os.transpose() * X;
    schur = 0.5 * (schur + schur.transpose()).eval();
    const Eigen::VectorXd inv_scale = pencil.scale.cwiseInverse();
    pencil.C_dense = inv_scale.asDiagonal() * schur * inv_scale.asDiagonal();
    pencil.dense_operator = true;
    pencil.norm_C = pencil.C_dense.cwiseAbs().rowwise().sum().maxCoeff();
  }
  return pencil;
}

// Orthonormal deflation basis: scaled component indicators (the pencil kernel).
Eigen::MatrixXd kernel_basis(const RestrictedPencil& pencil) {
  const int r = static_cast<int>(pencil.sup.size());
  Eigen::MatrixXd N(r, pencil.component_support.size());
  N.setZero();
  for (size_t c = 0; c < pencil.component_support.size(); ++c) {
    for (int i : pencil.component_support[c]) N(i, static_cast<int>(c)) = pencil.scale[i];
    N.col(static_cast<int>(c)).normalize();
  }
  return N;
}

void clamp_spectrum(Eigen::VectorXd& values, double norm_C) {
  const double floor = -1e-10 * std::max(norm_C, 1e-300);
  for (int i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0) {
      if (values[i] < floor)
        throw numeric_error("quadratic form has a negative eigenvalue beyond the clamp threshold");
      values[i] = 0.0;
    }
  }
}

struct RitzSet {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // Euclidean-orthonormal in support space
};

// Dense decomposition of C restricted to the orthogonal complement of N.
RitzSet dense_positive_spectrum(const Eigen::MatrixXd& C, const Eigen::MatrixXd& N, double norm_C) {
  const int r = static_cast<int>(C.rows());
  const int z = static_cast<int>(N.cols());
  Eigen::MatrixXd Q_c;
  if (z > 0) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(N);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(r, r);
    Q_c = Q.rightCols(r - z);
  } else {
    Q_c = Eigen::MatrixXd::Identity(r, r);
  }
  Eigen::MatrixXd reduced = Q_c.transpose() * C * Q_c;
  reduced = 0.5 * (reduced + reduced.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reduced);
  if (eig.info() != Eigen::Success) throw numeric_error("dense eigensolver failed");
  RitzSet out;
  out.values = eig.eigenvalues();
  clamp_spectrum(out.values, norm_C);
  out.vectors = Q_c * eig.eigenvectors();
  return out;
}

// Shift-invert block Lanczos with full reorthogonalization; Rayleigh-Ritz on
// the accumulated Krylov basis.
RitzSet krylov_positive_spectrum(const RestrictedPencil& pencil, const Eigen::MatrixXd& N,
                                 int wanted, const SolveOptions& opts) {
  const int r = static_cast<int>(pencil.sup.size());
  const int dim_free = r - static_cast<int>(N.cols());
  wanted = std::min(wanted, dim_free);
  RitzSet out;
  if (wanted == 0) {
    out.values.resize(0);
    out.vectors.resize(r, 0);
    return out;
  }

  const double delta = std::max(1e-300, 1e-8 * pencil.C_sparse.diagonal().mean());
  Eigen::SparseMatrix<double> shifted = pencil.C_sparse;
  Eigen::VectorXd diag_shift = Eigen::VectorXd::Constant(r, delta);
  shifted += Eigen::SparseMatrix<double>(diag_shift.asDiagonal());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor(shifted);
  if (factor.info() != Eigen::Success)
    throw numeric_error("shift-invert factorization failed");

  const int block = std::max(2, std::min({wanted + 2, 12, dim_free}));
  const int max_basis = opts.max_basis > 0
                            ? std::min(opts.max_basis, dim_free)
                            : std::min(dim_free, std::max(120, 12 * wanted));

  std::mt19937_64 rng(opts.seed ^ (static_cast<uint64_t>(r) << 20));
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_block = [&](int cols) {
    Eigen::MatrixXd X(r, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < r; ++i) X(i, j) = gauss(rng);
    return X;
  };

  Eigen::MatrixXd V(r, 0), CV(r, 0);
  auto orthogonalize = [&](Eigen::MatrixXd X) {
    for (int pass = 0; pass < 2; ++pass) {
      if (N.cols() > 0) X -= N * (N.transpose() * X);
      if (V.cols() > 0) X -= V * (V.transpose() * X);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-12);
    const int rank = static_cast<int>(qr.rank());
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(r, std::min<int>(X.cols(), r));
    return Eigen::MatrixXd(Q.leftCols(rank));
  };

  Eigen::MatrixXd X = orthogonalize(random_block(block));
  double best_residual = kInf;
  // Convergence is checked in the original-pencil metric: the support rows of
  // K u - lambda M u equal scale * (C w - theta w).
  const double inner_tol = 0.5 * opts.tol;

  while (true) {
    if (X.cols() > 0) {
      const int take = std::min<int>(X.cols(), max_basis - static_cast<int>(V.cols()));
      if (take > 0) {
        Eigen::MatrixXd X_take = X.leftCols(take);
        V.conservativeResize(r, V.cols() + take);
        V.rightCols(take) = X_take;
        CV.conservativeResize(r, CV.cols() + take);
        CV.rightCols(take) = pencil.C_sparse * X_take;
      }
    }
    if (V.cols() == 0) throw numeric_error("eigensolver could not build a search space");

    Eigen::MatrixXd H = V.transpose() * CV;
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
    if (eig.info() != Eigen::Success) throw numeric_error("Rayleigh-Ritz eigensolver failed");

    const int have = std::min<int>(wanted, eig.eigenvalues().size());
    bool converged = have == wanted;
    double worst = 0.0;
    for (int j = 0; j < have; ++j) {
      const double theta = eig.eigenvalues()[j];
      const Eigen::VectorXd z = eig.eigenvectors().col(j);
      const double resid = pencil.max_scale * (CV * z - theta * (V * z)).norm();
      worst = std::max(worst, resid);
      if (resid > inner_tol * (pencil.norm_K + std::abs(theta) * pencil.max_mass))
        converged = false;
    }
    best_residual = std::min(best_residual, worst);

    if (converged) {
      out.values = eig.eigenvalues().head(wanted);
      clamp_spectrum(out.values, pencil.norm_C);
      out.vectors = V * eig.eigenvectors().leftCols(wanted);
      return out;
    }
    if (V.cols() >= max_basis)
      throw numeric_error("eigensolver did not converge (best residual " +
                          std::to_string(best_residual) + ")");

    Eigen::MatrixXd Y = factor.solve(X);
    if (!Y.allFinite()) throw numeric_error("shift-invert solve failed");
    X = orthogonalize(std::move(Y));
    if (X.cols() == 0) {
      // Krylov space exhausted; restart with fresh random directions.
      X = orthogonalize(random_block(block));
      if (X.cols() == 0) {
        if (V.cols() >= dim_free) continue;  // full space reached; final Ritz pass decides
        throw numeric_error("eigensolver stalled (best residual " +
                            std::to_string(best_residual) + ")");
      }
    }
  }
}

}  // namespace

int MassMatrix::rank() const {
  int count = 0;
  for (int i = 0; i < diag.size(); ++i)
    if (diag[i] > 0.0) ++count;
  return count;
}

std::vector<int> MassMatrix::support() const {
  std::vector<int> result;
  for (int i = 0; i < diag.size(); ++i)
    if (diag[i] > 0.0) result.push_back(i);
  return result;
}

MassMatrix assemble_mass(const TriangleMesh& mesh, const DiscreteMeasure& mu) {
  if (mu.size() != mesh.vertex_count())
    throw input_error("measure size does not match vertex count");
  const auto masses = mu.vertex_masses();
  MassMatrix M;
  M.diag = Eigen::Map<const Eigen::VectorXd>(masses.data(), masses.size());
  return M;
}

double rayleigh(const Eigen::SparseMatrix<double>& K, const MassMatrix& M,
                const Eigen::VectorXd& u) {
  const double norm2 = u.squaredNorm();
  if (!(norm2 > 0.0)) throw input_error("rayleigh quotient of the zero function");
  double energy = u.dot(K * u);
  const double norm_K = sparse_inf_norm(K);
  if (energy < 0.0) {
    if (energy < -1e-10 * norm_K * norm2)
      throw numeric_error("stiffness form evaluated negative beyond the clamp threshold");
    energy = 0.0;
  }
  const double mass = u.dot(M.diag.cwiseProduct(u));
  if (mass > 0.0) return energy / mass;
  return energy > 1e-14 * norm_K * norm2 ? kInf : std::numeric_limits<double>::quiet_NaN();
}

SpectralResult solve_spectrum(const Eigen::SparseMatrix<double>& K, const MassMatrix& M,
                              int k_max, double tol) {
  if (k_max < 1) throw input_error("k_max must be at least 1");
  SolveOptions opts;
  opts.tol = tol;
  return solve_spectrum(K, M, k_max, opts);
}

SpectralResult solve_spectrum(const Eigen::SparseMatrix<double>& K, const MassMatrix& M,
                              int k_max, const SolveOptions& opts) {
  if (k_max < 0) throw input_error("k_max must be nonnegative");
  const int requested = k_max + 1;
  RestrictedPencil pencil = build_pencil(K, M);
  const int r = static_cast<int>(pencil.sup.size());

  Eigen::MatrixXd N(r, 0);
  if (opts.deflate_constants) N = kernel_basis(pencil);
  const int n_zero = static_cast<int>(N.cols());
  const int n_finite = std::min(requested, r);
  const int wanted = std::max(0, n_finite - n_zero);

  RitzSet ritz;
  if (pencil.dense_operator || opts.force_dense || r <= opts.dense_threshold) {
    if (r > 2000) throw numeric_error("dense restricted problem too large");
    const Eigen::MatrixXd C =
        pencil.dense_operator ? pencil.C_dense : Eigen::MatrixXd(pencil.C_sparse);
    ritz = dense_positive_spectrum(C, N, pencil.norm_C);
    ritz.values.conservativeResize(std::min<int>(wanted, ritz.values.size()));
    ritz.vectors.conservativeResize(r, ritz.values.size());
  } else {
    ritz = krylov_positive_spectrum(pencil, N, wanted, opts);
  }

  SpectralResult result;
  result.n_finite = std::min(n_finite, n_zero + static_cast<int>(ritz.values.size()));
  result.eigenvalues.assign(requested, kInf);
  result.eigenfunctions.resize(pencil.n_global, result.n_finite);
  result.residuals.assign(result.n_finite, 0.0);

  int col = 0;
  if (opts.deflate_constants) {
    for (int c = 0; c < n_zero && col < result.n_finite; ++c, ++col) {
      result.eigenvalues[col] = 0.0;
      Eigen::VectorXd w = N.col(c);
      result.eigenfunctions.col(col) = pencil.extend(w);
    }
  }
  for (int j = 0; j < ritz.values.size() && col < result.n_finite; ++j, ++col) {
    result.eigenvalues[col] = ritz.values[j];
    result.eigenfunctions.col(col) = pencil.extend(ritz.vectors.col(j));
  }

  for (int j = 0; j < result.n_finite; ++j) {
    const Eigen::VectorXd u = result.eigenfunctions.col(j);
    result.residuals[j] =
        (K * u - result.eigenvalues[j] * M.diag.cwiseProduct(u)).norm();
  }
  return result;
}

SpectralResult solve_spectrum_dense(const Eigen::SparseMatrix<double>& K, const MassMatrix& M,
                                    int k_max) {
  SolveOptions opts;
  opts.force_dense = true;
  return solve_spectrum(K, M, k_max, opts);
}

Eigenspace eigenspace(const SpectralResult& result, int k, double cluster_tol) {
  if (k < 0 || k >= result.n_finite)
    throw input_error("eigenspace index beyond the computed finite spectrum");
  const double lambda = result.eigenvalues[k];
  const double tol = cluster_tol * std::max(1.0, std::abs(lambda));
  int lo = k, hi = k;
  while (lo > 0 && std::abs(result.eigenvalues[lo - 1] - lambda) <= tol) --lo;
  while (hi + 1 < result.n_finite && std::abs(result.eigenvalues[hi + 1] - lambda) <= tol) ++hi;
  if (hi == result.n_finite - 1 &&
      static_cast<int>(result.eigenvalues.size()) == result.n_finite)
    throw numeric_error("eigenvalue cluster may extend beyond the computed range; increase k_max");
  Eigenspace space;
  space.k = k;
  space.lambda = lambda;
  space.cluster_tolerance = cluster_tol;
  space.multiplicity = hi - lo + 1;
  space.basis = result.eigenfunctions.middleCols(lo, space.multiplicity);
  return space;
}

double weak_eigen_identity_residual(const Eigen::SparseMatrix<double>& K, const MassMatrix& M,
                                    const SpectralResult& result, int k) {
  if (k < 0 || k >= result.n_finite)
    throw input_error("residual requested beyond the computed finite spectrum");
  const Eigen::VectorXd u = result.eigenfunctions.col(k);
  const Eigen::VectorXd r = K * u - result.eigenvalues[k] * M.diag.cwiseProduct(u);
  return r.lpNorm<Eigen::Infinity>() / u.norm();
}

SemicontinuityReport semicontinuity_probe(const TriangleMesh& mesh,
                                          const Eigen::SparseMatrix<double>& K,
                                          const std::vector<DiscreteMeasure>& measures,
                                          const DiscreteMeasure& limit, int k, double tol) {
  SemicontinuityReport report;
  for (const auto& mu : measures) {
    if (!mu.is_probability()) throw input_error("semicontinuity probe requires probability measures");
    const auto result = solve_spectrum(K, assemble_mass(mesh, mu), std::max(1, k), 1e-9);
    report.lambdas.push_back(result.eigenvalues[k]);
  }
  if (!limit.is_probability()) throw input_error("semicontinuity probe requires probability measures");
  const auto result = solve_spectrum(K, assemble_mass(mesh, limit), std::max(1, k), 1e-9);
  report.lambda_limit = result.eigenvalues[k];

  const size_t tail = std::max<size_t>(1, report.lambdas.size() / 4);
  report.limsup_estimate = -kInf;
  for (size_t i = report.lambdas.size() - tail; i < report.lambdas.size(); ++i)
    report.limsup_estimate = std::max(report.limsup_estimate, report.lambdas[i]);
  report.upper_semicontinuous = report.limsup_estimate <= report.lambda_limit + tol;
  return report;
}

}  // namespace ceig
