#include "ceig/variation.hpp"

#include "ceig/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ceig {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd center_phi(const MassMatrix& M, Eigen::VectorXd phi) {
  const double total = M.total();
  if (!(total > 0.0)) throw input_error("measure has zero total mass");
  const double mean = M.diag.dot(phi) / total;
  phi.array() -= mean;
  return phi;
}

// Gram representation of the form u -> int u^2 phi dmu on an M-orthonormal basis.
Eigen::MatrixXd form_matrix(const Eigenspace& space, const MassMatrix& M,
                            const Eigen::VectorXd& phi) {
  const int m = space.multiplicity;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
  for (int v = 0; v < M.size(); ++v) {
    const double w = M.diag[v] * phi[v];
    if (w == 0.0) continue;
    const auto f = space.basis.row(v);
    G.noalias() += w * (f.transpose() * f);
  }
  return 0.5 * (G + G.transpose()).eval();
}

struct ClusterSolve {
  SpectralResult result;
  Eigenspace space;
};

ClusterSolve solve_cluster(const Eigen::SparseMatrix<double>& K, const MassMatrix& M, int k,
                           double cluster_tol) {
  int k_max = k + 8;
  for (int attempt = 0;; ++attempt) {
    SpectralResult result = solve_spectrum(K, M, k_max, SolveOptions{});
    try {
      Eigenspace space = eigenspace(result, k, cluster_tol);
      return {std::move(result), std::move(space)};
    } catch (const numeric_error&) {
      if (attempt >= 2) throw;
      k_max = 2 * k_max + 8;
    }
  }
}

// True when the cluster at k is separated from its neighbors by less than a
// safety factor of the cluster tolerance.
bool cluster_merge_risk(const SpectralResult& result, const Eigenspace& space, int k,
                        double cluster_tol) {
  const double lambda = space.lambda;
  const double tol = cluster_tol * std::max(1.0, std::abs(lambda));
  int lo = k, hi = k;
  while (lo > 0 && std::abs(result.eigenvalues[lo - 1] - lambda) <= tol) --lo;
  while (hi + 1 < result.n_finite && std::abs(result.eigenvalues[hi + 1] - lambda) <= tol) ++hi;
  if (lo > 0 && result.eigenvalues[lo] - result.eigenvalues[lo - 1] <= 10.0 * tol) return true;
  if (hi + 1 < result.n_finite && result.eigenvalues[hi + 1] - result.eigenvalues[hi] <= 10.0 * tol)
    return true;
  return false;
}

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& A) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-12);
  const int rank = static_cast<int>(qr.rank());
  Eigen::MatrixXd Q = qr.householderQ() *
                      Eigen::MatrixXd::Identity(A.rows(), std::min<int>(A.cols(), A.rows()));
  return Q.leftCols(rank);
}

// Projection onto {|x|_inf <= 1, sum_v m_v x_v = 0, x = 0 on forbidden}.
Eigen::VectorXd project_direction(const Eigen::VectorXd& z, const Eigen::VectorXd& masses,
                                  const std::vector<char>& forbidden) {
  auto clipped = [&](double tau) {
    Eigen::VectorXd x(z.size());
    for (int v = 0; v < z.size(); ++v) {
      if (!forbidden.empty() && forbidden[v]) {
        x[v] = 0.0;
        continue;
      }
      x[v] = std::clamp(z[v] - tau * masses[v], -1.0, 1.0);
    }
    return x;
  };
  auto mean_of = [&](const Eigen::VectorXd& x) { return masses.dot(x); };
  double lo = -1.0, hi = 1.0;
  while (mean_of(clipped(lo)) < 0.0) lo *= 2.0;
  while (mean_of(clipped(hi)) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_of(clipped(mid)) > 0.0 ? lo : hi) = mid;
  }
  return clipped(0.5 * (lo + hi));
}

}  // namespace

double l_phi(const Eigen::VectorXd& u, const MassMatrix& M, const Eigen::VectorXd& phi,
             double lam) {
  if (u.size() != M.size() || phi.size() != M.size())
    throw input_error("l_phi: size mismatch");
  const Eigen::VectorXd mu_u2 = M.diag.cwiseProduct(u).cwiseProduct(u);
  const double denom = mu_u2.sum();
  if (!(denom > 0.0)) throw input_error("l_phi: int u^2 dmu vanishes");
  return -lam * mu_u2.dot(phi) / denom;
}

DerivativePair derivatives_on_eigenspace(const Eigenspace& space, const MassMatrix& M,
                                         Eigen::VectorXd phi) {
  phi = center_phi(M, std::move(phi));
  const Eigen::MatrixXd G = form_matrix(space, M, phi);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
  if (eig.info() != Eigen::Success) throw numeric_error("form eigensolver failed");
  DerivativePair pair;
  pair.left = -space.lambda * eig.eigenvalues().minCoeff();
  pair.right = -space.lambda * eig.eigenvalues().maxCoeff();
  return pair;
}

DerivativePair one_sided_derivatives(const TriangleMesh& mesh,
                                     const Eigen::SparseMatrix<double>& K,
                                     const DiscreteMeasure& mu, const Eigen::VectorXd& phi, int k,
                                     double cluster_tol) {
  const MassMatrix M = assemble_mass(mesh, mu);
  auto solved = solve_cluster(K, M, k, cluster_tol);
  return derivatives_on_eigenspace(solved.space, M, phi);
}

ProjectionGapReport projection_gap(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K,
                                   const DiscreteMeasure& mu, const DiscreteMeasure& mu2, int k,
                                   double cluster_tol) {
  const auto dist = integral_distance(mu.normalized(), mu2.normalized());
  if (!std::isfinite(dist.d)) throw input_error("projection gap requires a common support");

  const MassMatrix M = assemble_mass(mesh, mu);
  const MassMatrix M2 = assemble_mass(mesh, mu2);
  auto first = solve_cluster(K, M, k, cluster_tol);
  auto second = solve_cluster(K, M2, k, cluster_tol);

  const Eigen::VectorXd scale = M.diag.cwiseSqrt();
  const Eigen::MatrixXd U = scale.asDiagonal() * first.space.basis;
  const Eigen::MatrixXd V = orthonormal_columns(scale.asDiagonal() * second.space.basis);
  Eigen::MatrixXd W(U.rows(), U.cols() + V.cols());
  W << U, V;
  W = orthonormal_columns(W);

  const Eigen::MatrixXd WU = W.transpose() * U;
  const Eigen::MatrixXd WV = W.transpose() * V;
  Eigen::MatrixXd A = WU * WU.transpose() - WV * WV.transpose();
  A = 0.5 * (A + A.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);

  ProjectionGapReport report;
  report.gap = eig.eigenvalues().cwiseAbs().maxCoeff();
  report.delta = dist.delta;
  report.ratio = report.delta > 0.0 ? report.gap / report.delta : (report.gap > 0.0 ? kInf : 0.0);
  report.inconclusive = cluster_merge_risk(first.result, first.space, k, cluster_tol) ||
                        cluster_merge_risk(second.result, second.space, k, cluster_tol);
  return report;
}

ExtremalityCertificate extremality_certificate(const TriangleMesh& mesh,
                                               const Eigen::SparseMatrix<double>& K,
                                               const DiscreteMeasure& mu, int k, double tol,
                                               double cluster_tol) {
  const MassMatrix M = assemble_mass(mesh, mu);
  auto solved = solve_cluster(K, M, k, cluster_tol);
  const Eigen::MatrixXd& U = solved.space.basis;
  const int m = solved.space.multiplicity;
  const auto support = mu.support();
  if (support.empty()) throw input_error("certificate of a measure with empty support");

  // Least squares over symmetric matrices Q: sum_v w_v (f_v^T Q f_v - 1)^2,
  // constrained to the PSD cone. Symmetric coordinates with doubled
  // off-diagonal entries.
  const int s = m * (m + 1) / 2;
  auto pack_index = [m](int i, int j) { return i * m - i * (i - 1) / 2 + (j - i); };
  auto row_vector = [&](int v) {
    Eigen::VectorXd a(s);
    const auto f = U.row(v);
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) a[pack_index(i, j)] = (i == j ? 1.0 : 2.0) * f[i] * f[j];
    return a;
  };
  auto unpack = [&](const Eigen::VectorXd& x) {
    Eigen::MatrixXd Q(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) Q(i, j) = Q(j, i) = x[pack_index(i, j)];
    return Q;
  };
  auto pack = [&](const Eigen::MatrixXd& Q) {
    Eigen::VectorXd x(s);
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) x[pack_index(i, j)] = Q(i, j);
    return x;
  };

  const double total = M.total();
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(s, s);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s);
  for (int v : support) {
    const double w = M.diag[v] / total;
    const Eigen::VectorXd a = row_vector(v);
    normal.noalias() += w * (a * a.transpose());
    rhs.noalias() += w * a;
  }

  // Minimal-norm least-squares solution, then project to the PSD cone and
  // polish with projected gradient steps.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> normal_eig(normal);
  const double lead = normal_eig.eigenvalues().maxCoeff();
  Eigen::VectorXd inv_spectrum = normal_eig.eigenvalues();
  for (int i = 0; i < inv_spectrum.size(); ++i)
    inv_spectrum[i] = inv_spectrum[i] > 1e-12 * lead ? 1.0 / inv_spectrum[i] : 0.0;
  Eigen::VectorXd x = normal_eig.eigenvectors() *
                      inv_spectrum.asDiagonal() * (normal_eig.eigenvectors().transpose() * rhs);

  auto project_psd = [&](const Eigen::MatrixXd& Q) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q);
    Eigen::VectorXd d = eig.eigenvalues().cwiseMax(0.0);
    return Eigen::MatrixXd(eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose());
  };

  Eigen::MatrixXd Q = project_psd(unpack(x));
  const double step = 1.0 / std::max(lead, 1e-300);
  bool converged = false;
  for (int it = 0; it < 500; ++it) {
    const Eigen::VectorXd q = pack(Q);
    const Eigen::VectorXd grad = normal * q - rhs;
    const Eigen::MatrixXd next = project_psd(unpack(q - step * grad));
    const double move = (next - Q).norm();
    Q = next;
    if (move <= 1e-13 * std::max(1.0, Q.norm())) {
      converged = true;
      break;
    }
  }

  ExtremalityCertificate cert;
  cert.tolerance = tol;
  cert.eigenspace_dim = m;
  double sup_residual = 0.0;
  for (int v : support) {
    const auto f = U.row(v);
    sup_residual = std::max(sup_residual, std::abs((f * Q * f.transpose())(0, 0) - 1.0));
  }
  cert.residual = sup_residual;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> q_eig(Q);
  cert.coefficients = q_eig.eigenvalues().cwiseMax(0.0).reverse();
  if (!converged && sup_residual > tol)
    cert.verdict = Verdict::inconclusive;
  else
    cert.verdict = sup_residual <= tol ? Verdict::extremal : Verdict::non_extremal;
  return cert;
}

SeparatingDirection separating_direction_on_eigenspace(const Eigenspace& space,
                                                       const MassMatrix& M,
                                                       const std::vector<char>& forbidden,
                                                       int max_iterations) {
  const int n = M.size();
  const Eigen::MatrixXd& U = space.basis;
  const int m = space.multiplicity;

  Eigen::VectorXd masses = M.diag;
  if (!forbidden.empty())
    for (int v = 0; v < n; ++v)
      if (forbidden[v]) masses[v] = 0.0;

  // Initial direction from the equal-coefficient trace fit deficiency.
  Eigen::VectorXd trace_sq(n);
  for (int v = 0; v < n; ++v) trace_sq[v] = U.row(v).squaredNorm();
  const Eigen::VectorXd w_trace = masses.cwiseProduct(trace_sq);
  const double denom = w_trace.dot(trace_sq);
  const double fit = denom > 0.0 ? w_trace.sum() / denom : 0.0;
  Eigen::VectorXd phi =
      project_direction(Eigen::VectorXd::Ones(n) - fit * trace_sq, masses, forbidden);

  auto min_eig_pair = [&](const Eigen::VectorXd& p) {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
    for (int v = 0; v < n; ++v) {
      const double w = masses[v] * p[v];
      if (w == 0.0) continue;
      const auto f = U.row(v);
      G.noalias() += w * (f.transpose() * f);
    }
    G = 0.5 * (G + G.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    return std::make_pair(eig.eigenvalues()[0], Eigen::VectorXd(eig.eigenvectors().col(0)));
  };

  double grad_scale = 0.0;
  for (int v = 0; v < n; ++v) grad_scale = std::max(grad_scale, masses[v] * trace_sq[v]);
  const double eta0 = grad_scale > 0.0 ? 1.0 / grad_scale : 1.0;

  SeparatingDirection best;
  best.margin = -kInf;
  Eigen::VectorXd current = phi;
  for (int it = 0; it < max_iterations; ++it) {
    const auto [margin, y] = min_eig_pair(current);
    if (margin > best.margin) {
      best.margin = margin;
      best.phi = current;
    }
    const Eigen::VectorXd uy = U * y;
    const Eigen::VectorXd grad = masses.cwiseProduct(uy).cwiseProduct(uy);
    current = project_direction(current + (eta0 / std::sqrt(1.0 + it)) * grad, masses, forbidden);
  }
  const auto [final_margin, y_final] = min_eig_pair(current);
  (void)y_final;
  if (final_margin > best.margin) {
    best.margin = final_margin;
    best.phi = current;
  }
  if (!(best.margin > 0.0)) {
    best.phi.reset();
    best.inconclusive = true;
  }
  return best;
}

SeparatingDirection separating_direction(const TriangleMesh& mesh,
                                         const Eigen::SparseMatrix<double>& K,
                                         const DiscreteMeasure& mu, int k, double cert_tol,
                                         double cluster_tol) {
  const auto cert = extremality_certificate(mesh, K, mu, k, cert_tol, cluster_tol);
  if (cert.verdict == Verdict::extremal) return {};
  const MassMatrix M = assemble_mass(mesh, mu);
  auto solved = solve_cluster(K, M, k, cluster_tol);
  auto direction = separating_direction_on_eigenspace(solved.space, M);
  if (cert.verdict == Verdict::inconclusive) direction.inconclusive = true;
  return direction;
}

}  // namespace ceig
