#include "ceig/capacity.hpp"

#include "ceig/errors.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

namespace ceig {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::SparseMatrix<double> submatrix(const Eigen::SparseMatrix<double>& A,
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

// Every connected piece of the free set must touch a constrained vertex,
// otherwise the Dirichlet solve is singular. Returns a witness vertex of the
// first isolated piece, or -1.
int isolated_free_component(const Eigen::SparseMatrix<double>& K, const std::vector<int>& free,
                            const std::vector<char>& constrained) {
  std::vector<char> is_free(K.rows(), 0);
  for (int v : free) is_free[v] = 1;
  std::vector<char> visited(K.rows(), 0);
  for (int seed : free) {
    if (visited[seed]) continue;
    bool touches = false;
    std::vector<int> piece;
    std::queue<int> frontier;
    frontier.push(seed);
    visited[seed] = 1;
    while (!frontier.empty()) {
      const int v = frontier.front();
      frontier.pop();
      piece.push_back(v);
      for (Eigen::SparseMatrix<double>::InnerIterator it(K, v); it; ++it) {
        const int u = static_cast<int>(it.row());
        if (constrained[u]) touches = true;
        if (is_free[u] && !visited[u]) {
          visited[u] = 1;
          frontier.push(u);
        }
      }
    }
    if (!touches) return piece.front();
  }
  return -1;
}

// Minimize u^T A u with u = values on the constrained set, free elsewhere.
Eigen::VectorXd constrained_minimum(const Eigen::SparseMatrix<double>& A,
                                    const std::vector<char>& constrained,
                                    const Eigen::VectorXd& boundary_values) {
  const int n = static_cast<int>(A.rows());
  std::vector<int> free;
  for (int v = 0; v < n; ++v)
    if (!constrained[v]) free.push_back(v);
  Eigen::VectorXd u = boundary_values;
  if (free.empty()) return u;

  const int witness = isolated_free_component(A, free, constrained);
  if (witness >= 0)
    throw numeric_error("singular system: free component around vertex " +
                        std::to_string(witness) + " touches no constraint");

  std::vector<int> all(n);
  for (int v = 0; v < n; ++v) all[v] = v;
  Eigen::SparseMatrix<double> A_ff = submatrix(A, free, free);
  Eigen::SparseMatrix<double> A_fc = submatrix(A, free, all);
  Eigen::VectorXd rhs = -(A_fc * boundary_values);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A_ff);
  if (solver.info() != Eigen::Success) throw numeric_error("Dirichlet factorization failed");
  Eigen::VectorXd u_f = solver.solve(rhs);
  if (!u_f.allFinite()) throw numeric_error("Dirichlet solve failed");
  for (size_t i = 0; i < free.size(); ++i) u[free[i]] = u_f[static_cast<int>(i)];
  return u;
}

std::vector<int> region_complement(int n, const Region& region) {
  std::vector<int> complement;
  auto it = region.vertices.begin();
  for (int v = 0; v < n; ++v) {
    if (it != region.vertices.end() && *it == v)
      ++it;
    else
      complement.push_back(v);
  }
  return complement;
}

Region superlevel_region(const Eigen::VectorXd& values, const std::vector<int>& domain,
                         double threshold) {
  std::vector<int> verts;
  for (int v : domain)
    if (values[v] >= threshold) verts.push_back(v);
  return make_region(std::move(verts));
}

}  // namespace

CapacityResult cap(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K,
                   const Capacitor& capacitor) {
  const int n = mesh.vertex_count();
  CapacityResult result;
  result.potential = Eigen::VectorXd::Zero(n);
  if (capacitor.F.empty()) return result;

  for (int v : capacitor.F.vertices)
    if (!capacitor.G.contains(v)) throw input_error("capacitor requires F inside G");
  const auto outside = region_complement(n, capacitor.G);
  if (outside.empty()) throw input_error("capacitor requires a nonempty complement of G");

  std::vector<char> constrained(n, 0);
  Eigen::VectorXd values = Eigen::VectorXd::Zero(n);
  for (int v : outside) constrained[v] = 1;
  for (int v : capacitor.F.vertices) {
    constrained[v] = 1;
    values[v] = 1.0;
  }
  result.potential = constrained_minimum(K, constrained, values);
  result.cap_value = std::max(0.0, result.potential.dot(K * result.potential));
  return result;
}

double capty(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K, const Region& F) {
  if (F.empty()) return 0.0;
  const int n = mesh.vertex_count();
  const auto areas = vertex_lumped_areas(mesh);
  Eigen::SparseMatrix<double> A = K;
  std::vector<Eigen::Triplet<double>> triplets;
  for (int v = 0; v < n; ++v) triplets.emplace_back(v, v, areas[v]);
  Eigen::SparseMatrix<double> Mg(n, n);
  Mg.setFromTriplets(triplets.begin(), triplets.end());
  A += Mg;
  std::vector<char> constrained(n, 0);
  Eigen::VectorXd values = Eigen::VectorXd::Zero(n);
  for (int v : F.vertices) {
    constrained[v] = 1;
    values[v] = 1.0;
  }
  const Eigen::VectorXd u = constrained_minimum(A, constrained, values);
  return u.dot(A * u);
}

double fundamental_tone(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K,
                        const DiscreteMeasure& mu, const Region& omega) {
  const int n = mesh.vertex_count();
  if (omega.empty()) return kInf;
  if (omega.size() >= n) throw input_error("fundamental tone requires a proper subdomain");
  if (mu.size() != n) throw input_error("measure size does not match vertex count");

  const auto masses = mu.vertex_masses();
  double omega_mass = 0.0;
  for (int v : omega.vertices) omega_mass += masses[v];
  if (!(omega_mass > 0.0)) return kInf;

  Eigen::SparseMatrix<double> K_omega = submatrix(K, omega.vertices, omega.vertices);
  MassMatrix M_omega;
  M_omega.diag.resize(omega.size());
  for (int i = 0; i < omega.size(); ++i) M_omega.diag[i] = masses[omega.vertices[i]];

  SolveOptions opts;
  opts.deflate_constants = false;
  const auto result = solve_spectrum(K_omega, M_omega, 0, opts);
  return result.eigenvalues[0];
}

IsocapacityResult isocapacity_constant(const TriangleMesh& mesh,
                                       const Eigen::SparseMatrix<double>& K,
                                       const DiscreteMeasure& mu, const Region& omega) {
  const int n = mesh.vertex_count();
  if (omega.empty()) throw input_error("isocapacity constant of an empty domain");
  if (omega.size() >= n) throw input_error("isocapacity constant requires a proper subdomain");

  const auto masses = mu.vertex_masses();
  IsocapacityResult result;

  auto evaluate = [&](Region F, const std::string& kind) {
    if (F.empty()) return;
    IsocapacityCandidate candidate;
    candidate.kind = kind;
    candidate.size = F.size();
    for (int v : F.vertices) candidate.mass += masses[v];
    if (!(candidate.mass > 0.0)) return;
    try {
      candidate.capacity = cap(mesh, K, Capacitor{F, omega}).cap_value;
    } catch (const numeric_error&) {
      return;  // isolated pieces inside omega: skip this candidate
    }
    if (!(candidate.capacity > 0.0)) return;
    candidate.ratio = candidate.mass / candidate.capacity;
    result.beta_lower = std::max(result.beta_lower, candidate.ratio);
    result.candidate_log.push_back(std::move(candidate));
  };

  // Heaviest vertex (atom detection) and sampled graph balls inside omega.
  int heaviest = omega.vertices.front();
  for (int v : omega.vertices)
    if (masses[v] > masses[heaviest]) heaviest = v;
  evaluate(make_region({heaviest}), "vertex:" + std::to_string(heaviest));

  const auto graph = build_vertex_graph(mesh);
  std::vector<int> centers{heaviest};
  for (int i = 0; i < 4; ++i) centers.push_back(omega.vertices[(omega.size() * i) / 5]);
  std::sort(centers.begin(), centers.end());
  centers.erase(std::unique(centers.begin(), centers.end()), centers.end());
  for (int center : centers) {
    const auto dist = graph_distances(graph, {center});
    double reach = 0.0;
    for (int v : omega.vertices)
      if (std::isfinite(dist[v])) reach = std::max(reach, dist[v]);
    for (double frac : {0.125, 0.25, 0.5, 1.0}) {
      Region ball = graph_ball(mesh, graph, center, frac * reach + 1e-12);
      std::vector<int> inside;
      for (int v : ball.vertices)
        if (omega.contains(v)) inside.push_back(v);
      evaluate(make_region(std::move(inside)),
               "ball:" + std::to_string(center) + ":" + std::to_string(frac));
    }
  }

  // Superlevel sets of the tone-minimizing eigenfunction.
  const auto tone_eigenfunction = [&]() -> Eigen::VectorXd {
    Eigen::SparseMatrix<double> K_omega = submatrix(K, omega.vertices, omega.vertices);
    MassMatrix M_omega;
    M_omega.diag.resize(omega.size());
    for (int i = 0; i < omega.size(); ++i) M_omega.diag[i] = masses[omega.vertices[i]];
    if (!(M_omega.diag.sum() > 0.0)) return Eigen::VectorXd::Zero(n);
    SolveOptions opts;
    opts.deflate_constants = false;
    const auto sol = solve_spectrum(K_omega, M_omega, 0, opts);
    Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
    if (sol.n_finite > 0)
      for (int i = 0; i < omega.size(); ++i) full[omega.vertices[i]] = sol.eigenfunctions(i, 0);
    return full;
  }();
  const double peak = tone_eigenfunction.cwiseAbs().maxCoeff();
  if (peak > 0.0) {
    const Eigen::VectorXd abs_eigen = tone_eigenfunction.cwiseAbs();
    for (double q : {0.25, 0.5, 0.75})
      evaluate(superlevel_region(abs_eigen, omega.vertices, q * peak),
               "eigen-superlevel:" + std::to_string(q));
  }

  // Superlevel sets of the equilibrium potential seeded at the heaviest vertex.
  {
    Region seed = make_region({heaviest});
    try {
      const auto report = cap(mesh, K, Capacitor{seed, omega});
      for (double q : {0.25, 0.5, 0.75})
        evaluate(superlevel_region(report.potential, omega.vertices, q),
                 "potential-superlevel:" + std::to_string(q));
    } catch (const numeric_error&) {
    }
  }

  if (result.candidate_log.empty())
    throw input_error("no valid isocapacity candidate: domain too small");
  return result;
}

MazjaBracket mazja_bracket(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K,
                           const DiscreteMeasure& mu, const Region& omega, double tol) {
  MazjaBracket bracket;
  bracket.tone = fundamental_tone(mesh, K, mu, omega);
  double omega_mass = 0.0;
  const auto masses = mu.vertex_masses();
  for (int v : omega.vertices) omega_mass += masses[v];
  if (!(omega_mass > 0.0)) {
    bracket.lhs = 0.0;
    bracket.rhs = kInf;
    bracket.pass = true;  // +inf tone against an empty bracket
    return bracket;
  }
  const auto iso = isocapacity_constant(mesh, K, mu, omega);
  bracket.lhs = iso.beta_lower > 0.0 ? 1.0 / (4.0 * iso.beta_lower) : kInf;
  bracket.rhs = iso.beta_lower > 0.0 ? 1.0 / iso.beta_lower : kInf;
  bracket.pass = bracket.tone <= bracket.rhs * (1.0 + tol);
  return bracket;
}

ToneBracket tone_bracket(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K,
                         const DiscreteMeasure& mu, const std::vector<Region>& omegas,
                         double tol) {
  if (!mu.is_probability()) throw input_error("tone bracket requires a probability measure");
  const auto masses = mu.vertex_masses();
  for (const auto& omega : omegas) {
    double mass = 0.0;
    for (int v : omega.vertices) mass += masses[v];
    if (!(mass > 0.0 && mass <= 0.5 + 1e-12))
      throw input_error("tone bracket requires 0 < mu(omega) <= 1/2 for every candidate");
  }

  const MassMatrix M = assemble_mass(mesh, mu);
  const auto spectrum = solve_spectrum(K, M, 1, SolveOptions{});
  const double lambda1 = spectrum.eigenvalues[1];

  ToneBracket bracket;
  bracket.lambda1 = lambda1;
  bracket.inf_tone = kInf;
  for (const auto& omega : omegas)
    bracket.inf_tone = std::min(bracket.inf_tone, fundamental_tone(mesh, K, mu, omega));

  // Median-split superlevel domains of the first eigenfunction; these witness
  // the lemma's left inequality on any mesh.
  if (spectrum.n_finite > 1) {
    const Eigen::VectorXd u = spectrum.eigenfunctions.col(1);
    std::vector<int> order(mesh.vertex_count());
    for (int v = 0; v < mesh.vertex_count(); ++v) order[v] = v;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return u[a] < u[b]; });
    double cumulative = 0.0;
    double median = u[order.back()];
    for (int v : order) {
      cumulative += masses[v];
      if (cumulative >= 0.5 * M.total()) {
        median = u[v];
        break;
      }
    }
    std::vector<int> above, below;
    for (int v = 0; v < mesh.vertex_count(); ++v) {
      if (u[v] > median) above.push_back(v);
      if (u[v] < median) below.push_back(v);
    }
    for (const auto& side : {above, below}) {
      if (side.empty()) continue;
      const Region omega = make_region(side);
      if (omega.size() >= mesh.vertex_count()) continue;
      bracket.inf_tone = std::min(bracket.inf_tone, fundamental_tone(mesh, K, mu, omega));
    }
  }

  bracket.factor = bracket.inf_tone > 0.0 ? lambda1 / bracket.inf_tone : 0.0;
  bracket.pass = bracket.inf_tone <= lambda1 * (1.0 + tol);
  return bracket;
}

}  // namespace ceig
