#include "ceig/bounds.hpp"

#include "ceig/errors.hpp"
#include "ceig/spectrum.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ceig {

namespace {

Eigen::Vector3d mobius_point(const Eigen::Vector3d& a, const Eigen::Vector3d& x) {
  const double s = a.squaredNorm();
  const double t = a.dot(x);
  const Eigen::Vector3d y = ((1.0 - s) * x + 2.0 * (1.0 + t) * a) / (1.0 + 2.0 * t + s);
  return y.normalized();
}

Eigen::Vector3d center_of_mass(const Eigen::Vector3d& a, const Eigen::MatrixX3d& points,
                               const Eigen::VectorXd& masses) {
  Eigen::Vector3d total = Eigen::Vector3d::Zero();
  for (int v = 0; v < points.rows(); ++v)
    total += masses[v] * mobius_point(a, points.row(v).transpose());
  return total;
}

// Damped Newton step on the center-of-mass map, trust region |a| < 1.
bool newton_balance(const Eigen::MatrixX3d& points, const Eigen::VectorXd& masses,
                    Eigen::Vector3d& a, double tol, int max_iterations, int& iterations) {
  const double mass_total = masses.sum();
  Eigen::Vector3d f = center_of_mass(a, points, masses);
  for (int it = 0; it < max_iterations; ++it) {
    ++iterations;
    if (f.lpNorm<Eigen::Infinity>() <= tol * mass_total) return true;
    Eigen::Matrix3d J;
    const double h = 1e-6;
    for (int c = 0; c < 3; ++c) {
      Eigen::Vector3d ap = a, am = a;
      ap[c] += h;
      am[c] -= h;
      if (ap.norm() >= 1.0) ap = ap.normalized() * (1.0 - 1e-9);
      if (am.norm() >= 1.0) am = am.normalized() * (1.0 - 1e-9);
      J.col(c) = (center_of_mass(ap, points, masses) - center_of_mass(am, points, masses)) /
                 (ap[c] - am[c]);
    }
    Eigen::FullPivLU<Eigen::Matrix3d> lu(J);
    if (!lu.isInvertible()) return false;
    const Eigen::Vector3d step = lu.solve(-f);
    double alpha = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 30; ++halving) {
      Eigen::Vector3d trial = a + alpha * step;
      if (trial.norm() >= 0.9999995) trial = trial.normalized() * 0.9999995;
      const Eigen::Vector3d f_trial = center_of_mass(trial, points, masses);
      if (f_trial.norm() < f.norm()) {
        a = trial;
        f = f_trial;
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) return false;
  }
  return f.lpNorm<Eigen::Infinity>() <= tol * mass_total;
}

}  // namespace

Eigen::MatrixX3d mobius_apply(const MobiusParameter& param, const Eigen::MatrixX3d& points) {
  if (param.a.norm() >= 1.0) throw input_error("Mobius parameter must lie in the open unit ball");
  for (int v = 0; v < points.rows(); ++v)
    if (std::abs(points.row(v).norm() - 1.0) > 1e-10)
      throw input_error("Mobius input point " + std::to_string(v) + " is not on the unit sphere");
  Eigen::MatrixX3d out(points.rows(), 3);
  for (int v = 0; v < points.rows(); ++v)
    out.row(v) = mobius_point(param.a, points.row(v).transpose()).transpose();
  return out;
}

BalanceResult hersch_balance(const Eigen::MatrixX3d& sphere_map, const DiscreteMeasure& mu) {
  if (mu.has_atoms())
    throw input_error("Hersch balancing requires a continuous (non-atomic) measure");
  if (!mu.is_probability(1e-9))
    throw input_error("Hersch balancing requires a probability measure");
  if (sphere_map.rows() != mu.size()) throw input_error("sphere map size mismatch");
  const auto masses_std = mu.vertex_masses();
  const Eigen::VectorXd masses =
      Eigen::Map<const Eigen::VectorXd>(masses_std.data(), masses_std.size());

  const double tol = 1e-9;
  BalanceResult result;
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  bool ok = newton_balance(sphere_map, masses, a, tol, 200, result.iterations);

  if (!ok) {
    // Homotopy in mass interpolation from the uniform vertex distribution.
    const Eigen::VectorXd uniform =
        Eigen::VectorXd::Constant(masses.size(), masses.sum() / masses.size());
    a.setZero();
    ok = true;
    for (double s : {0.25, 0.5, 0.75, 0.9, 1.0}) {
      const Eigen::VectorXd blend = (1.0 - s) * uniform + s * masses;
      if (!newton_balance(sphere_map, blend, a, tol, 200, result.iterations)) {
        ok = false;
        break;
      }
    }
  }

  if (!ok) {
    const double max_mass = *std::max_element(masses_std.begin(), masses_std.end());
    std::ostringstream msg;
    if (max_mass >= 1.0 - 1e-3)
      msg << "near-Dirac measure: balancing point escapes to the boundary (achieved |a| = "
          << a.norm() << ")";
    else
      msg << "Hersch balancing did not converge (achieved |a| = " << a.norm() << ")";
    throw numeric_error(msg.str());
  }

  result.parameter.a = a;
  result.residual = center_of_mass(a, sphere_map, masses).lpNorm<Eigen::Infinity>();
  return result;
}

HerschBoundReport hersch_bound(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K,
                               const DiscreteMeasure& mu, const Eigen::MatrixX3d& sphere_map,
                               int degree, double mesh_tol) {
  if (degree < 1) throw input_error("sphere map degree must be positive");
  const DiscreteMeasure prob = mu.normalized();
  const BalanceResult balance = hersch_balance(sphere_map, prob);
  if (balance.residual > 1e-6)
    throw numeric_error("unbalanced sphere map: center-of-mass residual " +
                        std::to_string(balance.residual));

  const Eigen::MatrixX3d mapped = mobius_apply(balance.parameter, sphere_map);
  const auto masses_std = mu.vertex_masses();
  const Eigen::VectorXd masses =
      Eigen::Map<const Eigen::VectorXd>(masses_std.data(), masses_std.size());
  const double mu_total = masses.sum();

  double energy = 0.0, mass_sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd coord = mapped.col(i);
    coord.array() -= masses.dot(coord) / mu_total;
    energy += coord.dot(K * coord);
    mass_sum += masses.dot(coord.cwiseProduct(coord));
  }

  HerschBoundReport report;
  report.parameter = balance.parameter;
  report.balance_residual = balance.residual;
  report.test_energy = energy;
  report.ceiling = 8.0 * M_PI * degree;
  if (!(mass_sum > 0.0)) throw numeric_error("degenerate test-function mass");
  report.bound = energy / mass_sum * mu_total;
  if (report.bound > report.ceiling * (1.0 + mesh_tol))
    throw numeric_error("discrete Hersch bound exceeds the conformal-energy ceiling");
  return report;
}

AnnulusSystem gy_annuli(const TriangleMesh& mesh, const DiscreteMeasure& mu, int k) {
  if (k < 1) throw input_error("gy_annuli requires k >= 1");
  if (mu.has_atoms())
    throw input_error("the annulus decomposition requires a continuous Radon measure");
  const auto masses = mu.vertex_masses();
  const double total = mu.total_mass();
  const int n = mesh.vertex_count();
  const auto graph = build_vertex_graph(mesh);

  // Candidate centers: a farthest-point net plus the heaviest vertices.
  std::vector<int> centers = farthest_point_sample(mesh, std::min(64, n));
  {
    std::vector<int> heavy(n);
    for (int v = 0; v < n; ++v) heavy[v] = v;
    std::sort(heavy.begin(), heavy.end(), [&](int a, int b) { return masses[a] > masses[b]; });
    for (int i = 0; i < std::min(8, n); ++i) centers.push_back(heavy[i]);
    std::sort(centers.begin(), centers.end());
    centers.erase(std::unique(centers.begin(), centers.end()), centers.end());
  }

  struct Candidate {
    int center;
    double r, R;
    Region inner, outer;
    double mass;
  };
  std::vector<Candidate> candidates;
  for (int center : centers) {
    const auto dist = graph_distances(graph, {center});
    double reach = 0.0;
    for (int v = 0; v < n; ++v)
      if (std::isfinite(dist[v])) reach = std::max(reach, dist[v]);
    if (!(reach > 0.0)) continue;
    std::vector<std::pair<double, double>> radii;
    for (double rho = reach / 2.0; rho > 1e-6 * reach; rho /= 2.0) {
      radii.emplace_back(0.0, rho);
      radii.emplace_back(rho / 2.0, rho);
    }
    for (const auto& [r, R] : radii) {
      Candidate c;
      c.center = center;
      c.r = r;
      c.R = R;
      c.inner.kind = c.outer.kind = RegionKind::annulus;
      c.inner.center = c.outer.center = center;
      c.inner.r = r;
      c.inner.R = R;
      c.outer.r = r / 2.0;
      c.outer.R = 2.0 * R;
      c.mass = 0.0;
      for (int v = 0; v < n; ++v) {
        if (dist[v] >= r && dist[v] < R) {
          c.inner.vertices.push_back(v);
          c.mass += masses[v];
        }
        if (dist[v] >= r / 2.0 && dist[v] < 2.0 * R) c.outer.vertices.push_back(v);
      }
      if (c.mass > 0.0 && c.outer.size() < n) candidates.push_back(std::move(c));
    }
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.mass != b.mass) return a.mass > b.mass;
    if (a.center != b.center) return a.center < b.center;
    return a.R < b.R;
  });

  // Greedy selection; doubled annuli must be disjoint and non-adjacent so the
  // equilibrium potentials have non-interacting supports.
  std::vector<char> blocked(n, 0);
  AnnulusSystem system;
  for (const auto& c : candidates) {
    if (static_cast<int>(system.annuli.size()) >= k + 1) break;
    bool clash = false;
    for (int v : c.outer.vertices)
      if (blocked[v]) {
        clash = true;
        break;
      }
    if (clash) continue;
    for (int v : c.outer.vertices) {
      blocked[v] = 1;
      for (int e = graph.offsets[v]; e < graph.offsets[v + 1]; ++e)
        blocked[graph.neighbors[e]] = 1;
    }
    AnnulusDescriptor desc;
    desc.center = c.center;
    desc.r = c.r;
    desc.R = c.R;
    desc.inner = c.inner;
    desc.outer = c.outer;
    desc.mass = c.mass;
    system.annuli.push_back(std::move(desc));
  }

  if (static_cast<int>(system.annuli.size()) < k + 1)
    throw numeric_error("mesh too coarse to separate " + std::to_string(k + 1) +
                        " disjoint doubled annuli");

  system.v = std::numeric_limits<double>::infinity();
  for (const auto& a : system.annuli) system.v = std::min(system.v, a.mass);
  system.c_eff = system.v * k / total;
  return system;
}

double capacitor_bound(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K,
                       const DiscreteMeasure& mu, AnnulusSystem& system, int k, double tol) {
  if (static_cast<int>(system.annuli.size()) < k + 1)
    throw input_error("annulus system does not cover k+1 capacitors");
  if (!(system.v > 0.0)) throw input_error("annulus system has zero minimum mass");

  system.kappa = 0.0;
  for (auto& annulus : system.annuli) {
    const auto report = cap(mesh, K, Capacitor{annulus.inner, annulus.outer});
    annulus.capacity = report.cap_value;
    system.kappa = std::max(system.kappa, annulus.capacity);
  }
  const double bound = system.kappa / system.v;

  const auto spectrum = solve_spectrum(K, assemble_mass(mesh, mu), k, SolveOptions{});
  const double lambda_k = spectrum.eigenvalues[k];
  if (std::isfinite(lambda_k) && lambda_k > bound * (1.0 + tol))
    throw numeric_error("capacitor bound violated: lambda_k = " + std::to_string(lambda_k) +
                        " > " + std::to_string(bound));
  return bound;
}

}  // namespace ceig
