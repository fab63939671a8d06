#include "ceig/optimize.hpp"

#include "ceig/errors.hpp"
#include "ceig/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ceig {

namespace {

// Alternating projection onto {density <= cap} and {total mass 1}; the pair of
// constraints is convex, so clip-then-renormalize converges to a fixed point.
void project_to_cap(std::vector<double>& weights, const std::vector<double>& areas, double cap,
                    int max_rounds) {
  for (int round = 0; round < max_rounds; ++round) {
    double total = 0.0;
    bool clipped = false;
    for (size_t v = 0; v < weights.size(); ++v) {
      const double limit = cap * areas[v];
      if (weights[v] > limit) {
        weights[v] = limit;
        clipped = true;
      }
      total += weights[v];
    }
    if (!(total > 0.0)) throw numeric_error("cap projection produced an empty measure");
    for (double& w : weights) w /= total;
    if (!clipped && std::abs(total - 1.0) <= 1e-14) return;
  }
  // Fixed point within the round budget; final pass enforces mass exactly.
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;
}

double max_density(const std::vector<double>& weights, const std::vector<double>& areas) {
  double result = 0.0;
  for (size_t v = 0; v < weights.size(); ++v)
    if (areas[v] > 0.0) result = std::max(result, weights[v] / areas[v]);
  return result;
}

std::vector<int> saturated_vertices(const std::vector<double>& weights,
                                    const std::vector<double>& areas, double cap, double eta) {
  std::vector<int> out;
  for (size_t v = 0; v < weights.size(); ++v)
    if (areas[v] > 0.0 && weights[v] / areas[v] >= (1.0 - eta) * cap)
      out.push_back(static_cast<int>(v));
  return out;
}

}  // namespace

MaximizerResult maximize_lambda1(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K,
                                 const DensityCapSchedule& schedule, uint64_t seed,
                                 const MaximizeOptions& opts) {
  const auto areas = vertex_lumped_areas(mesh);
  const double total_area = mesh.total_area();
  if (!schedule.caps.empty() && schedule.caps.front() * total_area < 1.0)
    throw input_error("cap below uniform density: C_1 * area < 1");
  DiscreteMeasure uniform;
  uniform.weights.resize(mesh.vertex_count());
  for (int v = 0; v < mesh.vertex_count(); ++v) uniform.weights[v] = areas[v] / total_area;
  uniform.support_kind = SupportKind::interior;
  return maximize_lambda1(mesh, K, schedule, seed, opts, uniform, 0);
}

MaximizerResult maximize_lambda1(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K,
                                 const DensityCapSchedule& schedule, uint64_t seed,
                                 const MaximizeOptions& opts, const DiscreteMeasure& start,
                                 size_t first_cap) {
  if (schedule.caps.empty()) throw input_error("empty density cap schedule");
  for (size_t i = 0; i + 1 < schedule.caps.size(); ++i)
    if (!(schedule.caps[i] < schedule.caps[i + 1]))
      throw input_error("density caps must be strictly increasing");
  if (!(schedule.caps.front() > 0.0)) throw input_error("density caps must be positive");
  if (first_cap >= schedule.caps.size()) throw input_error("first cap index out of range");
  if (connected_components(mesh) != 1) throw input_error("maximize_lambda1 requires a connected mesh");

  const auto areas = vertex_lumped_areas(mesh);
  const auto graph = build_vertex_graph(mesh);
  const double rho = opts.concentration_rho_edges * median_edge_length(mesh);

  MaximizerResult result;
  result.seed = seed;
  result.caps = schedule.caps;
  DiscreteMeasure current = start.normalized();

  auto lambda_of = [&](const DiscreteMeasure& mu) {
    SolveOptions sopts;
    sopts.tol = opts.solver_tol;
    sopts.seed = seed;
    const auto sol = solve_spectrum(K, assemble_mass(mesh, mu), 1, sopts);
    return sol.eigenvalues[1];
  };

  double last_lambda = 0.0;
  try {
    for (size_t cap_index = first_cap; cap_index < schedule.caps.size(); ++cap_index) {
      const double cap = schedule.caps[cap_index];
      project_to_cap(current.weights, areas, cap, opts.max_projection_rounds);
      double lambda = lambda_of(current);
      last_lambda = lambda;
      std::string stop = "budget";

      for (int iter = 0; iter < schedule.iterations_per_cap; ++iter) {
        const MassMatrix M = assemble_mass(mesh, current);
        const auto cert =
            extremality_certificate(mesh, K, current, 1, opts.certificate_tol, opts.cluster_tol);
        TraceRow row;
        row.cap_index = static_cast<int>(cap_index);
        row.iteration = iter;
        row.lambda1 = lambda;
        row.certificate_residual = cert.residual;
        row.concentration = max_ball_mass(mesh, graph, current, rho);
        result.trace.push_back(row);
        result.certificate = cert;

        if (cert.verdict == Verdict::extremal) {
          stop = "certificate";
          break;
        }

        // Cap-feasible separating direction: phi vanishes on the saturated set.
        std::vector<char> forbidden(mesh.vertex_count(), 0);
        for (int v : saturated_vertices(current.weights, areas, cap, opts.saturation_eta))
          forbidden[v] = 1;

        SolveOptions sopts;
        sopts.tol = opts.solver_tol;
        sopts.seed = seed;
        const auto sol = solve_spectrum(K, M, 9, sopts);
        const auto space = eigenspace(sol, 1, opts.cluster_tol);
        const auto direction = separating_direction_on_eigenspace(space, M, forbidden);
        if (!direction.phi || direction.margin <= opts.margin_tol) {
          stop = "margin";
          break;
        }

        // lambda ascends along the reversed separating direction.
        const Eigen::VectorXd ascent = -(*direction.phi);
        const auto family = make_deformation(current, ascent);
        const double expected_rate = lambda * direction.margin;
        double step = family.phi_inf_norm > 0.0 ? 0.1 / family.phi_inf_norm : 0.0;
        bool accepted = false;
        for (int halving = 0; halving < 25 && step > 0.0; ++halving, step *= 0.5) {
          DiscreteMeasure trial = deform(family, step);
          project_to_cap(trial.weights, areas, cap, opts.max_projection_rounds);
          const double lambda_trial = lambda_of(trial);
          if (lambda_trial >= lambda + 0.1 * step * expected_rate - opts.line_search_tol) {
            current = std::move(trial);
            lambda = lambda_trial;
            last_lambda = lambda;
            result.trace.back().step = step;
            accepted = true;
            break;
          }
        }
        if (!accepted) {
          stop = "step-collapse";
          break;
        }
      }

      result.termination = stop;
      result.per_cap_measures.push_back(current);
      result.lambda1 = lambda;
    }
  } catch (const numeric_error&) {
    // Checkpointed partial result: keep the trace and the last good iterate.
    result.completed = false;
  }

  result.measure = current;
  result.lambda1 = last_lambda;
  if (result.completed)
    result.certificate =
        extremality_certificate(mesh, K, current, 1, opts.certificate_tol, opts.cluster_tol);
  result.saturated_set =
      saturated_vertices(current.weights, areas, schedule.caps.back(), opts.saturation_eta);
  return result;
}

ConcentrationReport concentration_monitor(const TriangleMesh& mesh,
                                          const Eigen::SparseMatrix<double>& K,
                                          const std::vector<DiscreteMeasure>& measures,
                                          double epsilon, double rho_edges, double slack) {
  ConcentrationReport report;
  report.epsilon = epsilon;
  report.rho = rho_edges * median_edge_length(mesh);
  report.slack = slack;
  const auto graph = build_vertex_graph(mesh);
  for (const auto& mu : measures) {
    if (!mu.is_probability(1e-9))
      throw input_error("concentration monitor requires probability measures");
    ConcentrationRow row;
    row.max_ball_mass = max_ball_mass(mesh, graph, mu, report.rho);
    row.concentrating = row.max_ball_mass >= 1.0 - epsilon;
    const auto sol = solve_spectrum(K, assemble_mass(mesh, mu), 1, SolveOptions{});
    row.lambda1_mass = sol.eigenvalues[1] * mu.total_mass();
    if (row.concentrating) row.ceiling_ok = row.lambda1_mass <= 8.0 * M_PI * (1.0 + slack);
    report.rows.push_back(row);
  }
  return report;
}

SingularSetEstimate singular_set_estimate(const TriangleMesh& mesh, const MaximizerResult& result,
                                          double eta) {
  if (result.per_cap_measures.empty())
    throw input_error("singular set estimate requires a completed maximizer result");
  const auto areas = vertex_lumped_areas(mesh);
  const double total_area = mesh.total_area();

  SingularSetEstimate estimate;
  std::vector<std::vector<int>> per_cap;
  for (size_t i = 0; i < result.per_cap_measures.size(); ++i) {
    const double cap = result.caps[i];
    std::vector<int> sat;
    if (eta >= 1.0) {
      for (int v : result.per_cap_measures[i].support()) sat.push_back(v);
    } else {
      sat = saturated_vertices(result.per_cap_measures[i].weights, areas, cap, eta);
    }
    double area = 0.0;
    for (int v : sat) area += areas[v];
    estimate.area_fraction.push_back(area / total_area);
    per_cap.push_back(std::move(sat));
  }

  // Nested tails: Sigma*_i = union over j >= i, then intersect over i.
  std::vector<std::vector<int>> tails(per_cap.size());
  std::vector<int> tail;
  for (size_t i = per_cap.size(); i-- > 0;) {
    std::vector<int> merged;
    std::sort(per_cap[i].begin(), per_cap[i].end());
    std::set_union(tail.begin(), tail.end(), per_cap[i].begin(), per_cap[i].end(),
                   std::back_inserter(merged));
    tail = std::move(merged);
    tails[i] = tail;
  }
  std::vector<int> intersection = tails.empty() ? std::vector<int>{} : tails.front();
  for (const auto& t : tails) {
    std::vector<int> next;
    std::set_intersection(intersection.begin(), intersection.end(), t.begin(), t.end(),
                          std::back_inserter(next));
    intersection = std::move(next);
  }
  estimate.vertices = std::move(intersection);
  return estimate;
}

}  // namespace ceig
