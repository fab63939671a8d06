#include "ceig/json_io.hpp"

#include "ceig/errors.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>

namespace ceig {

namespace {

json finite_or_string(double x) {
  if (std::isfinite(x)) return x;
  return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
}

const char* support_kind_name(SupportKind kind) {
  switch (kind) {
    case SupportKind::interior: return "interior";
    case SupportKind::boundary: return "boundary";
    case SupportKind::mixed: return "mixed";
  }
  return "interior";
}

const char* verdict_name(Verdict verdict) {
  switch (verdict) {
    case Verdict::extremal: return "extremal";
    case Verdict::non_extremal: return "non-extremal";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

}  // namespace

json measure_to_json(const DiscreteMeasure& mu) {
  json out;
  out["kind"] = "density";
  out["weights"] = mu.weights;
  out["support_kind"] = support_kind_name(mu.support_kind);
  if (mu.has_atoms()) {
    json atoms = json::array();
    for (const auto& [v, m] : mu.atoms) atoms.push_back({v, m});
    out["atoms"] = atoms;
    out["kind"] = "atomic";
  }
  return out;
}

DiscreteMeasure measure_from_json(const TriangleMesh& mesh, const json& descriptor) {
  if (!descriptor.is_object() || !descriptor.contains("kind"))
    throw input_error("measure descriptor must be an object with a \"kind\" field");
  const std::string kind = descriptor.at("kind").get<std::string>();
  if (kind == "uniform") return uniform_area_measure(mesh);
  if (kind == "boundary") return boundary_measure(mesh);
  if (kind == "density") {
    if (descriptor.contains("weights")) {
      DiscreteMeasure mu;
      mu.weights = descriptor.at("weights").get<std::vector<double>>();
      if (static_cast<int>(mu.weights.size()) != mesh.vertex_count())
        throw input_error("measure weights size does not match vertex count");
      if (descriptor.contains("atoms"))
        for (const auto& entry : descriptor.at("atoms"))
          mu.atoms.emplace_back(entry.at(0).get<int>(), entry.at(1).get<double>());
      return mu;
    }
    return density_measure(mesh, descriptor.at("density").get<std::vector<double>>());
  }
  if (kind == "atomic") {
    std::vector<std::pair<int, double>> atoms;
    for (const auto& entry : descriptor.at("atoms"))
      atoms.emplace_back(entry.at(0).get<int>(), entry.at(1).get<double>());
    return atomic_measure(mesh, atoms);
  }
  if (kind == "file") {
    std::ifstream in(descriptor.at("path").get<std::string>());
    if (!in) throw input_error("cannot open measure file: " + descriptor.at("path").get<std::string>());
    json nested;
    in >> nested;
    return measure_from_json(mesh, nested);
  }
  throw input_error("unknown measure kind: " + kind);
}

json region_to_json(const Region& region) { return json(region.vertices); }

Region region_from_json(const TriangleMesh& mesh, const json& value) {
  if (value.is_array()) {
    std::vector<int> verts = value.get<std::vector<int>>();
    for (int v : verts)
      if (v < 0 || v >= mesh.vertex_count())
        throw input_error("region vertex out of range: " + std::to_string(v));
    return make_region(std::move(verts));
  }
  if (value.is_object() && value.contains("center")) {
    const int center = value.at("center").get<int>();
    const double r = value.at("r").get<double>();
    if (value.contains("R"))
      return graph_annulus(mesh, center, r, value.at("R").get<double>()).first;
    return graph_ball(mesh, center, r);
  }
  throw input_error("region must be a vertex array or a {center, r[, R]} descriptor");
}

json spectral_result_to_json(const SpectralResult& result, double cluster_tol) {
  json out;
  json values = json::array();
  for (double lambda : result.eigenvalues) values.push_back(finite_or_string(lambda));
  out["eigenvalues"] = values;
  out["n_finite"] = result.n_finite;
  out["residuals"] = result.residuals;

  json clusters = json::array();
  int i = 0;
  while (i < result.n_finite) {
    int j = i;
    while (j + 1 < result.n_finite &&
           std::abs(result.eigenvalues[j + 1] - result.eigenvalues[i]) <=
               cluster_tol * std::max(1.0, std::abs(result.eigenvalues[i])))
      ++j;
    clusters.push_back({{"first", i}, {"multiplicity", j - i + 1}, {"lambda", result.eigenvalues[i]}});
    i = j + 1;
  }
  out["clusters"] = clusters;
  return out;
}

json certificate_to_json(const ExtremalityCertificate& cert) {
  json out;
  out["coefficients"] = std::vector<double>(cert.coefficients.data(),
                                            cert.coefficients.data() + cert.coefficients.size());
  out["residual"] = cert.residual;
  out["verdict"] = verdict_name(cert.verdict);
  out["tolerance"] = cert.tolerance;
  out["eigenspace_dim"] = cert.eigenspace_dim;
  out["seed"] = cert.seed;
  return out;
}

json capacity_result_to_json(const CapacityResult& result) {
  json out;
  out["cap"] = result.cap_value;
  out["potential_min"] = result.potential.size() ? result.potential.minCoeff() : 0.0;
  out["potential_max"] = result.potential.size() ? result.potential.maxCoeff() : 0.0;
  return out;
}

json isocapacity_to_json(const IsocapacityResult& result) {
  json out;
  out["beta_lower"] = result.beta_lower;
  json log = json::array();
  for (const auto& c : result.candidate_log)
    log.push_back({{"kind", c.kind},
                   {"size", c.size},
                   {"mass", c.mass},
                   {"capacity", c.capacity},
                   {"ratio", c.ratio}});
  out["candidates"] = log;
  return out;
}

json mazja_to_json(const MazjaBracket& bracket) {
  json out;
  out["lhs"] = finite_or_string(bracket.lhs);
  out["tone"] = finite_or_string(bracket.tone);
  out["rhs"] = finite_or_string(bracket.rhs);
  out["pass"] = bracket.pass;
  return out;
}

json hersch_to_json(const HerschBoundReport& report) {
  json out;
  out["bound"] = report.bound;
  out["ceiling"] = report.ceiling;
  out["parameter"] = {report.parameter.a.x(), report.parameter.a.y(), report.parameter.a.z()};
  out["balance_residual"] = report.balance_residual;
  out["test_energy"] = report.test_energy;
  return out;
}

json annulus_system_to_json(const AnnulusSystem& system) {
  json out;
  out["v"] = system.v;
  out["kappa"] = system.kappa;
  out["c_eff"] = system.c_eff;
  json annuli = json::array();
  for (const auto& a : system.annuli)
    annuli.push_back({{"center", a.center},
                      {"r", a.r},
                      {"R", a.R},
                      {"mass", a.mass},
                      {"capacity", a.capacity},
                      {"inner_size", a.inner.size()},
                      {"outer_size", a.outer.size()}});
  out["annuli"] = annuli;
  return out;
}

json maximizer_to_json(const MaximizerResult& result) {
  json out;
  out["lambda1"] = result.lambda1;
  out["measure"] = measure_to_json(result.measure);
  out["saturated_set"] = result.saturated_set;
  out["certificate"] = certificate_to_json(result.certificate);
  out["caps"] = result.caps;
  out["seed"] = result.seed;
  out["completed"] = result.completed;
  out["termination"] = result.termination;
  return out;
}

json ball_growth_to_json(const BallGrowthProfile& profile) {
  json out;
  out["radii"] = profile.radii;
  out["values"] = profile.values;
  out["trend"] = profile.trend == GrowthTrend::decaying
                     ? "decaying"
                     : (profile.trend == GrowthTrend::growing ? "growing" : "bounded");
  return out;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "cap_index,iteration,lambda1,step,certificate_residual,concentration\n";
  out.precision(17);
  for (const auto& row : trace)
    out << row.cap_index << "," << row.iteration << "," << row.lambda1 << "," << row.step << ","
        << row.certificate_residual << "," << row.concentration << "\n";
}

void write_eigenfunctions(std::ostream& out, const Eigen::MatrixXd& functions) {
  const char magic[4] = {'E', 'I', 'G', 'F'};
  const uint32_t version = 1;
  const uint32_t rows = static_cast<uint32_t>(functions.rows());
  const uint32_t cols = static_cast<uint32_t>(functions.cols());
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  for (uint32_t i = 0; i < rows; ++i)
    for (uint32_t j = 0; j < cols; ++j) {
      const double value = functions(i, j);
      out.write(reinterpret_cast<const char*>(&value), 8);
    }
}

Eigen::MatrixXd read_eigenfunctions(std::istream& in) {
  char magic[4];
  uint32_t version = 0, rows = 0, cols = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  if (!in || std::memcmp(magic, "EIGF", 4) != 0)
    throw input_error("not an EIGF eigenfunction dump");
  if (version != 1) throw input_error("unsupported EIGF version");
  Eigen::MatrixXd functions(rows, cols);
  for (uint32_t i = 0; i < rows; ++i)
    for (uint32_t j = 0; j < cols; ++j) {
      double value = 0.0;
      in.read(reinterpret_cast<char*>(&value), 8);
      functions(i, j) = value;
    }
  if (!in) throw input_error("truncated EIGF eigenfunction dump");
  return functions;
}

std::string config_hash(const json& config) {
  const std::string dump = config.dump();
  uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : dump) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buf);
}

}  // namespace ceig
