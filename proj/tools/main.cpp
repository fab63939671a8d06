#include "ceig/bounds.hpp"
#include "ceig/capacity.hpp"
#include "ceig/errors.hpp"
#include "ceig/json_io.hpp"
#include "ceig/measure.hpp"
#include "ceig/mesh.hpp"
#include "ceig/optimize.hpp"
#include "ceig/shapes.hpp"
#include "ceig/spectrum.hpp"
#include "ceig/variation.hpp"
#include "ceig/version.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using ceig::json;

// Mesh argument: a file path or a builtin spec
// (sphere:LEVEL, disk:RINGS, torus:N, square:N).
ceig::TriangleMesh resolve_mesh(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon != std::string::npos) {
    const std::string name = spec.substr(0, colon);
    const int arg = std::atoi(spec.c_str() + colon + 1);
    if (name == "sphere") return ceig::icosphere(arg);
    if (name == "disk") return ceig::disk_mesh(arg);
    if (name == "torus") return ceig::flat_torus(arg);
    if (name == "square") return ceig::grid_mesh(arg, arg, 0.0, 0.0, 1.0, 1.0);
  }
  return ceig::load_mesh_file(spec);
}

ceig::DiscreteMeasure resolve_measure(const ceig::TriangleMesh& mesh, const std::string& spec) {
  if (spec.empty() || spec == "uniform") return ceig::uniform_area_measure(mesh);
  if (spec == "boundary") return ceig::boundary_measure(mesh);
  if (spec.rfind("atomic:", 0) == 0) {
    std::vector<std::pair<int, double>> atoms;
    std::stringstream ss(spec.substr(7));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto sep = item.find(':');
      if (sep == std::string::npos) throw ceig::input_error("atomic spec wants vertex:mass pairs");
      atoms.emplace_back(std::stoi(item.substr(0, sep)), std::stod(item.substr(sep + 1)));
    }
    return ceig::atomic_measure(mesh, atoms);
  }
  if (!spec.empty() && spec.front() == '{')
    return ceig::measure_from_json(mesh, json::parse(spec));
  std::ifstream in(spec);
  if (!in) throw ceig::input_error("cannot open measure file: " + spec);
  json descriptor;
  in >> descriptor;
  return ceig::measure_from_json(mesh, descriptor);
}

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_report(const std::string& out_dir, const std::string& name, json report,
                  const json& config) {
  report["config"] = config;
  report["config_hash"] = ceig::config_hash(config);
  report["version"] = ceig::version;
  report["timestamp"] = timestamp_now();
  std::filesystem::create_directories(out_dir);
  std::ofstream out(std::filesystem::path(out_dir) / name);
  if (!out) throw ceig::input_error("cannot write report in " + out_dir);
  out << report.dump(2) << "\n";
}

struct CommonArgs {
  std::string mesh;
  std::string measure = "uniform";
  std::string out_dir = ".";
  uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_measure = true) {
  cmd->add_option("--mesh", args.mesh, "Mesh file (.off/.obj) or builtin spec sphere:L, disk:R, torus:N, square:N")
      ->required();
  if (with_measure)
    cmd->add_option("--measure", args.measure,
                    "uniform | boundary | atomic:v:m,... | descriptor JSON | JSON file path");
  cmd->add_option("--out", args.out_dir, "Output directory");
  cmd->add_option("--seed", args.seed, "Seed recorded in all outputs");
}

json base_config(const std::string& command, const CommonArgs& args) {
  json config;
  config["command"] = command;
  config["mesh"] = args.mesh;
  config["measure"] = args.measure;
  config["seed"] = args.seed;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("CEIG_THREADS")) Eigen::setNbThreads(std::atoi(threads));

  CLI::App app{"Laplace eigenvalues of measure-weighted conformal structures"};
  app.require_subcommand(1);

  CommonArgs eigs_args;
  int eigs_k = 5;
  bool eigs_dump = false;
  auto* eigs = app.add_subcommand("eigs", "Eigenvalues of the measure pencil");
  add_common(eigs, eigs_args);
  eigs->add_option("--k", eigs_k, "Highest eigenvalue index");
  eigs->add_flag("--dump-eigenfunctions", eigs_dump, "Write the binary EIGF dump");

  CommonArgs ext_args;
  int ext_k = 1;
  double ext_tol = 1e-2;
  auto* ext = app.add_subcommand("extremality", "Extremality certificate and separating direction");
  add_common(ext, ext_args);
  ext->add_option("--k", ext_k, "Eigenvalue index");
  ext->add_option("--tol", ext_tol, "Certificate residual tolerance");

  CommonArgs cap_args;
  std::string cap_omega, cap_inner;
  auto* capc = app.add_subcommand("capacity", "Capacity, fundamental tone, isocapacity bracket");
  add_common(capc, cap_args);
  capc->add_option("--omega", cap_omega, "Domain region (JSON array or {center,r[,R]})")->required();
  capc->add_option("--F", cap_inner, "Inner set; computes CAP(F, omega) when given");

  CommonArgs bounds_args;
  int bounds_k = 1, bounds_degree = 1;
  std::string bounds_map;
  auto* bnds = app.add_subcommand("bounds", "Hersch and Grigor'yan-Yau upper bounds");
  add_common(bnds, bounds_args);
  bnds->add_option("--k", bounds_k, "Eigenvalue index for the capacitor bound");
  bnds->add_option("--degree", bounds_degree, "Degree of the sphere map");
  bnds->add_option("--sphere-map", bounds_map, "File of per-vertex unit 3-vectors (x y z lines)");

  CommonArgs max_args;
  std::string caps_spec = "10,100";
  int max_iters = 40;
  std::string resume_path;
  auto* maxc = app.add_subcommand("maximize", "Density-capped direct maximization of lambda_1");
  add_common(maxc, max_args, false);
  maxc->add_option("--caps", caps_spec, "Comma-separated increasing density caps");
  maxc->add_option("--iters", max_iters, "Iteration budget per cap");
  maxc->add_option("--resume", resume_path, "Checkpoint JSON to resume from");

  CommonArgs diag_args;
  auto* diag = app.add_subcommand("diagnose", "Ball-growth and isocapacity diagnostics");
  add_common(diag, diag_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (eigs->parsed()) {
      const auto mesh = resolve_mesh(eigs_args.mesh);
      const auto mu = resolve_measure(mesh, eigs_args.measure);
      const auto K = ceig::assemble_stiffness(mesh);
      ceig::SolveOptions opts;
      opts.seed = eigs_args.seed == 0 ? ceig::SolveOptions{}.seed : eigs_args.seed;
      const auto result = ceig::solve_spectrum(K, ceig::assemble_mass(mesh, mu), eigs_k, opts);
      json config = base_config("eigs", eigs_args);
      config["k"] = eigs_k;
      json report = ceig::spectral_result_to_json(result);
      report["lambda1_mass"] =
          result.n_finite > 1 ? result.eigenvalues[1] * mu.total_mass()
                              : std::numeric_limits<double>::quiet_NaN();
      if (eigs_dump) {
        std::filesystem::create_directories(eigs_args.out_dir);
        std::ofstream dump(std::filesystem::path(eigs_args.out_dir) / "eigenfunctions.eigf",
                           std::ios::binary);
        ceig::write_eigenfunctions(dump, result.eigenfunctions);
      }
      write_report(eigs_args.out_dir, "eigs.json", report, config);
      std::cout << "eigs: n_finite=" << result.n_finite
                << " lambda1*mass=" << report["lambda1_mass"].dump() << "\n";
    } else if (ext->parsed()) {
      const auto mesh = resolve_mesh(ext_args.mesh);
      const auto mu = resolve_measure(mesh, ext_args.measure);
      const auto K = ceig::assemble_stiffness(mesh);
      auto cert = ceig::extremality_certificate(mesh, K, mu, ext_k, ext_tol);
      cert.seed = ext_args.seed;
      json report;
      report["certificate"] = ceig::certificate_to_json(cert);
      if (cert.verdict == ceig::Verdict::non_extremal) {
        const auto direction = ceig::separating_direction(mesh, K, mu, ext_k, ext_tol);
        report["separating_margin"] = direction.margin;
        report["separating_found"] = direction.phi.has_value();
      }
      json config = base_config("extremality", ext_args);
      config["k"] = ext_k;
      config["tol"] = ext_tol;
      write_report(ext_args.out_dir, "extremality.json", report, config);
      std::cout << "extremality: verdict=" << report["certificate"]["verdict"].get<std::string>()
                << " residual=" << cert.residual << "\n";
    } else if (capc->parsed()) {
      const auto mesh = resolve_mesh(cap_args.mesh);
      const auto mu = resolve_measure(mesh, cap_args.measure);
      const auto K = ceig::assemble_stiffness(mesh);
      const auto omega = ceig::region_from_json(mesh, json::parse(cap_omega));
      json report;
      if (!cap_inner.empty()) {
        const auto F = ceig::region_from_json(mesh, json::parse(cap_inner));
        report["cap"] = ceig::capacity_result_to_json(ceig::cap(mesh, K, ceig::Capacitor{F, omega}));
      }
      report["tone"] = ceig::fundamental_tone(mesh, K, mu, omega);
      report["isocapacity"] = ceig::isocapacity_to_json(ceig::isocapacity_constant(mesh, K, mu, omega));
      report["mazja"] = ceig::mazja_to_json(ceig::mazja_bracket(mesh, K, mu, omega));
      json config = base_config("capacity", cap_args);
      config["omega"] = cap_omega;
      config["F"] = cap_inner;
      write_report(cap_args.out_dir, "capacity.json", report, config);
      std::cout << "capacity: tone=" << report["tone"].dump()
                << " beta_lower=" << report["isocapacity"]["beta_lower"].dump() << "\n";
    } else if (bnds->parsed()) {
      const auto mesh = resolve_mesh(bounds_args.mesh);
      const auto mu = resolve_measure(mesh, bounds_args.measure).normalized();
      const auto K = ceig::assemble_stiffness(mesh);
      Eigen::MatrixX3d sphere_map(mesh.vertex_count(), 3);
      if (!bounds_map.empty()) {
        std::ifstream in(bounds_map);
        if (!in) throw ceig::input_error("cannot open sphere map: " + bounds_map);
        for (int v = 0; v < mesh.vertex_count(); ++v)
          if (!(in >> sphere_map(v, 0) >> sphere_map(v, 1) >> sphere_map(v, 2)))
            throw ceig::input_error("sphere map too short at vertex " + std::to_string(v));
      } else {
        for (int v = 0; v < mesh.vertex_count(); ++v) {
          const double norm = mesh.vertices[v].norm();
          if (!(norm > 0.0))
            throw ceig::input_error("vertex at the origin; supply --sphere-map explicitly");
          sphere_map.row(v) = (mesh.vertices[v] / norm).transpose();
        }
      }
      json report;
      report["hersch"] = ceig::hersch_to_json(
          ceig::hersch_bound(mesh, K, mu, sphere_map, bounds_degree));
      auto system = ceig::gy_annuli(mesh, mu, bounds_k);
      const double bound = ceig::capacitor_bound(mesh, K, mu, system, bounds_k);
      report["capacitor_bound"] = bound;
      report["annuli"] = ceig::annulus_system_to_json(system);
      json config = base_config("bounds", bounds_args);
      config["k"] = bounds_k;
      config["degree"] = bounds_degree;
      write_report(bounds_args.out_dir, "bounds.json", report, config);
      std::cout << "bounds: hersch=" << report["hersch"]["bound"].dump()
                << " capacitor=" << bound << "\n";
    } else if (maxc->parsed()) {
      const auto mesh = resolve_mesh(max_args.mesh);
      const auto K = ceig::assemble_stiffness(mesh);
      ceig::DensityCapSchedule schedule;
      {
        std::stringstream ss(caps_spec);
        std::string item;
        while (std::getline(ss, item, ',')) schedule.caps.push_back(std::stod(item));
      }
      schedule.iterations_per_cap = max_iters;
      ceig::MaximizerResult result;
      if (!resume_path.empty()) {
        std::ifstream in(resume_path);
        if (!in) throw ceig::input_error("cannot open checkpoint: " + resume_path);
        json checkpoint;
        in >> checkpoint;
        ceig::DiscreteMeasure start = ceig::measure_from_json(mesh, checkpoint.at("measure"));
        result = ceig::maximize_lambda1(mesh, K, schedule, max_args.seed, {}, start,
                                        checkpoint.at("next_cap").get<size_t>());
      } else {
        result = ceig::maximize_lambda1(mesh, K, schedule, max_args.seed);
      }
      json config = base_config("maximize", max_args);
      config["caps"] = caps_spec;
      config["iters"] = max_iters;
      write_report(max_args.out_dir, "maximize.json", ceig::maximizer_to_json(result), config);
      {
        std::ofstream trace(std::filesystem::path(max_args.out_dir) / "trace.csv");
        ceig::write_trace_csv(trace, result.trace);
        json checkpoint;
        checkpoint["measure"] = ceig::measure_to_json(result.measure);
        checkpoint["next_cap"] = result.caps.size();
        std::ofstream ck(std::filesystem::path(max_args.out_dir) / "checkpoint.json");
        ck << checkpoint.dump(2) << "\n";
      }
      std::cout << "maximize: lambda1*mass=" << result.lambda1
                << " termination=" << result.termination
                << (result.completed ? "" : " (partial)") << "\n";
      if (!result.completed) return 2;
    } else if (diag->parsed()) {
      const auto mesh = resolve_mesh(diag_args.mesh);
      const auto mu = resolve_measure(mesh, diag_args.measure);
      const auto K = ceig::assemble_stiffness(mesh);
      const auto radii = ceig::default_radii(mesh);
      json report;
      ceig::GrowthTrend worst = ceig::GrowthTrend::decaying;
      for (double q : {1.0, 2.0}) {
        const auto profile = ceig::ball_growth_diagnostic(mesh, mu, q, radii);
        report["ball_growth_q" + std::to_string(static_cast<int>(q))] =
            ceig::ball_growth_to_json(profile);
        if (static_cast<int>(profile.trend) > static_cast<int>(worst)) worst = profile.trend;
      }
      // Isocapacity profile on sampled balls around the heaviest vertex.
      {
        const auto masses = mu.vertex_masses();
        int heavy = 0;
        for (int v = 0; v < mesh.vertex_count(); ++v)
          if (masses[v] > masses[heavy]) heavy = v;
        json profile = json::array();
        const auto graph = ceig::build_vertex_graph(mesh);
        for (double frac : {0.1, 0.2, 0.4}) {
          const auto dist = ceig::graph_distances(graph, {heavy});
          double reach = 0.0;
          for (int v = 0; v < mesh.vertex_count(); ++v)
            if (std::isfinite(dist[v])) reach = std::max(reach, dist[v]);
          const auto omega = ceig::graph_ball(mesh, graph, heavy, frac * reach);
          if (omega.empty() || omega.size() >= mesh.vertex_count()) continue;
          try {
            const auto iso = ceig::isocapacity_constant(mesh, K, mu, omega);
            profile.push_back({{"radius_fraction", frac}, {"beta_lower", iso.beta_lower}});
          } catch (const ceig::input_error&) {
          }
        }
        report["isocapacity_profile"] = profile;
      }
      const char* verdict = worst == ceig::GrowthTrend::decaying
                                ? "compact-like"
                                : (worst == ceig::GrowthTrend::growing ? "degenerate"
                                                                       : "positive-lambda1-like");
      report["verdict"] = verdict;
      report["verdict_note"] = "heuristic: compactness is a continuum property";
      json config = base_config("diagnose", diag_args);
      write_report(diag_args.out_dir, "diagnose.json", report, config);
      std::cout << "diagnose: verdict=" << verdict << "\n";
    }
  } catch (const ceig::input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const ceig::numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
