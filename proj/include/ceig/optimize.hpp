#pragma once

#include "ceig/measure.hpp"
#include "ceig/mesh.hpp"
#include "ceig/variation.hpp"

#include <Eigen/Sparse>

#include <cstdint>
#include <string>
#include <vector>

namespace ceig {

/// Increasing density caps C_1 < C_2 < ... defining the feasible classes.
struct DensityCapSchedule {
  std::vector<double> caps;
  int iterations_per_cap = 40;
};

struct MaximizeOptions {
  double certificate_tol = 1e-3;
  double margin_tol = 1e-6;  // separating margin below which a cap stage stops
  double cluster_tol = 1e-6;
  double line_search_tol = 1e-10;
  double solver_tol = 1e-9;
  double saturation_eta = 1e-3;
  double concentration_epsilon = 0.05;
  double concentration_rho_edges = 3.0;
  int max_projection_rounds = 50;
};

struct TraceRow {
  int cap_index = 0;
  int iteration = 0;
  double lambda1 = 0.0;
  double step = 0.0;
  double certificate_residual = 0.0;
  double concentration = 0.0;  // max ball mass at the monitor radius
};

struct MaximizerResult {
  DiscreteMeasure measure;
  double lambda1 = 0.0;
  std::vector<TraceRow> trace;
  std::vector<int> saturated_set;  // density >= (1 - eta) * C at the final cap
  ExtremalityCertificate certificate;
  std::vector<DiscreteMeasure> per_cap_measures;
  std::vector<double> caps;
  uint64_t seed = 0;
  bool completed = true;        // false when checkpointed after a solver failure
  std::string termination;      // "certificate" | "margin" | "budget" | "step-collapse"
};

/// Projected ascent on the log-density within each density cap class,
/// warm-starting the next cap from the previous maximizer.
MaximizerResult maximize_lambda1(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K,
                                 const DensityCapSchedule& schedule, uint64_t seed,
                                 const MaximizeOptions& opts = {});

/// Resume variant: start from a given measure at cap index `first_cap`
/// (checkpoint restart; deterministic, so a resumed run reproduces a straight
/// run bit-exactly).
MaximizerResult maximize_lambda1(const TriangleMesh& mesh, const Eigen::SparseMatrix<double>& K,
                                 const DensityCapSchedule& schedule, uint64_t seed,
                                 const MaximizeOptions& opts, const DiscreteMeasure& start,
                                 size_t first_cap);

struct ConcentrationRow {
  double max_ball_mass = 0.0;
  bool concentrating = false;
  double lambda1_mass = 0.0;
  bool ceiling_ok = true;  // concentrating => lambda1 * mu(M) <= 8 pi + slack
};

struct ConcentrationReport {
  std::vector<ConcentrationRow> rows;
  double epsilon = 0.05;
  double rho = 0.0;
  double slack = 0.05;  // relative slack on the 8 pi ceiling
};

/// Dirac-concentration monitor: flags measures whose mass 1 - epsilon sits in
/// a graph ball of radius rho; flagged measures are checked against the 8 pi
/// ceiling.
ConcentrationReport concentration_monitor(const TriangleMesh& mesh,
                                          const Eigen::SparseMatrix<double>& K,
                                          const std::vector<DiscreteMeasure>& measures,
                                          double epsilon = 0.05, double rho_edges = 3.0,
                                          double slack = 0.05);

struct SingularSetEstimate {
  std::vector<int> vertices;              // nested-intersection estimate
  std::vector<double> area_fraction;      // saturated area fraction per cap
};

SingularSetEstimate singular_set_estimate(const TriangleMesh& mesh, const MaximizerResult& result,
                                          double eta);

}  // namespace ceig
