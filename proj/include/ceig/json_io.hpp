#pragma once

#include "ceig/bounds.hpp"
#include "ceig/capacity.hpp"
#include "ceig/measure.hpp"
#include "ceig/mesh.hpp"
#include "ceig/optimize.hpp"
#include "ceig/spectrum.hpp"
#include "ceig/variation.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace ceig {

using json = nlohmann::json;

json measure_to_json(const DiscreteMeasure& mu);

/// Measure descriptor: {"kind": "uniform"|"density"|"boundary"|"atomic"|"file",
/// "density": [...], "atoms": [[vertex, mass], ...], "path": "..."}.
DiscreteMeasure measure_from_json(const TriangleMesh& mesh, const json& descriptor);

json region_to_json(const Region& region);

/// Accepts a JSON array of vertex indices, or a descriptor object
/// {"center": c, "r": r} (graph ball) / {"center": c, "r": r, "R": R} (annulus).
Region region_from_json(const TriangleMesh& mesh, const json& value);

json spectral_result_to_json(const SpectralResult& result, double cluster_tol = 1e-6);
json certificate_to_json(const ExtremalityCertificate& cert);
json capacity_result_to_json(const CapacityResult& result);
json isocapacity_to_json(const IsocapacityResult& result);
json mazja_to_json(const MazjaBracket& bracket);
json hersch_to_json(const HerschBoundReport& report);
json annulus_system_to_json(const AnnulusSystem& system);
json maximizer_to_json(const MaximizerResult& result);
json ball_growth_to_json(const BallGrowthProfile& profile);

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

/// Binary eigenfunction dump: 16-byte header "EIGF" + uint32 version +
/// uint32 rows + uint32 cols, then row-major float64, little-endian.
void write_eigenfunctions(std::ostream& out, const Eigen::MatrixXd& functions);
Eigen::MatrixXd read_eigenfunctions(std::istream& in);

/// FNV-1a hash of a canonical JSON dump, as fixed-width hex.
std::string config_hash(const json& config);

}  // namespace ceig
