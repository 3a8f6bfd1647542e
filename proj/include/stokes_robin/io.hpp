#pragma once

#include "stokes_robin/inversion.hpp"
#include "stokes_robin/manufactured.hpp"
#include "stokes_robin/stability.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <string>

namespace stokes_robin {

using Json = nlohmann::ordered_json;

/// Mesh debug dump: vertices, triangles, tagged boundary edges.
Json mesh_to_json(const Mesh& mesh);

/// {time_knots, segment_bounds, segment_knots, coeffs}; tensor layout only.
Json coefficient_to_json(const RobinCoefficient& q);
/// Inverse of coefficient_to_json; builds a fresh basis.
RobinCoefficient coefficient_from_json(const Json& j);

Json to_json(const DataNorms& norms);
Json to_json(const EnergyReport& report);
Json to_json(const GramSpectrum& spectrum);
Json to_json(const TaylorReport& report);
Json to_json(const ContinuityReport& report);
Json to_json(const InversionResult& result);
Json to_json(const StabilityReport& report);
Json to_json(const IdentifiabilityReport& report);
Json to_json(const HypothesisReport& report);
Json to_json(const ConvergenceTable& table);

/// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

/// Long format: step,time,x,y,ux,uy (one row per time node and window node).
void write_trace_csv(const std::filesystem::path& path, const MeasurementTrace& trace, const TraceSpace& space,
                     const TimeGrid& grid);
/// Reads a trace written for the same window and time grid as `disc`;
/// node positions and times must match to 1e-9. Throws InputError otherwise.
MeasurementTrace read_trace_csv(const std::filesystem::path& path, const Discretization& disc);

void write_iterations_csv(const std::filesystem::path& path, const InversionResult& result);
void write_pairs_csv(const std::filesystem::path& path, const StabilityReport& report);
/// level,h,time_steps,l2l2,l2h1,trace,rate_l2l2,rate_l2h1,rate_trace (rates empty on the first row).
void write_convergence_csv(const std::filesystem::path& path, const ConvergenceTable& table);

}  // namespace stokes_robin
