#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace stokes_robin {

struct GeometryConfig {
    double length = 2.0;
    double height = 1.0;
    int nx = 4;               ///< coarse mesh; Robin spatial knots live on its outlet vertices
    int ny = 2;
    int outlet_segments = 2;
    int refinements = 2;      ///< uniform refinements of the coarse mesh for the solver
    bool operator==(const GeometryConfig&) const = default;
};

struct TimeConfig {
    double final_time = 1.0;
    int steps = 32;
    bool operator==(const TimeConfig&) const = default;
};

/// A data field. Kinds:
///   initial velocity: "poiseuille" (u = 4 a y (H - y) / H^2 e_x), "zero";
///   inlet traction:   "pulsatile" (a (1 + pulse sin(2 pi frequency t / T)) 4 y (H - y) / H^2 e_x),
///                     "constant" (value), "zero";
///   Robin load:       "constant" (value), "zero";
///   body force:       "zero".
struct FieldSpec {
    std::string kind = "zero";
    double amplitude = 1.0;
    double pulse = 0.5;
    double frequency = 1.0;
    std::array<double, 2> value{0.0, 0.0};
    bool operator==(const FieldSpec&) const = default;
};

struct DataConfig {
    FieldSpec initial_velocity{"poiseuille"};
    FieldSpec inlet_traction{"pulsatile"};
    FieldSpec robin_load{"zero"};
    FieldSpec body_force{"zero"};
    bool operator==(const DataConfig&) const = default;
};

struct ParameterSpaceConfig {
    int time_knots = 5;                  ///< P + 1
    int spatial_knots_per_segment = 0;   ///< 0: outlet vertices of the coarse mesh
    double lower = 0.5;                  ///< m
    double upper = 5.0;                  ///< q_max
    bool operator==(const ParameterSpaceConfig&) const = default;
};

struct MeasurementConfig {
    double begin = 0.0;  ///< arc interval of the inlet wall, within [0, H]
    double end = 1.0;
    bool operator==(const MeasurementConfig&) const = default;
};

/// A Robin coefficient. Kinds: "midpoint" of the box, "constant" (value),
/// "sample" (one uniform draw from the box with `seed`), "wave" (box midpoint
/// plus `value` * sin(2 pi t / T + pi y / H) at the knots), "coeffs" (explicit list).
struct CoefficientSpec {
    std::string kind = "midpoint";
    double value = 1.0;
    std::uint64_t seed = 0;
    std::vector<double> coeffs;
    bool operator==(const CoefficientSpec&) const = default;
};

struct InversionConfig {
    /// Tikhonov weight; empty selects 0 for noiseless data and
    /// 1e-6 trace(J^T W J) / M otherwise.
    std::optional<double> regularization;
    double noise_level = 0.0;
    std::uint64_t seed = 1;
    CoefficientSpec q_init{"midpoint"};
    CoefficientSpec q_true{"wave", 1.25, 2024};
    int max_iterations = 50;
    bool crime_free = false;
    bool operator==(const InversionConfig&) const = default;
};

struct ProbeConfig {
    int n_pairs = 200;
    std::uint64_t seed = 7;
    double small_fraction = 0.25;
    double small_scale = 1e-4;
    bool operator==(const ProbeConfig&) const = default;
};

struct HypothesisConfig {
    int samples = 5;
    std::uint64_t seed = 11;
    int scan_pairs = 50;
    bool operator==(const HypothesisConfig&) const = default;
};

struct EnergyConfig {
    int samples = 20;
    std::uint64_t seed = 3;
    bool operator==(const EnergyConfig&) const = default;
};

struct ConvergenceConfig {
    int levels = 3;
    int base_time_steps = 8;
    int temporal_levels = 3;
    int temporal_mesh_level = 4;
    int temporal_base_steps = 8;
    double q_value = 1.0;
    double amplitude = 1.0;
    double pressure_amplitude = 1.0;
    double time_amplitude = 0.5;
    double time_frequency = 6.283185307179586;
    bool operator==(const ConvergenceConfig&) const = default;
};

struct ExperimentConfig {
    GeometryConfig geometry;
    TimeConfig time;
    DataConfig data;
    ParameterSpaceConfig parameter_space;
    MeasurementConfig measurement;
    InversionConfig inversion;
    ProbeConfig probe;
    HypothesisConfig hypotheses;
    EnergyConfig energy;
    ConvergenceConfig convergence;
    bool operator==(const ExperimentConfig&) const = default;
};

/// Throws ConfigError naming the offending key.
void validate(const ExperimentConfig& config);

/// Parse TOML text; omitted keys take defaults, unknown keys are rejected.
/// Throws ConfigError (with the key) or InputError (syntax, with `origin`).
ExperimentConfig parse_config_string(const std::string& text, const std::string& origin = "<string>");
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Complete TOML rendering; parse_config_string(to_toml(c)) == c.
std::string to_toml(const ExperimentConfig& config);

/// FNV-1a hash of the canonical TOML rendering, 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Replace every seed in the config.
void override_seeds(ExperimentConfig& config, std::uint64_t seed);

}  // namespace stokes_robin
