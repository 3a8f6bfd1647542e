#pragma once

#include "stokes_robin/config.hpp"
#include "stokes_robin/io.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace stokes_robin {

ProblemData make_problem_data(const ExperimentConfig& config);
ManufacturedSolution make_manufactured(const ExperimentConfig& config);
ConvergenceOptions make_convergence_options(const ExperimentConfig& config, int threads);
RobinCoefficient make_coefficient(const CoefficientSpec& spec, const std::shared_ptr<const RobinBasis>& basis,
                                  const AdmissibleSet& K);

/// Mesh, basis, discretization and prepared data of a configuration.
struct Experiment {
    ExperimentConfig config;
    std::shared_ptr<const Mesh> coarse;
    std::shared_ptr<const Mesh> mesh;
    std::shared_ptr<const RobinBasis> basis;
    std::unique_ptr<Discretization> disc;
    ProblemData data;
    PreparedData prepared;
    AdmissibleSet admissible;

    explicit Experiment(const ExperimentConfig& config);
    RobinCoefficient q_true() const { return make_coefficient(config.inversion.q_true, basis, admissible); }
    RobinCoefficient q_init() const { return make_coefficient(config.inversion.q_init, basis, admissible); }
};

/// Measurement for the inversion: the CSV file when given, otherwise
/// synthetic data from q_true (inverse crime, or refined grids when
/// `crime_free`), with relative Gaussian noise `noise_level`.
MeasurementTrace measured_trace(const Experiment& ex, const std::optional<std::filesystem::path>& trace_csv);

/// Subcommand names accepted by run_subcommand.
inline constexpr const char* kSubcommands[] = {"forward",         "sensitivity",      "invert",
                                               "probe-stability", "check-hypotheses", "convergence"};

struct RunOptions {
    std::filesystem::path out = "results";
    int threads = 1;
    std::optional<std::filesystem::path> trace_csv;  ///< `invert` only
};

/// Runs one subcommand and writes its artifacts into out / config_hash(config).
/// Returns the artifact directory. Throws InputError for an unknown name.
std::filesystem::path run_subcommand(const std::string& name, const ExperimentConfig& config, const RunOptions& options);

}  // namespace stokes_robin
