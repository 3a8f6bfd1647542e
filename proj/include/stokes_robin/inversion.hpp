#pragma once

#include "stokes_robin/sensitivity.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stokes_robin {

/// Recover q in K from a measured trace on the discretization's window.
struct InverseProblem {
    const Discretization* disc = nullptr;
    PreparedData data;
    MeasurementTrace measured;
    AdmissibleSet admissible;
    double regularization = 0.0;  ///< lambda_reg added to the damping of the normal equations
    double noise_level = 0.0;     ///< informational: relative noise in `measured`

    InverseProblem(const Discretization& discretization, PreparedData prepared, MeasurementTrace measurement,
                   AdmissibleSet K, double lambda_reg = 0.0);
};

struct GaussNewtonOptions {
    int max_iterations = 50;
    double step_tolerance = 1e-8;      ///< on ||delta||_inf of the accepted step
    double gradient_tolerance = 1e-10; ///< relative to the initial gradient norm
    double initial_damping = 1e-7;     ///< times max diag(J^T W J)
    /// Smallest factor applied to the damping after a successful step.
    double damping_decrease_floor = 0.1;
    /// Second-order correction of each step along the curvature of the
    /// forward map, estimated by one extra forward solve.
    bool geodesic_acceleration = true;
    int max_escalations = 10;          ///< consecutive damping increases before giving up
    int threads = 1;
};

struct IterationRecord {
    int iteration = 0;
    double misfit = 0.0;
    double gradient_norm = 0.0;
    double step_norm = 0.0;
    double damping = 0.0;
    bool accepted = false;
    Eigen::VectorXd coeffs;  ///< iterate after this record (unchanged when rejected)
};

struct InversionResult {
    RobinCoefficient recovered;
    std::vector<IterationRecord> history;
    bool converged = false;
    std::string reason;
    int iterations = 0;  ///< accepted Gauss-Newton steps
};

/// 0.5 ||T(q) - measured||^2.
double misfit(const InverseProblem& problem, const RobinCoefficient& q);

/// Projected Levenberg-Marquardt Gauss-Newton:
///   (J^T W J + (lambda_LM + lambda_reg) I) delta = J^T W (measured - T(q_k)),
///   q_{k+1} = clamp(q_k + delta) when the misfit decreases.
/// Damping follows the gain ratio. Throws SolverError after too many damping
/// escalations in a row; other non-convergence is reported in the result.
InversionResult gauss_newton_solve(const InverseProblem& problem, const RobinCoefficient& q_init,
                                   const GaussNewtonOptions& options = {});

/// Adds i.i.d. Gaussian noise rescaled to space-time norm `level * ||trace||`.
MeasurementTrace add_noise(const MeasurementTrace& trace, double level, std::uint64_t seed);

/// Trace of q_true computed on a once-refined mesh with twice as many time
/// steps, sampled at the window nodes and time nodes of `disc`. Data for the
/// crime-free inversion mode.
MeasurementTrace crime_free_trace(const Discretization& disc, const ProblemData& data, const RobinCoefficient& q_true);

/// Default noisy-data regularization 1e-6 * trace(J^T W J) / M.
double default_regularization(const TraceJacobian& jacobian);

}  // namespace stokes_robin
