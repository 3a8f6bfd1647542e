#pragma once

#include "stokes_robin/forward.hpp"

#include <limits>
#include <vector>

namespace stokes_robin {

/// Linearized solve in direction h: zero initial value, zero g and kappa,
/// Robin load -h u with u the forward velocity at t_{n+1}.
struct SensitivitySolution {
    StateTrajectory trajectory;
    RobinCoefficient direction;
};

/// `forward` must come from `solve_forward(disc, ..., q)` with the same q;
/// its step factorizations are reused.
SensitivitySolution solve_sensitivity(const Discretization& disc, const RobinCoefficient& q,
                                      const StateTrajectory& forward, const RobinCoefficient& h);

/// Trace of the linearized solve, i.e. dT_q h.
MeasurementTrace directional_derivative(const Discretization& disc, const RobinCoefficient& q,
                                        const StateTrajectory& forward, const RobinCoefficient& h);

/// Columns dT_q phi_j for every function of a basis and their Gram matrix
/// G_ij = <column_i, column_j> in the space-time trace metric.
struct TraceJacobian {
    std::vector<MeasurementTrace> columns;
    Eigen::MatrixXd gram;

    int size() const { return static_cast<int>(columns.size()); }
    /// sum_j coeffs_j * column_j
    MeasurementTrace apply(const Eigen::VectorXd& coeffs) const;
    /// Vector of <column_j, r>.
    Eigen::VectorXd adjoint_apply(const MeasurementTrace& r) const;
};

/// Jacobian with respect to the coefficients of `basis` (which must share the
/// spatial and time layout of the discretization's basis). Columns are
/// computed in parallel on `threads` workers.
TraceJacobian assemble_jacobian(const Discretization& disc, const RobinCoefficient& q,
                                const StateTrajectory& forward, const RobinBasis& basis, int threads = 1);
TraceJacobian assemble_jacobian(const Discretization& disc, const RobinCoefficient& q,
                                const StateTrajectory& forward, int threads = 1);

struct GramSpectrum {
    Eigen::VectorXd eigenvalues;  ///< ascending
    double min() const { return eigenvalues[0]; }
    double max() const { return eigenvalues[eigenvalues.size() - 1]; }
    double condition() const { return min() > 0.0 ? max() / min() : std::numeric_limits<double>::infinity(); }
    /// Injective when the smallest eigenvalue clears `relative_tolerance * max`.
    bool injective(double relative_tolerance = kInjectivityTolerance) const {
        return min() > relative_tolerance * max();
    }
    static constexpr double kInjectivityTolerance = 1e-14;
};

GramSpectrum gram_spectrum(const TraceJacobian& jacobian);

/// Least-squares slope of log(values) against log(scales).
double loglog_slope(const std::vector<double>& scales, const std::vector<double>& values);

struct TaylorReport {
    std::vector<double> scales;
    std::vector<double> remainders;   ///< ||T(q+eh) - T(q) - e dT_q h||
    std::vector<double> differences;  ///< ||T(q+eh) - T(q)||
    double remainder_slope = 0.0;
    double difference_slope = 0.0;
    bool saturated = false;  ///< some remainder fell below the round-off floor
};

/// Second-order Taylor check of the forward map along h. Requires h != 0 and
/// q + e h admissible (positive) for every scale.
TaylorReport taylor_remainder_test(const Discretization& disc, const PreparedData& data, const RobinCoefficient& q,
                                   const RobinCoefficient& h, const std::vector<double>& scales, int threads = 1);

struct ContinuityReport {
    std::vector<double> scales;     ///< ||l||_inf of each perturbation
    std::vector<double> estimates;  ///< max over probes of ||(dT_{q+l} - dT_q) h|| / ||h||_inf
    double slope = 0.0;
    bool monotone = true;           ///< estimates non-increasing as ||l|| decreases
};

/// Probe-set estimate of |||dT_{q + e l} - dT_q||| for each scale e, using the
/// basis functions as probe directions.
ContinuityReport dT_continuity_test(const Discretization& disc, const PreparedData& data, const RobinCoefficient& q,
                                    const RobinCoefficient& l, const std::vector<double>& scales,
                                    const std::vector<int>& probes, int threads = 1);

}  // namespace stokes_robin
