#pragma once

#include "stokes_robin/forward.hpp"

#include <vector>

namespace stokes_robin {

/// Smooth exact solution of the Robin-Stokes system on the channel:
///   u = theta(t) * curl(psi),  psi = A (2 + sin(pi x / L)) y^2 (H - y)^2,
///   p = theta(t) * P cos(pi x / L) cos(pi y / H),
///   theta(t) = 1 + omega_amp * sin(omega t).
/// u vanishes on the lateral walls and is divergence free; the body force,
/// inlet traction and outlet Robin load are derived from (u, p, q).
struct ManufacturedSolution {
    double length = 2.0;
    double height = 1.0;
    double amplitude = 1.0;           ///< A; zero gives the zero solution
    double pressure_amplitude = 1.0;  ///< P
    double time_amplitude = 0.5;
    double time_frequency = 6.283185307179586;

    double theta(double t) const;
    double theta_dot(double t) const;
    Point velocity(double t, const Point& x) const;
    Point velocity_time_derivative(double t, const Point& x) const;
    Eigen::Matrix2d velocity_gradient(double t, const Point& x) const;  ///< row c = grad u_c
    Point velocity_laplacian(double t, const Point& x) const;
    double pressure(double t, const Point& x) const;
    Point pressure_gradient(double t, const Point& x) const;

    /// f, g, kappa and u0 matching this solution for Robin coefficient q.
    ProblemData problem_data(const RobinCoefficient& q) const;
};

struct ConvergenceErrors {
    int level = 0;
    double h = 0.0;
    int time_steps = 0;
    double l2l2 = 0.0;   ///< ||u - u_h||_{L2(0,T;L2)}
    double l2h1 = 0.0;   ///< ||u - u_h||_{L2(0,T;H1)}
    double trace = 0.0;  ///< ||u - u_h||_{L2(0,T;L2(window))}
};

/// Discrete-in-time (trapezoidal over the grid nodes) error norms of a solve.
ConvergenceErrors manufactured_errors(const Discretization& disc, const StateTrajectory& trajectory,
                                      const ManufacturedSolution& exact);

struct ConvergenceOptions {
    int coarse_nx = 4;
    int coarse_ny = 2;
    int outlet_segments = 2;
    double final_time = 1.0;
    int levels = 3;              ///< spatial levels, refined once per level
    int base_time_steps = 8;     ///< n_t at level 0; multiplied by 4 per level (dt ~ h^2)
    int temporal_levels = 3;
    int temporal_mesh_level = 4; ///< refinements of the coarse mesh for the temporal study
    int temporal_base_steps = 8; ///< doubled per temporal level
    double window_begin = 0.0;
    double window_end = 1.0;
    double q_value = 1.0;        ///< constant Robin coefficient
    int threads = 1;
};

struct ConvergenceTable {
    std::vector<ConvergenceErrors> rows;
    std::vector<double> l2l2_rates;  ///< between consecutive rows
    std::vector<double> l2h1_rates;
    std::vector<double> trace_rates;
};

/// Observed rates log(e_k / e_{k+1}) / log(s_k / s_{k+1}) with s = h or dt.
/// Rates are NaN when both errors vanish.
ConvergenceTable make_table(std::vector<ConvergenceErrors> rows, bool temporal);

/// Spatial study with dt proportional to h^2. Throws InputError for fewer than two levels.
ConvergenceTable spatial_convergence(const ManufacturedSolution& exact, const ConvergenceOptions& options);
/// Temporal study on a fixed mesh, halving dt per level.
ConvergenceTable temporal_convergence(const ManufacturedSolution& exact, const ConvergenceOptions& options);

}  // namespace stokes_robin
