#pragma once

#include "stokes_robin/fem.hpp"
#include "stokes_robin/parameter_space.hpp"
#include "stokes_robin/time_stepping.hpp"

#include <memory>
#include <vector>

namespace stokes_robin {

class TraceMetric;

/// Data of the Robin-Stokes system. Empty functions are zero.
struct ProblemData {
    StaticVectorField initial_velocity;  ///< u0, divergence free
    VectorField inlet_traction;          ///< g on the inlet
    VectorField robin_load;              ///< kappa on the outlet
    VectorField body_force;              ///< f; zero except for manufactured solutions

    /// All fields multiplied by alpha.
    ProblemData scaled(double alpha) const;
};

/// Everything that depends on mesh, time grid, Robin basis and measurement
/// window but not on q or on the data. Immutable and shareable.
class Discretization {
public:
    Discretization(std::shared_ptr<const Mesh> mesh, TimeGrid grid, std::shared_ptr<const RobinBasis> basis,
                   double window_begin, double window_end);
    Discretization(const Discretization&) = delete;
    Discretization& operator=(const Discretization&) = delete;

    const Mesh& mesh() const { return spaces_.mesh(); }
    const std::shared_ptr<const Mesh>& mesh_ptr() const { return spaces_.mesh_ptr(); }
    const FunctionSpaces& spaces() const { return spaces_; }
    const AssembledOperators& ops() const { return ops_; }
    const TimeGrid& grid() const { return grid_; }
    const RobinBasis& basis() const { return *basis_; }
    const std::shared_ptr<const RobinBasis>& basis_ptr() const { return basis_; }
    const OutletRobinBlocks& outlet() const { return outlet_; }
    const SaddlePointStepper& stepper() const { return *stepper_; }
    const TraceSpace& trace_space() const { return trace_; }
    const std::shared_ptr<const TraceMetric>& trace_metric() const { return metric_; }

    /// Dense Robin block of q at time t on the outlet unknowns.
    Eigen::MatrixXd robin_block(const RobinCoefficient& q, double t) const;

private:
    FunctionSpaces spaces_;
    AssembledOperators ops_;
    TimeGrid grid_;
    std::shared_ptr<const RobinBasis> basis_;
    OutletRobinBlocks outlet_;
    std::unique_ptr<SaddlePointStepper> stepper_;
    TraceSpace trace_;
    std::shared_ptr<const TraceMetric> metric_;
};

/// Data norms entering the energy estimate.
struct DataNorms {
    double initial = 0.0;      ///< ||u0||_{L2(Omega)}
    double inlet = 0.0;        ///< ||g||_{L2(0,T;L2(inlet))}
    double robin_load = 0.0;   ///< ||kappa||_{L2(0,T;L2(outlet))}
    double data_bound() const { return initial + inlet; }  ///< M1
    double total() const { return initial + inlet + robin_load; }
};

/// Data evaluated on a discretization: interpolated u0 and the load vector at
/// every step time t_1..t_{n_t}. Independent of q.
struct PreparedData {
    Eigen::VectorXd initial;             ///< free unknowns
    Eigen::VectorXd initial_full;
    std::vector<Eigen::VectorXd> loads;  ///< loads[n-1] at t_n, free unknowns
    DataNorms norms;
};

PreparedData prepare_data(const Discretization& disc, const ProblemData& data);

/// Throws InputError when g vanishes identically on the inlet at some time node.
void check_inlet_flux_nonvanishing(const Discretization& disc, const ProblemData& data);

/// Throws InputError when div u0 is not (numerically) zero in the channel.
void check_initial_divergence(const ChannelGeometry& geometry, const StaticVectorField& u0);

/// Discrete velocity/pressure history of one solve.
struct StateTrajectory {
    std::vector<Eigen::VectorXd> velocity;         ///< u^0..u^{n_t}, free unknowns
    std::vector<Eigen::VectorXd> pressure;         ///< p^1..p^{n_t} (index n-1)
    std::vector<Eigen::VectorXd> outlet_velocity;  ///< outlet unknowns of u^n
    /// Step factorizations for the q of this solve; reused by the sensitivity solver.
    std::shared_ptr<const std::vector<SaddlePointStepper::Step>> steps;
    Eigen::VectorXd robin_coeffs;  ///< coefficients of the q used for `steps`
    const Discretization* source = nullptr;
};

/// Space-time L2 inner product on (0, T) x window: trapezoidal rule in time,
/// boundary mass in space.
class TraceMetric {
public:
    TraceMetric(const TraceSpace& space, const TimeGrid& grid);

    double inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) const;
    const Eigen::MatrixXd& mass() const { return mass_; }
    const std::vector<double>& weights() const { return weights_; }

private:
    Eigen::MatrixXd mass_;
    std::vector<double> weights_;
};

/// Velocity restricted to the measurement window at every time node
/// (one column per node), with its space-time L2 metric.
class MeasurementTrace {
public:
    MeasurementTrace(std::shared_ptr<const TraceMetric> metric, Eigen::MatrixXd values);

    const Eigen::MatrixXd& values() const { return values_; }
    const std::shared_ptr<const TraceMetric>& metric() const { return metric_; }

    double inner(const MeasurementTrace& other) const { return metric_->inner(values_, other.values_); }
    double norm() const;

    MeasurementTrace operator-(const MeasurementTrace& other) const;
    MeasurementTrace operator+(const MeasurementTrace& other) const;
    MeasurementTrace operator*(double alpha) const;

private:
    std::shared_ptr<const TraceMetric> metric_;
    Eigen::MatrixXd values_;
};

StateTrajectory solve_forward(const Discretization& disc, const PreparedData& data, const RobinCoefficient& q);
StateTrajectory solve_forward(const Discretization& disc, const ProblemData& data, const RobinCoefficient& q);

MeasurementTrace extract_trace(const StateTrajectory& trajectory);
MeasurementTrace extract_trace(const StateTrajectory& trajectory, const TraceSpace& space,
                               std::shared_ptr<const TraceMetric> metric);

/// sqrt(sum_n w_n u_n^T (M + A) u_n): discrete L2(0,T;H1) norm.
double l2h1_norm(const Discretization& disc, const StateTrajectory& trajectory);

/// max_n ||B u^n|| / ||u^n||_M over n >= 1 (steps with zero velocity skipped).
double max_divergence_residual(const Discretization& disc, const StateTrajectory& trajectory);

struct EnergyReport {
    std::vector<double> ratios;
    double max_ratio = 0.0;
    double min_ratio = 0.0;
    double spread() const { return max_ratio / min_ratio; }
    DataNorms norms;
};

/// ||u||_{L2 H1} / (||u0|| + ||g|| + ||kappa||) for every sampled q.
EnergyReport verify_energy_estimate(const Discretization& disc, const ProblemData& data,
                                    const std::vector<RobinCoefficient>& samples, int threads = 1);

}  // namespace stokes_robin
