#pragma once

#include "stokes_robin/fem.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <vector>

namespace stokes_robin {

/// Uniform grid t_n = n T / n_t, n = 0..n_t, with t_{n_t} = T exactly.
class TimeGrid {
public:
    TimeGrid(double final_time, int steps);

    double final_time() const { return final_time_; }
    int steps() const { return steps_; }
    double dt() const { return final_time_ / steps_; }
    double time(int n) const { return n == steps_ ? final_time_ : final_time_ * n / steps_; }
    /// Weight of node n in the composite trapezoidal rule on [0, T].
    double trapezoid_weight(int n) const { return (n == 0 || n == steps_) ? 0.5 * dt() : dt(); }

    bool operator==(const TimeGrid&) const = default;

private:
    double final_time_;
    int steps_;
};

/// Implicit Euler saddle-point solver for
///   [M/dt + A + E R E^T, B^T; B, 0] (u, p) = (rhs, 0)
/// where R is a dense Robin block on the outlet unknowns E.
///
/// The Robin-free matrix K0 is factorized once (sparse LU); every step then
/// applies the Woodbury identity with the precomputed Z = K0^{-1} E, which
/// costs one back-substitution plus a dense solve of outlet size.
class SaddlePointStepper {
public:
    SaddlePointStepper(const AssembledOperators& ops, double dt, const OutletRobinBlocks& outlet);
    SaddlePointStepper(const SaddlePointStepper&) = delete;
    SaddlePointStepper& operator=(const SaddlePointStepper&) = delete;

    struct Step {
        Eigen::MatrixXd robin;
        Eigen::PartialPivLU<Eigen::MatrixXd> capacitance;
    };

    /// Factorizes the capacitance matrix I + R E^T K0^{-1} E for one Robin block.
    Step prepare(const Eigen::MatrixXd& robin_block) const;
    /// Solves the step system; `rhs` stacks velocity (free) and pressure rows.
    Eigen::VectorXd solve(const Step& step, const Eigen::VectorXd& rhs) const;

    int num_velocity() const { return nv_; }
    int num_pressure() const { return np_; }
    double dt() const { return dt_; }

private:
    int nv_;
    int np_;
    double dt_;
    std::vector<int> outlet_;
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
    Eigen::MatrixXd z_;
    Eigen::MatrixXd gram_;  // E^T Z
};

/// Assembled step matrix with a sparse Robin term on free velocity unknowns.
SparseMatrix assemble_step_matrix(const AssembledOperators& ops, double dt, const SparseMatrix& robin);

}  // namespace stokes_robin
