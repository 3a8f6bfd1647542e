#include "stokes_robin/time_stepping.hpp"

#include "stokes_robin/error.hpp"

namespace stokes_robin {

TimeGrid::TimeGrid(double final_time, int steps) : final_time_(final_time), steps_(steps) {
    if (!(final_time > 0.0)) throw InputError("final time must be positive");
    if (steps < 1) throw InputError("time step count must be at least 1");
}

SparseMatrix assemble_step_matrix(const AssembledOperators& ops, double dt, const SparseMatrix& robin) {
    const int nv = static_cast<int>(ops.mass.rows());
    const int np = static_cast<int>(ops.divergence.rows());
    const SparseMatrix velocity = ops.mass / dt + ops.stiffness + robin;
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(velocity.nonZeros() + 2 * ops.divergence.nonZeros());
    for (int k = 0; k < velocity.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(velocity, k); it; ++it) triplets.emplace_back(it.row(), it.col(), it.value());
    }
    for (int k = 0; k < ops.divergence.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(ops.divergence, k); it; ++it) {
            triplets.emplace_back(nv + it.row(), it.col(), it.value());
            triplets.emplace_back(it.col(), nv + it.row(), it.value());
        }
    }
    SparseMatrix k(nv + np, nv + np);
    k.setFromTriplets(triplets.begin(), triplets.end());
    k.makeCompressed();
    return k;
}

SaddlePointStepper::SaddlePointStepper(const AssembledOperators& ops, double dt, const OutletRobinBlocks& outlet)
    : nv_(static_cast<int>(ops.mass.rows())),
      np_(static_cast<int>(ops.divergence.rows())),
      dt_(dt),
      outlet_(outlet.dofs()) {
    if (!(dt > 0.0)) throw InputError("time step must be positive");
    const SparseMatrix empty(nv_, nv_);
    lu_.compute(assemble_step_matrix(ops, dt, empty));
    if (lu_.info() != Eigen::Success) {
        throw SolverError("sparse LU factorization of the Stokes step matrix failed: " + lu_.lastErrorMessage());
    }
    const int m = static_cast<int>(outlet_.size());
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(nv_ + np_, m);
    for (int k = 0; k < m; ++k) e(outlet_[k], k) = 1.0;
    z_ = lu_.solve(e);
    gram_.resize(m, m);
    for (int k = 0; k < m; ++k) gram_.row(k) = z_.row(outlet_[k]);
}

SaddlePointStepper::Step SaddlePointStepper::prepare(const Eigen::MatrixXd& robin_block) const {
    const int m = static_cast<int>(outlet_.size());
    Step step;
    step.robin = robin_block;
    step.capacitance.compute(Eigen::MatrixXd::Identity(m, m) + robin_block * gram_);
    return step;
}

Eigen::VectorXd SaddlePointStepper::solve(const Step& step, const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd y = lu_.solve(rhs);
    const int m = static_cast<int>(outlet_.size());
    if (m == 0) return y;
    Eigen::VectorXd yo(m);
    for (int k = 0; k < m; ++k) yo[k] = y[outlet_[k]];
    const Eigen::VectorXd correction = step.capacitance.solve(step.robin * yo);
    y.noalias() -= z_ * correction;
    return y;
}

}  // namespace stokes_robin
