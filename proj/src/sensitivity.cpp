#include "stokes_robin/sensitivity.hpp"

#include "stokes_robin/error.hpp"
#include "stokes_robin/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace stokes_robin {

SensitivitySolution solve_sensitivity(const Discretization& disc, const RobinCoefficient& q,
                                      const StateTrajectory& forward, const RobinCoefficient& h) {
    const TimeGrid& grid = disc.grid();
    if (forward.source != &disc || !forward.steps ||
        static_cast<int>(forward.velocity.size()) != grid.steps() + 1 ||
        static_cast<int>(forward.steps->size()) != grid.steps()) {
        throw InputError("forward trajectory was computed on a different mesh or time grid");
    }
    if (forward.robin_coeffs.size() != q.size() || forward.robin_coeffs != q.coeffs()) {
        throw InputError("forward trajectory was computed with a different Robin coefficient");
    }
    if (!h.basis().same_layout(disc.basis())) throw InputError("direction basis does not match the discretization");

    const SaddlePointStepper& stepper = disc.stepper();
    const OutletRobinBlocks& outlet = disc.outlet();
    const int nv = stepper.num_velocity();
    const int np = stepper.num_pressure();
    const double inv_dt = 1.0 / grid.dt();

    SensitivitySolution out{StateTrajectory{}, h};
    StateTrajectory& traj = out.trajectory;
    traj.source = &disc;
    traj.steps = forward.steps;
    traj.robin_coeffs = forward.robin_coeffs;
    traj.velocity.push_back(Eigen::VectorXd::Zero(nv));
    traj.outlet_velocity.push_back(Eigen::VectorXd::Zero(outlet.size()));

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + np);
    for (int n = 0; n < grid.steps(); ++n) {
        const double t = grid.time(n + 1);
        const Eigen::VectorXd load = -(outlet.combine(h.spatial_weights(t)) * forward.outlet_velocity[n + 1]);
        rhs.setZero();
        rhs.head(nv) = inv_dt * (disc.ops().mass * traj.velocity.back());
        Eigen::VectorXd velocity_rhs = rhs.head(nv);
        outlet.scatter_add(load, velocity_rhs);
        rhs.head(nv) = velocity_rhs;
        const Eigen::VectorXd x = stepper.solve((*forward.steps)[n], rhs);
        if (!x.allFinite()) throw SolverError("non-finite sensitivity at time step " + std::to_string(n + 1));
        traj.velocity.push_back(x.head(nv));
        traj.pressure.push_back(x.tail(np));
        traj.outlet_velocity.push_back(outlet.gather(traj.velocity.back()));
    }
    return out;
}

MeasurementTrace directional_derivative(const Discretization& disc, const RobinCoefficient& q,
                                        const StateTrajectory& forward, const RobinCoefficient& h) {
    return extract_trace(solve_sensitivity(disc, q, forward, h).trajectory);
}

MeasurementTrace TraceJacobian::apply(const Eigen::VectorXd& coeffs) const {
    if (coeffs.size() != size()) throw InputError("coefficient vector does not match the Jacobian");
    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(columns[0].values().rows(), columns[0].values().cols());
    for (int j = 0; j < size(); ++j) values += coeffs[j] * columns[j].values();
    return {columns[0].metric(), std::move(values)};
}

Eigen::VectorXd TraceJacobian::adjoint_apply(const MeasurementTrace& r) const {
    Eigen::VectorXd out(size());
    for (int j = 0; j < size(); ++j) out[j] = columns[j].inner(r);
    return out;
}

TraceJacobian assemble_jacobian(const Discretization& disc, const RobinCoefficient& q,
                                const StateTrajectory& forward, const RobinBasis& basis, int threads) {
    if (!basis.same_layout(disc.basis())) throw InputError("Jacobian basis does not match the discretization");
    auto shared = std::make_shared<const RobinBasis>(basis);
    const int m = basis.size();
    std::vector<std::optional<MeasurementTrace>> slots(m);
    parallel_for(m, threads, [&](int j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
        e[j] = 1.0;
        try {
            slots[j] = directional_derivative(disc, q, forward, RobinCoefficient(shared, e));
        } catch (const SolverError& err) {
            throw SolverError("Jacobian column " + std::to_string(j) + ": " + err.what());
        }
    });
    TraceJacobian jac;
    jac.columns.reserve(m);
    for (auto& s : slots) jac.columns.push_back(std::move(*s));
    jac.gram.resize(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) jac.gram(i, j) = jac.gram(j, i) = jac.columns[i].inner(jac.columns[j]);
    }
    return jac;
}

TraceJacobian assemble_jacobian(const Discretization& disc, const RobinCoefficient& q,
                                const StateTrajectory& forward, int threads) {
    return assemble_jacobian(disc, q, forward, disc.basis(), threads);
}

GramSpectrum gram_spectrum(const TraceJacobian& jacobian) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobian.gram, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw SolverError("Gram eigenvalue computation failed");
    return {eig.eigenvalues()};
}

double loglog_slope(const std::vector<double>& scales, const std::vector<double>& values) {
    if (scales.size() != values.size() || scales.size() < 2) throw InputError("slope needs at least two points");
    const int n = static_cast<int>(scales.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        if (!(scales[i] > 0.0) || !(values[i] > 0.0)) throw InputError("log-log slope needs positive values");
        const double x = std::log(scales[i]);
        const double y = std::log(values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

TaylorReport taylor_remainder_test(const Discretization& disc, const PreparedData& data, const RobinCoefficient& q,
                                   const RobinCoefficient& h, const std::vector<double>& scales, int threads) {
    if (h.coeffs().lpNorm<Eigen::Infinity>() == 0.0) throw InputError("Taylor test needs a nonzero direction");
    if (scales.size() < 2) throw InputError("Taylor test needs at least two scales");
    for (double e : scales) {
        if ((q.coeffs() + e * h.coeffs()).minCoeff() <= 0.0) {
            throw InputError("q + e h leaves the positive cone for e = " + std::to_string(e));
        }
    }
    const StateTrajectory base = solve_forward(disc, data, q);
    const MeasurementTrace t0 = extract_trace(base);
    const MeasurementTrace dt = directional_derivative(disc, q, base, h);

    TaylorReport report;
    report.scales = scales;
    report.remainders.assign(scales.size(), 0.0);
    report.differences.assign(scales.size(), 0.0);
    parallel_for(static_cast<int>(scales.size()), threads, [&](int i) {
        const double e = scales[i];
        const MeasurementTrace te = extract_trace(solve_forward(disc, data, q.with_coeffs(q.coeffs() + e * h.coeffs())));
        const MeasurementTrace diff = te - t0;
        report.differences[i] = diff.norm();
        report.remainders[i] = (diff - dt * e).norm();
    });
    const double floor = 1e-12 * t0.norm();
    for (double r : report.remainders) report.saturated = report.saturated || r <= floor;
    if (!report.saturated) report.remainder_slope = loglog_slope(scales, report.remainders);
    report.difference_slope = loglog_slope(scales, report.differences);
    return report;
}

ContinuityReport dT_continuity_test(const Discretization& disc, const PreparedData& data, const RobinCoefficient& q,
                                    const RobinCoefficient& l, const std::vector<double>& scales,
                                    const std::vector<int>& probes, int threads) {
    if (probes.empty()) throw InputError("continuity test needs at least one probe direction");
    if (scales.size() < 2) throw InputError("continuity test needs at least two scales");
    const double l_norm = l.coeffs().lpNorm<Eigen::Infinity>();
    if (l_norm == 0.0) throw InputError("continuity test needs a nonzero perturbation");
    for (double e : scales) {
        if ((q.coeffs() + e * l.coeffs()).minCoeff() <= 0.0) {
            throw InputError("q + e l leaves the positive cone for e = " + std::to_string(e));
        }
    }
    const int m = q.size();
    auto probe_direction = [&](int j) {
        if (j < 0 || j >= m) throw InputError("probe index out of range");
        Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
        e[j] = 1.0;
        return q.with_coeffs(e);
    };
    const StateTrajectory base = solve_forward(disc, data, q);
    std::vector<MeasurementTrace> base_columns;
    for (int j : probes) base_columns.push_back(directional_derivative(disc, q, base, probe_direction(j)));

    ContinuityReport report;
    report.scales.resize(scales.size());
    report.estimates.assign(scales.size(), 0.0);
    parallel_for(static_cast<int>(scales.size()), threads, [&](int i) {
        const RobinCoefficient shifted = q.with_coeffs(q.coeffs() + scales[i] * l.coeffs());
        const StateTrajectory traj = solve_forward(disc, data, shifted);
        double worst = 0.0;
        for (std::size_t p = 0; p < probes.size(); ++p) {
            const RobinCoefficient h = probe_direction(probes[p]);
            const double h_norm = linf_distance(h, h.with_coeffs(Eigen::VectorXd::Zero(m)));
            const MeasurementTrace col = directional_derivative(disc, shifted, traj, h);
            worst = std::max(worst, (col - base_columns[p]).norm() / h_norm);
        }
        report.estimates[i] = worst;
    });
    for (std::size_t i = 0; i < scales.size(); ++i) report.scales[i] = scales[i] * l_norm;

    std::vector<std::size_t> order(scales.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return report.scales[a] > report.scales[b]; });
    for (std::size_t k = 1; k < order.size(); ++k) {
        report.monotone = report.monotone && report.estimates[order[k]] <= report.estimates[order[k - 1]];
    }
    report.slope = loglog_slope(report.scales, report.estimates);
    return report;
}

}  // namespace stokes_robin
