#include "stokes_robin/inversion.hpp"

#include "stokes_robin/error.hpp"
#include "stokes_robin/log.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace stokes_robin {

InverseProblem::InverseProblem(const Discretization& discretization, PreparedData prepared,
                               MeasurementTrace measurement, AdmissibleSet K, double lambda_reg)
    : disc(&discretization),
      data(std::move(prepared)),
      measured(std::move(measurement)),
      admissible(K),
      regularization(lambda_reg) {
    const auto& metric = *discretization.trace_metric();
    if (measured.values().rows() != metric.mass().rows() ||
        measured.values().cols() != static_cast<Eigen::Index>(metric.weights().size())) {
        throw InputError("measured trace does not match the measurement window and time grid");
    }
    if (regularization < 0.0) throw InputError("regularization weight must be non-negative");
}

double misfit(const InverseProblem& problem, const RobinCoefficient& q) {
    const MeasurementTrace r = extract_trace(solve_forward(*problem.disc, problem.data, q)) - problem.measured;
    return 0.5 * r.inner(r);
}

double default_regularization(const TraceJacobian& jacobian) {
    return 1e-6 * jacobian.gram.trace() / jacobian.size();
}

InversionResult gauss_newton_solve(const InverseProblem& problem, const RobinCoefficient& q_init,
                                   const GaussNewtonOptions& options) {
    const Discretization& disc = *problem.disc;
    const AdmissibleSet& K = problem.admissible;
    if (!K.contains(q_init)) throw InputError("initial Robin coefficient is outside the admissible box");

    InversionResult result{q_init, {}, false, "", 0};
    RobinCoefficient q = q_init;
    StateTrajectory traj = solve_forward(disc, problem.data, q);
    MeasurementTrace residual = problem.measured - extract_trace(traj);  // measured - T(q)
    double f = 0.5 * residual.inner(residual);
    const double data_norm = problem.measured.norm();

    double damping = -1.0;
    double nu = 2.0;
    double initial_gradient = -1.0;
    int escalations = 0;

    for (int k = 0; k < options.max_iterations; ++k) {
        const TraceJacobian jac = assemble_jacobian(disc, q, traj, options.threads);
        const Eigen::VectorXd gradient = jac.adjoint_apply(residual);  // J^T W r, minus the misfit gradient
        const double gnorm = gradient.norm();
        if (initial_gradient < 0.0) initial_gradient = gnorm;
        if (damping < 0.0) damping = options.initial_damping * jac.gram.diagonal().maxCoeff();

        IterationRecord rec{k, f, gnorm, 0.0, damping, false, q.coeffs()};
        // Residual at round-off level: data reproduced exactly.
        const bool exact = std::sqrt(2.0 * f) <= 1e-14 * data_norm;
        if (exact || (gnorm <= options.gradient_tolerance * initial_gradient && k > 0) || gnorm == 0.0) {
            result.history.push_back(rec);
            result.converged = true;
            result.reason = exact ? "misfit at round-off level" : "gradient below tolerance";
            break;
        }

        bool accepted = false;
        while (!accepted) {
            // Coordinates sitting on a bound with the descent direction pointing
            // outward are frozen; the damped system is solved on the others.
            const int m = q.size();
            std::vector<int> free;
            for (int i = 0; i < m; ++i) {
                const double c = q.coeffs()[i];
                const bool at_lower = c <= K.lower && gradient[i] < 0.0;
                const bool at_upper = c >= K.upper && gradient[i] > 0.0;
                if (!at_lower && !at_upper) free.push_back(i);
            }
            if (free.empty()) {
                result.history.push_back(rec);
                result.converged = true;
                result.reason = "stationary on the boundary of the admissible box";
                result.recovered = q;
                return result;
            }
            const int nf = static_cast<int>(free.size());
            Eigen::MatrixXd normal(nf, nf);
            Eigen::VectorXd rhs(nf);
            for (int a = 0; a < nf; ++a) {
                rhs[a] = gradient[free[a]];
                for (int b = 0; b < nf; ++b) normal(a, b) = jac.gram(free[a], free[b]);
            }
            normal.diagonal().array() += damping + problem.regularization;
            Eigen::LLT<Eigen::MatrixXd> llt(normal);
            if (llt.info() != Eigen::Success) {
                if (++escalations > options.max_escalations) {
                    throw SolverError("damped normal equations stayed singular after " +
                                      std::to_string(options.max_escalations) + " damping increases");
                }
                damping = damping > 0.0 ? damping * 10.0 : 1e-12 * jac.gram.diagonal().maxCoeff();
                continue;
            }
            const Eigen::VectorXd reduced = llt.solve(rhs);
            Eigen::VectorXd delta = Eigen::VectorXd::Zero(m);
            for (int a = 0; a < nf; ++a) delta[free[a]] = reduced[a];
            if (options.geodesic_acceleration) {
                // Directional second derivative of the forward map along delta by a
                // one-sided difference; the probe point must stay admissible.
                constexpr double probe = 0.1;
                const RobinCoefficient q_probe = q.with_coeffs(q.coeffs() + probe * delta);
                if (K.contains(q_probe)) {
                    const MeasurementTrace current = problem.measured - residual;
                    const MeasurementTrace curvature =
                        (extract_trace(solve_forward(disc, problem.data, q_probe)) - current -
                         jac.apply(delta) * probe) *
                        (2.0 / (probe * probe));
                    const Eigen::VectorXd jc = jac.adjoint_apply(curvature);
                    Eigen::VectorXd reduced_jc(nf);
                    for (int a = 0; a < nf; ++a) reduced_jc[a] = jc[free[a]];
                    const Eigen::VectorXd reduced_acc = -llt.solve(reduced_jc);
                    Eigen::VectorXd acceleration = Eigen::VectorXd::Zero(m);
                    for (int a = 0; a < nf; ++a) acceleration[free[a]] = reduced_acc[a];
                    // Keep the correction only while it is small against the step.
                    if (2.0 * acceleration.norm() <= 0.75 * delta.norm()) delta += 0.5 * acceleration;
                }
            }
            const RobinCoefficient trial = project_onto_K(q.with_coeffs(q.coeffs() + delta), K);
            const Eigen::VectorXd step = trial.coeffs() - q.coeffs();
            const double step_norm = step.lpNorm<Eigen::Infinity>();
            rec.step_norm = step_norm;
            if (step_norm == 0.0) {
                result.history.push_back(rec);
                result.converged = true;
                result.reason = "projected step vanished";
                result.recovered = q;
                return result;
            }

            StateTrajectory trial_traj = solve_forward(disc, problem.data, trial);
            MeasurementTrace trial_residual = problem.measured - extract_trace(trial_traj);
            const double trial_f = 0.5 * trial_residual.inner(trial_residual);
            // Predicted decrease of the Gauss-Newton model along the projected step.
            const double predicted = step.dot(gradient) - 0.5 * step.dot(jac.gram * step);
            const double rho = predicted > 0.0 ? (f - trial_f) / predicted : -1.0;

            if (trial_f < f) {
                accepted = true;
                escalations = 0;
                q = trial;
                traj = std::move(trial_traj);
                residual = std::move(trial_residual);
                f = trial_f;
                if (rho > 0.0) {
                    damping *= std::max(options.damping_decrease_floor, 1.0 - std::pow(2.0 * rho - 1.0, 3));
                }
                nu = 2.0;
                rec.accepted = true;
                rec.damping = damping;
                rec.coeffs = q.coeffs();
                result.history.push_back(rec);
                ++result.iterations;
                if (step_norm <= options.step_tolerance) {
                    result.converged = true;
                    result.reason = "step below tolerance";
                }
            } else {
                rec.accepted = false;
                rec.coeffs = q.coeffs();
                result.history.push_back(rec);
                if (++escalations > options.max_escalations) {
                    result.reason = "no decrease after " + std::to_string(options.max_escalations) +
                                    " damping increases";
                    result.recovered = q;
                    log_warning("Gauss-Newton stalled: " + result.reason);
                    return result;
                }
                damping *= nu;
                nu *= 2.0;
                rec.damping = damping;
            }
        }
        if (result.converged) break;
    }
    if (!result.converged && result.reason.empty()) result.reason = "maximum iterations reached";
    result.recovered = q;
    return result;
}

MeasurementTrace crime_free_trace(const Discretization& disc, const ProblemData& data, const RobinCoefficient& q_true) {
    const TraceSpace& coarse = disc.trace_space();
    const Discretization fine(std::make_shared<const Mesh>(refine(disc.mesh())),
                              TimeGrid(disc.grid().final_time(), 2 * disc.grid().steps()), disc.basis_ptr(),
                              coarse.arc_begin(), coarse.arc_end());
    const MeasurementTrace fine_trace = extract_trace(solve_forward(fine, data, q_true));

    // Every coarse window node is also a node of the refined window.
    const auto& fine_points = fine.trace_space().node_points();
    const auto& coarse_points = coarse.node_points();
    const int nf = static_cast<int>(fine_points.size());
    const int nc = static_cast<int>(coarse_points.size());
    std::vector<int> match(nc, -1);
    for (int i = 0; i < nc; ++i) {
        for (int k = 0; k < nf; ++k) {
            if ((fine_points[k] - coarse_points[i]).norm() <= 1e-12) match[i] = k;
        }
        if (match[i] < 0) throw SolverError("window node missing from the refined mesh");
    }
    Eigen::MatrixXd values(2 * nc, disc.grid().steps() + 1);
    for (int n = 0; n <= disc.grid().steps(); ++n) {
        for (int i = 0; i < nc; ++i) {
            values(i, n) = fine_trace.values()(match[i], 2 * n);
            values(nc + i, n) = fine_trace.values()(nf + match[i], 2 * n);
        }
    }
    return MeasurementTrace(disc.trace_metric(), std::move(values));
}

MeasurementTrace add_noise(const MeasurementTrace& trace, double level, std::uint64_t seed) {
    if (level < 0.0) throw InputError("noise level must be non-negative");
    if (level == 0.0) return trace;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd noise(trace.values().rows(), trace.values().cols());
    for (Eigen::Index j = 0; j < noise.cols(); ++j) {
        for (Eigen::Index i = 0; i < noise.rows(); ++i) noise(i, j) = normal(rng);
    }
    const MeasurementTrace raw(trace.metric(), noise);
    const double raw_norm = raw.norm();
    if (!(raw_norm > 0.0)) throw InputError("noise has zero norm on the measurement window");
    return trace + raw * (level * trace.norm() / raw_norm);
}

}  // namespace stokes_robin
