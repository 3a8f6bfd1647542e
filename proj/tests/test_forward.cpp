#include "stokes_robin/error.hpp"
#include "stokes_robin/forward.hpp"
#include "stokes_robin/manufactured.hpp"

#include <doctest.h>

#include <Eigen/SparseLU>

#include <cmath>
#include <numbers>

using namespace stokes_robin;

namespace {

struct Setup {
    std::shared_ptr<const RobinBasis> basis;
    std::unique_ptr<Discretization> disc;
};

Setup make_setup(int steps = 16, int refinements = 1) {
    const Mesh coarse = build_channel_mesh(2.0, 1.0, 4, 2, 2);
    Mesh fine = coarse;
    for (int r = 0; r < refinements; ++r) fine = refine(fine);
    Setup s;
    s.basis = std::make_shared<const RobinBasis>(RobinBasis::from_mesh(coarse, 1.0, 5));
    s.disc = std::make_unique<Discretization>(std::make_shared<const Mesh>(std::move(fine)), TimeGrid(1.0, steps),
                                              s.basis, 0.0, 1.0);
    return s;
}

Point poiseuille(const Point& x) { return Point(4.0 * x.y() * (1.0 - x.y()), 0.0); }

ProblemData pulsatile_data() {
    ProblemData d;
    d.initial_velocity = poiseuille;
    d.inlet_traction = [](double t, const Point& x) {
        return Point((1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * t)) * 4.0 * x.y() * (1.0 - x.y()), 0.0);
    };
    return d;
}

double max_difference(const StateTrajectory& a, const StateTrajectory& b) {
    double d = 0.0;
    for (std::size_t n = 0; n < a.velocity.size(); ++n) d = std::max(d, (a.velocity[n] - b.velocity[n]).cwiseAbs().maxCoeff());
    return d;
}

}  // namespace

TEST_CASE("time grid") {
    const TimeGrid g(1.0, 3);
    CHECK(g.time(3) == 1.0);
    CHECK(g.dt() == doctest::Approx(1.0 / 3.0));
    double w = 0.0;
    for (int n = 0; n <= 3; ++n) w += g.trapezoid_weight(n);
    CHECK(w == doctest::Approx(1.0));
}

TEST_CASE("Woodbury step solve equals a direct sparse LU") {
    const Setup s = make_setup();
    const Discretization& disc = *s.disc;
    const auto q = sample_K(AdmissibleSet(0.5, 5.0), s.basis, 1, 8)[0];
    const double t = 0.4;
    const auto step = disc.stepper().prepare(disc.robin_block(q, t));

    const SparseMatrix k = assemble_step_matrix(disc.ops(), disc.grid().dt(), assemble_robin_matrix(disc.spaces(), q, t));
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(k);
    REQUIRE(lu.info() == Eigen::Success);

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k.rows());
    rhs.head(disc.stepper().num_velocity()) = Eigen::VectorXd::LinSpaced(disc.stepper().num_velocity(), -1.0, 2.0);
    const Eigen::VectorXd direct = lu.solve(rhs);
    const Eigen::VectorXd woodbury = disc.stepper().solve(step, rhs);
    CHECK((direct - woodbury).lpNorm<Eigen::Infinity>() <= 1e-10 * direct.lpNorm<Eigen::Infinity>());
}

TEST_CASE("zero data gives the zero solution") {
    const Setup s = make_setup(8);
    const auto q = RobinCoefficient::constant(s.basis, 2.0);
    const StateTrajectory traj = solve_forward(*s.disc, ProblemData{}, q);
    for (const auto& u : traj.velocity) CHECK(u.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& p : traj.pressure) CHECK(p.cwiseAbs().maxCoeff() == 0.0);
    const MeasurementTrace tr = extract_trace(traj);
    CHECK(tr.norm() == 0.0);
    CHECK(tr.values().cols() == 9);
}

TEST_CASE("free decay dissipates energy and stays divergence free") {
    const Setup s = make_setup(16);
    ProblemData d;
    d.initial_velocity = poiseuille;
    const auto q = sample_K(AdmissibleSet(0.5, 5.0), s.basis, 1, 2)[0];
    const StateTrajectory traj = solve_forward(*s.disc, d, q);
    const SparseMatrix& m = s.disc->ops().mass;
    double previous = std::sqrt(traj.velocity[0].dot(m * traj.velocity[0]));
    CHECK(previous > 0.0);
    for (std::size_t n = 1; n < traj.velocity.size(); ++n) {
        const double e = std::sqrt(traj.velocity[n].dot(m * traj.velocity[n]));
        CHECK(e <= previous * (1.0 + 1e-12));
        previous = e;
    }
    CHECK(max_divergence_residual(*s.disc, traj) <= 1e-8);
}

TEST_CASE("solution map is affine in the data") {
    const Setup s = make_setup(8);
    const auto q = sample_K(AdmissibleSet(0.5, 5.0), s.basis, 1, 5)[0];
    const ProblemData full = pulsatile_data();
    ProblemData initial_only;
    initial_only.initial_velocity = full.initial_velocity;
    ProblemData loads_only;
    loads_only.inlet_traction = full.inlet_traction;
    loads_only.robin_load = [](double t, const Point&) { return Point(0.1 * t, -0.2); };
    ProblemData both = full;
    both.robin_load = loads_only.robin_load;

    const StateTrajectory a = solve_forward(*s.disc, initial_only, q);
    const StateTrajectory b = solve_forward(*s.disc, loads_only, q);
    const StateTrajectory c = solve_forward(*s.disc, both, q);
    double worst = 0.0;
    for (std::size_t n = 0; n < c.velocity.size(); ++n) {
        worst = std::max(worst, (a.velocity[n] + b.velocity[n] - c.velocity[n]).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-10);

    const StateTrajectory doubled = solve_forward(*s.disc, both.scaled(2.0), q);
    double scale_err = 0.0;
    for (std::size_t n = 0; n < c.velocity.size(); ++n) {
        scale_err = std::max(scale_err, (doubled.velocity[n] - 2.0 * c.velocity[n]).cwiseAbs().maxCoeff());
    }
    CHECK(scale_err <= 1e-10);
}

TEST_CASE("prepared data and direct data give the same solve") {
    const Setup s = make_setup(8);
    const auto q = RobinCoefficient::constant(s.basis, 1.5);
    const PreparedData prep = prepare_data(*s.disc, pulsatile_data());
    CHECK(max_difference(solve_forward(*s.disc, prep, q), solve_forward(*s.disc, pulsatile_data(), q)) == 0.0);
    CHECK(prep.norms.initial > 0.0);
    CHECK(prep.norms.inlet > 0.0);
    CHECK(prep.norms.robin_load == 0.0);
}

TEST_CASE("trace norm of a constant trace") {
    const Setup s = make_setup(8);
    const auto& metric = s.disc->trace_metric();
    const TraceSpace& space = s.disc->trace_space();
    Eigen::MatrixXd values(space.size(), s.disc->grid().steps() + 1);
    const int nodes = space.size() / 2;
    for (Eigen::Index n = 0; n < values.cols(); ++n) {
        values.col(n).head(nodes).setConstant(1.5);
        values.col(n).tail(nodes).setConstant(-0.5);
    }
    const MeasurementTrace tr(metric, values);
    // T * int_window |v|^2 with |v|^2 = 2.5 and window length 1.
    CHECK(tr.norm() * tr.norm() == doctest::Approx(2.5).epsilon(1e-12));
    CHECK((tr - tr).norm() == 0.0);
    CHECK((tr * 2.0).norm() == doctest::Approx(2.0 * tr.norm()).epsilon(1e-14));
    CHECK_THROWS_AS(MeasurementTrace(metric, Eigen::MatrixXd::Zero(3, 3)), InputError);
}

TEST_CASE("first order in time") {
    const auto q = RobinCoefficient::constant(make_setup(8).basis, 2.0);
    std::vector<double> norms;
    for (int steps : {16, 32, 64}) {
        const Setup s = make_setup(steps);
        norms.push_back(extract_trace(solve_forward(*s.disc, pulsatile_data(), q.with_coeffs(q.coeffs()))).norm());
    }
    const double ratio = std::abs(norms[0] - norms[1]) / std::abs(norms[1] - norms[2]);
    MESSAGE("trace norm change ratio under dt halving: " << ratio);
    CHECK(ratio > 1.6);
    CHECK(ratio < 2.4);
}

TEST_CASE("manufactured solution errors decrease under refinement") {
    const ManufacturedSolution exact;
    std::vector<double> errors;
    for (int level = 0; level < 2; ++level) {
        const Setup s = make_setup(8 * (1 << (2 * level)), level);
        const RobinCoefficient q = RobinCoefficient::constant(s.basis, 1.0);
        const StateTrajectory traj = solve_forward(*s.disc, exact.problem_data(q), q);
        const ConvergenceErrors e = manufactured_errors(*s.disc, traj, exact);
        errors.push_back(e.l2h1);
        CHECK(e.trace < e.l2h1);
    }
    CHECK(errors[1] < 0.35 * errors[0]);

    ManufacturedSolution zero;
    zero.amplitude = 0.0;
    zero.pressure_amplitude = 0.0;
    const Setup s = make_setup(8, 0);
    const RobinCoefficient q = RobinCoefficient::constant(s.basis, 1.0);
    const ConvergenceErrors e = manufactured_errors(*s.disc, solve_forward(*s.disc, zero.problem_data(q), q), zero);
    CHECK(e.l2l2 == 0.0);
    CHECK(e.l2h1 == 0.0);
    CHECK(e.trace == 0.0);
}

TEST_CASE("energy ratio over the admissible box") {
    const Setup s = make_setup(16);
    const AdmissibleSet K(0.5, 5.0);
    const auto samples = sample_K(K, s.basis, 20, 3);
    const EnergyReport report = verify_energy_estimate(*s.disc, pulsatile_data(), samples);
    REQUIRE(report.ratios.size() == 20);
    for (double r : report.ratios) {
        CHECK(std::isfinite(r));
        CHECK(r > 0.0);
        CHECK(r <= report.max_ratio);
    }
    CHECK(report.spread() <= 3.0);

    const EnergyReport scaled = verify_energy_estimate(*s.disc, pulsatile_data().scaled(2.0), samples);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(scaled.ratios[i] == doctest::Approx(report.ratios[i]).epsilon(1e-10));
    }

    // A larger lower bound m damps the outlet more strongly.
    const AdmissibleSet stronger(2.0, 5.0);
    std::vector<RobinCoefficient> raised;
    for (const auto& q : samples) raised.push_back(project_onto_K(q, stronger));
    CHECK(verify_energy_estimate(*s.disc, pulsatile_data(), raised).max_ratio <= report.max_ratio * (1.0 + 1e-12));

    CHECK_THROWS_AS(verify_energy_estimate(*s.disc, ProblemData{}, samples), InputError);
}

TEST_CASE("input checks") {
    const Setup s = make_setup(4);
    CHECK_NOTHROW(check_initial_divergence(s.disc->mesh().geometry(), poiseuille));
    CHECK_THROWS_AS(check_initial_divergence(s.disc->mesh().geometry(), [](const Point& x) { return Point(x.x(), 0.0); }),
                    InputError);
    CHECK_THROWS_AS(check_inlet_flux_nonvanishing(*s.disc, ProblemData{}), InputError);
    CHECK_NOTHROW(check_inlet_flux_nonvanishing(*s.disc, pulsatile_data()));

    const auto other = std::make_shared<const RobinBasis>(
        RobinBasis::from_mesh(build_channel_mesh(2.0, 1.0, 4, 2, 2), 1.0, 3));
    CHECK_THROWS_AS(solve_forward(*s.disc, pulsatile_data(), RobinCoefficient::constant(other, 1.0)), InputError);
}
