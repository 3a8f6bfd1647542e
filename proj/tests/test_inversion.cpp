#include "stokes_robin/error.hpp"
#include "stokes_robin/inversion.hpp"
#include "stokes_robin/stability.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace stokes_robin;

namespace {

struct Problem {
    std::shared_ptr<const RobinBasis> basis;
    std::unique_ptr<Discretization> disc;
    ProblemData raw;
    PreparedData data;
    AdmissibleSet K{0.5, 5.0};

    Problem() {
        const Mesh coarse = build_channel_mesh(2.0, 1.0, 4, 2, 2);
        basis = std::make_shared<const RobinBasis>(RobinBasis::from_mesh(coarse, 1.0, 5));
        disc = std::make_unique<Discretization>(std::make_shared<const Mesh>(refine(refine(coarse))), TimeGrid(1.0, 32),
                                                basis, 0.0, 1.0);
        raw.initial_velocity = [](const Point& x) { return Point(4.0 * x.y() * (1.0 - x.y()), 0.0); };
        raw.inlet_traction = [](double t, const Point& x) {
            return Point((1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * t)) * 4.0 * x.y() * (1.0 - x.y()), 0.0);
        };
        data = prepare_data(*disc, raw);
    }

    /// Smooth target: box midpoint plus 1.25 sin(2 pi t + pi y) at the knots.
    RobinCoefficient wave() const {
        std::vector<double> y;
        for (const auto& knots : basis->segment_knots()) y.insert(y.end(), knots.begin(), knots.end());
        Eigen::VectorXd c(basis->size());
        for (int j = 0; j < basis->size(); ++j) {
            c[j] = K.midpoint() + 1.25 * std::sin(2.0 * std::numbers::pi * basis->time_knots()[basis->time_index(j)] +
                                                  std::numbers::pi * y[basis->space_index(j)]);
        }
        return {basis, c};
    }

    MeasurementTrace trace(const RobinCoefficient& q) const { return extract_trace(solve_forward(*disc, data, q)); }
};

const Problem& problem() {
    static const Problem p;
    return p;
}

double relative_error(const RobinCoefficient& q, const RobinCoefficient& truth) {
    return linf_distance(q, truth) / truth.coeffs().lpNorm<Eigen::Infinity>();
}

void check_history(const InversionResult& r, const AdmissibleSet& K) {
    double previous = std::numeric_limits<double>::infinity();
    for (const auto& rec : r.history) {
        CHECK(rec.coeffs.minCoeff() >= K.lower);
        CHECK(rec.coeffs.maxCoeff() <= K.upper);
        if (rec.accepted) {
            CHECK(rec.misfit < previous);
            previous = rec.misfit;
        }
    }
}

}  // namespace

TEST_CASE("noise injection") {
    const Problem& p = problem();
    const MeasurementTrace clean = p.trace(p.wave());
    CHECK(add_noise(clean, 0.0, 5).values() == clean.values());
    const MeasurementTrace a = add_noise(clean, 0.01, 5);
    const MeasurementTrace b = add_noise(clean, 0.01, 5);
    CHECK(a.values() == b.values());
    CHECK(a.values() != add_noise(clean, 0.01, 6).values());
    CHECK(std::abs((a - clean).norm() / clean.norm() - 0.01) <= 1e-12);
    CHECK_THROWS_AS(add_noise(clean, -0.1, 1), InputError);
}

TEST_CASE("misfit") {
    const Problem& p = problem();
    const RobinCoefficient truth = p.wave();
    const MeasurementTrace clean = p.trace(truth);
    const InverseProblem exact(*p.disc, p.data, clean, p.K);
    CHECK(misfit(exact, truth) <= 1e-24 * clean.inner(clean));
    for (const auto& q : sample_K(p.K, p.basis, 5, 9)) CHECK(misfit(exact, q) >= 0.0);

    const double level = 0.02;
    const MeasurementTrace noisy = add_noise(clean, level, 3);
    const InverseProblem perturbed(*p.disc, p.data, noisy, p.K);
    const double expected = 0.5 * std::pow(level * clean.norm(), 2);
    CHECK(misfit(perturbed, truth) == doctest::Approx(expected).epsilon(1e-10));

    CHECK_THROWS_AS(InverseProblem(*p.disc, p.data, clean, p.K, -1.0), InputError);
    CHECK_THROWS_AS(MeasurementTrace(clean.metric(), Eigen::MatrixXd::Zero(clean.values().rows(), 3)), InputError);
}

TEST_CASE("true coefficient is a fixed point") {
    const Problem& p = problem();
    const RobinCoefficient truth = p.wave();
    const InverseProblem ip(*p.disc, p.data, p.trace(truth), p.K);
    const InversionResult r = gauss_newton_solve(ip, truth);
    CHECK(r.converged);
    CHECK(r.iterations <= 1);
    CHECK(relative_error(r.recovered, truth) <= 1e-12);

    Eigen::VectorXd outside = truth.coeffs();
    outside[0] = 0.1;
    CHECK_THROWS_AS(gauss_newton_solve(ip, truth.with_coeffs(outside)), InputError);
}

TEST_CASE("noiseless recovery from the box midpoint") {
    const Problem& p = problem();
    const RobinCoefficient truth = p.wave();
    const InverseProblem ip(*p.disc, p.data, p.trace(truth), p.K);
    const InversionResult r = gauss_newton_solve(ip, RobinCoefficient::constant(p.basis, p.K.midpoint()));
    MESSAGE("iterations " << r.iterations << ", reason: " << r.reason << ", error "
                          << relative_error(r.recovered, truth));
    CHECK(r.converged);
    CHECK(relative_error(r.recovered, truth) <= 1e-3);
    check_history(r, p.K);

    // Scaling g, u0 and the measurement by alpha leaves the minimizer unchanged.
    GaussNewtonOptions tight;
    tight.gradient_tolerance = 0.0;
    const InversionResult base = gauss_newton_solve(ip, RobinCoefficient::constant(p.basis, p.K.midpoint()), tight);
    const double alpha = 3.0;
    const InverseProblem scaled(*p.disc, prepare_data(*p.disc, p.raw.scaled(alpha)), p.trace(truth) * alpha, p.K);
    const InversionResult rs = gauss_newton_solve(scaled, RobinCoefficient::constant(p.basis, p.K.midpoint()), tight);
    MESSAGE("scaled run: " << rs.iterations << " iterations, " << rs.reason << "; unscaled: " << base.iterations
                           << ", " << base.reason << "; errors " << relative_error(rs.recovered, truth) << ", "
                           << relative_error(base.recovered, truth));
    CHECK((rs.recovered.coeffs() - base.recovered.coeffs()).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("bound constraints stay active") {
    const Problem& p = problem();
    // Truth on the lower bound in one coordinate.
    Eigen::VectorXd c = p.wave().coeffs();
    c[7] = p.K.lower;
    const RobinCoefficient truth(p.basis, c);
    const InverseProblem ip(*p.disc, p.data, p.trace(truth), p.K);
    GaussNewtonOptions opts;
    opts.max_iterations = 15;
    const InversionResult r = gauss_newton_solve(ip, RobinCoefficient::constant(p.basis, p.K.midpoint()), opts);
    check_history(r, p.K);
    CHECK(p.K.contains(r.recovered));
}

TEST_CASE("noisy recovery is bounded by the empirical stability constant") {
    const Problem& p = problem();
    const RobinCoefficient truth = p.wave();
    const MeasurementTrace clean = p.trace(truth);
    const MeasurementTrace noisy = add_noise(clean, 0.01, 11);
    const double noise_norm = (noisy - clean).norm();

    const RobinCoefficient start = RobinCoefficient::constant(p.basis, p.K.midpoint());
    const TraceJacobian j0 = assemble_jacobian(*p.disc, start, solve_forward(*p.disc, p.data, start));
    const InverseProblem ip(*p.disc, p.data, noisy, p.K, default_regularization(j0));
    const InversionResult r = gauss_newton_solve(ip, start);
    check_history(r, p.K);

    const StabilityReport probe = estimate_constant(*p.disc, p.data, p.K, 50, 7);
    const double error = linf_distance(r.recovered, truth);
    MESSAGE("noisy error " << error << ", C_emp " << probe.c_emp << ", noise norm " << noise_norm);
    CHECK(error <= 3.0 * probe.c_emp * noise_norm);
}

TEST_CASE("crime-free data come from a finer discretization") {
    const Problem& p = problem();
    const RobinCoefficient truth = p.wave();
    const MeasurementTrace coarse = p.trace(truth);
    const MeasurementTrace fine = crime_free_trace(*p.disc, p.raw, truth);
    CHECK(fine.values().rows() == coarse.values().rows());
    CHECK(fine.values().cols() == coarse.values().cols());
    const double gap = (fine - coarse).norm() / coarse.norm();
    MESSAGE("model discrepancy " << gap);
    CHECK(gap > 0.0);
    CHECK(gap < 0.1);
}
