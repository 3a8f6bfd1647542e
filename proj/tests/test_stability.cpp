#include "stokes_robin/error.hpp"
#include "stokes_robin/stability.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace stokes_robin;

namespace {

struct Problem {
    std::shared_ptr<const Mesh> mesh;
    std::shared_ptr<const RobinBasis> basis;
    std::unique_ptr<Discretization> disc;
    ProblemData raw;
    PreparedData data;
    AdmissibleSet K{0.5, 5.0};

    explicit Problem(double window_end = 1.0) {
        const Mesh coarse = build_channel_mesh(2.0, 1.0, 4, 2, 2);
        mesh = std::make_shared<const Mesh>(refine(refine(coarse)));
        basis = std::make_shared<const RobinBasis>(RobinBasis::from_mesh(coarse, 1.0, 5));
        disc = std::make_unique<Discretization>(mesh, TimeGrid(1.0, 32), basis, 0.0, window_end);
        raw.initial_velocity = [](const Point& x) { return Point(4.0 * x.y() * (1.0 - x.y()), 0.0); };
        raw.inlet_traction = [](double t, const Point& x) {
            return Point((1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * t)) * 4.0 * x.y() * (1.0 - x.y()), 0.0);
        };
        data = prepare_data(*disc, raw);
    }
};

const Problem& problem() {
    static const Problem p;
    return p;
}

}  // namespace

TEST_CASE("Lipschitz ratio of single pairs") {
    const Problem& p = problem();
    const auto q = sample_K(p.K, p.basis, 1, 4)[0];
    CHECK_THROWS_AS(lipschitz_ratio(*p.disc, p.data, q, q), InputError);

    // A small step along one basis function: ratio ~ ||phi_j||_inf / ||column_j||.
    const TraceJacobian jac = assemble_jacobian(*p.disc, q, solve_forward(*p.disc, p.data, q));
    for (int j : {0, 6, 13}) {
        Eigen::VectorXd c = q.coeffs();
        c[j] += 1e-5;
        const LipschitzRatio r = lipschitz_ratio(*p.disc, p.data, q, q.with_coeffs(c));
        const double predicted = 1.0 / std::sqrt(jac.gram(j, j));
        CHECK(r.parameter_distance == doctest::Approx(1e-5).epsilon(1e-9));
        CHECK(std::abs(r.ratio / predicted - 1.0) <= 0.05);
    }

    const auto samples = sample_K(p.K, p.basis, 200, 12);
    for (int i = 0; i < 200; i += 2) {
        const LipschitzRatio r = lipschitz_ratio(*p.disc, p.data, samples[i], samples[i + 1]);
        CHECK(std::isfinite(r.ratio));
        CHECK(r.ratio > 0.0);
        CHECK_FALSE(r.identifiability_violation);
    }
}

TEST_CASE("empirical stability constant") {
    const Problem& p = problem();
    const StabilityReport one_a = estimate_constant(*p.disc, p.data, p.K, 1, 5);
    const StabilityReport one_b = estimate_constant(*p.disc, p.data, p.K, 1, 5);
    CHECK(one_a.c_emp == one_b.c_emp);
    CHECK(one_a.pairs.front().q1 == one_b.pairs.front().q1);

    StabilityOptions opts;
    const StabilityReport r = estimate_constant(*p.disc, p.data, p.K, 40, 7, opts);
    CHECK(std::isfinite(r.c_emp));
    CHECK(r.c_emp >= r.c_emp_sampled);
    for (std::size_t k = 1; k < r.growth.size(); ++k) {
        CHECK(r.growth[k].first > r.growth[k - 1].first);
        CHECK(r.growth[k].second >= r.growth[k - 1].second);
        CHECK(r.growth_sampled[k].second >= r.growth_sampled[k - 1].second);
    }
    CHECK(r.growth.back().first == 40);
    CHECK(r.c_emp_at(40) == r.c_emp);
    CHECK(r.max_prediction_deviation <= 0.05);
    CHECK(r.singular_pair_ratio >= 0.9 * r.c_emp_sampled);
    CHECK(r.identifiability_violations == 0);
    CHECK(r.jacobian_min_singular.size() == 1 + static_cast<std::size_t>(opts.jacobian_samples));
    int small = 0;
    for (const auto& pair : r.pairs) {
        if (pair.kind == PairKind::small_perturbation) {
            ++small;
            REQUIRE(pair.predicted_ratio.has_value());
        }
    }
    CHECK(small == 10);

    opts.threads = 3;
    const StabilityReport threaded = estimate_constant(*p.disc, p.data, p.K, 40, 7, opts);
    CHECK(threaded.c_emp == r.c_emp);
    CHECK(threaded.max_prediction_deviation == r.max_prediction_deviation);
    CHECK(p.data.norms.data_bound() == r.data_bound);
    CHECK_THROWS_AS(estimate_constant(*p.disc, p.data, p.K, 0, 7), InputError);
}

TEST_CASE("identifiability floor") {
    const Problem& p = problem();
    // Arithmetic of the floor: distance 0.5 with C_emp = 50 and 5% tolerance.
    CHECK(0.5 / 50.0 * (1.0 - 0.05) == doctest::Approx(0.0095));
    const IdentifiabilityReport scan = identifiability_scan(*p.disc, p.data, p.K, 20, 3, 50.0);
    CHECK(scan.pairs.size() + scan.excluded == 20);
    for (const auto& pair : scan.pairs) {
        CHECK(pair.floor == doctest::Approx(pair.parameter_distance / 50.0 * 0.95));
        CHECK(pair.holds == (pair.trace_distance >= pair.floor));
    }

    // A larger window sees more of every trace.
    const Problem half(0.5);
    const IdentifiabilityReport narrow = identifiability_scan(*half.disc, half.data, half.K, 20, 3, 50.0);
    REQUIRE(narrow.pairs.size() == scan.pairs.size());
    CHECK(scan.min_trace_distance >= narrow.min_trace_distance);
    for (std::size_t i = 0; i < scan.pairs.size(); ++i) {
        CHECK(scan.pairs[i].parameter_distance == narrow.pairs[i].parameter_distance);
        CHECK(scan.pairs[i].trace_distance >= narrow.pairs[i].trace_distance);
    }

    CHECK_THROWS_AS(identifiability_scan(*p.disc, p.data, p.K, 5, 3, 0.0), InputError);
    CHECK_THROWS_AS(identifiability_scan(*p.disc, p.data, p.K, 5, 3, 10.0, 1.0), InputError);
}

TEST_CASE("hypotheses hold on the default problem") {
    const Problem& p = problem();
    const auto samples = sample_K(p.K, p.basis, 5, 11);
    HypothesisOptions opts;
    opts.seed = 11;
    const HypothesisReport report = hypothesis_check(*p.disc, p.data, p.K, samples, opts);
    for (const auto& s : report.samples) {
        MESSAGE("Taylor " << s.taylor_slope << " difference " << s.difference_slope << " continuity "
                          << s.continuity_slope << " Gram condition " << s.gram_condition);
    }
    CHECK(report.injectivity);
    CHECK(report.c1_regularity);
    CHECK(report.derivative_injective);
    CHECK(report.all_pass());

    // Data bound M1 = ||u0|| + ||g||: ||u0||^2 = 32/30, ||g||^2 = 1.125 * 16/30.
    CHECK(report.data_bound == doctest::Approx(std::sqrt(32.0 / 30.0) + std::sqrt(0.6)).epsilon(1e-10));
}

TEST_CASE("degenerate basis fails the injectivity hypothesis") {
    const Problem& p = problem();
    HypothesisOptions opts;
    opts.jacobian_basis = std::make_shared<const RobinBasis>(p.basis->with_duplicate(2));
    opts.c_emp = 1e3;
    opts.scan_pairs = 4;
    const HypothesisReport report = hypothesis_check(*p.disc, p.data, p.K, sample_K(p.K, p.basis, 1, 2), opts);
    CHECK_FALSE(report.derivative_injective);
    CHECK_FALSE(report.all_pass());
    CHECK_FALSE(report.samples.front().injective);
}
