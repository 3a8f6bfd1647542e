#include "stokes_robin/error.hpp"
#include "stokes_robin/parameter_space.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace stokes_robin;

namespace {

std::shared_ptr<const RobinBasis> default_basis() {
    return std::make_shared<const RobinBasis>(
        RobinBasis::from_mesh(build_channel_mesh(2.0, 1.0, 4, 2, 2), 1.0, 5));
}

OutletPoint random_outlet_point(const RobinBasis& b, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> seg(1, b.num_segments());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int s = seg(rng);
    const double lo = b.segment_bounds()[s - 1];
    const double hi = b.segment_bounds()[s];
    return {s, lo + u(rng) * (hi - lo)};
}

}  // namespace

TEST_CASE("basis layout from the coarse mesh") {
    const auto basis = default_basis();
    CHECK(basis->size() == 20);
    CHECK(basis->num_spatial() == 4);
    CHECK(basis->num_segments() == 2);
    CHECK(basis->is_tensor());
    CHECK(basis->time_knots() == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});

    const auto equi = RobinBasis::from_mesh(build_channel_mesh(2.0, 1.0, 4, 2, 2), 1.0, 3, 3);
    CHECK(equi.size() == 3 * 6);
    CHECK_THROWS_AS(RobinBasis::from_mesh(build_channel_mesh(2.0, 1.0, 4, 2, 2), 1.0, 1), InputError);
}

TEST_CASE("partition of unity and linearity") {
    const auto basis = default_basis();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ut(0.0, 1.0);
    std::uniform_real_distribution<double> uc(-3.0, 3.0);
    Eigen::VectorXd c1(basis->size()), c2(basis->size());
    for (int j = 0; j < basis->size(); ++j) {
        c1[j] = uc(rng);
        c2[j] = uc(rng);
    }
    const RobinCoefficient q1(basis, c1), q2(basis, c2);
    const RobinCoefficient combo(basis, 0.7 * c1 - 1.3 * c2);
    double worst_unity = 0.0, worst_linear = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double t = ut(rng);
        const OutletPoint x = random_outlet_point(*basis, rng);
        double sum = 0.0;
        for (int j = 0; j < basis->size(); ++j) sum += basis->value(j, t, x);
        worst_unity = std::max(worst_unity, std::abs(sum - 1.0));
        worst_linear = std::max(worst_linear, std::abs(combo.evaluate(t, x) -
                                                       (0.7 * q1.evaluate(t, x) - 1.3 * q2.evaluate(t, x))));
    }
    CHECK(worst_unity <= 1e-12);
    CHECK(worst_linear <= 1e-12);

    const auto c = RobinCoefficient::constant(basis, 2.5);
    CHECK(c.evaluate(0.37, {2, 0.81}) == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("hat functions reproduce linear functions of time") {
    const auto basis = default_basis();
    Eigen::VectorXd c(basis->size());
    for (int j = 0; j < basis->size(); ++j) c[j] = 1.5 + 2.0 * basis->time_knots()[basis->time_index(j)];
    const RobinCoefficient q(basis, c);
    for (double t : {0.0, 0.1, 0.33, 0.6, 0.99, 1.0}) {
        CHECK(q.evaluate(t, {1, 0.2}) == doctest::Approx(1.5 + 2.0 * t).epsilon(1e-13));
        CHECK(q.evaluate(t, {2, 0.9}) == doctest::Approx(1.5 + 2.0 * t).epsilon(1e-13));
    }
}

TEST_CASE("segment constants jump across the interface") {
    const auto basis = default_basis();
    Eigen::VectorXd c(basis->size());
    for (int j = 0; j < basis->size(); ++j) c[j] = basis->segment_of(basis->space_index(j)) == 1 ? 1.0 : 4.0;
    const RobinCoefficient q(basis, c);
    const ChannelGeometry g{2.0, 1.0, 2};
    CHECK(q.evaluate(0.3, {1, 0.5}) - q.evaluate(0.3, {2, 0.5}) == doctest::Approx(-3.0));
    CHECK(evaluate_q(q, g, 0.3, Point(2.0, 0.25)) == doctest::Approx(1.0));
    CHECK(evaluate_q(q, g, 0.3, Point(2.0, 0.75)) == doctest::Approx(4.0));
    CHECK_THROWS_AS(evaluate_q(q, g, 0.3, Point(1.0, 0.5)), InputError);
}

TEST_CASE("sup-norm distance") {
    const auto basis = default_basis();
    const AdmissibleSet K(0.5, 5.0);
    const auto base = sample_K(K, basis, 1, 3)[0];
    CHECK(linf_distance(base, base) == 0.0);
    const auto shifted = base.with_coeffs(base.coeffs().array() - 0.3);
    CHECK(linf_distance(base, shifted) == doctest::Approx(0.3).epsilon(1e-12));

    const auto pairs = sample_K(K, basis, 10, 17);
    for (int i = 0; i + 1 < 10; i += 2) {
        const double exact = linf_distance(pairs[i], pairs[i + 1]);
        CHECK(exact == doctest::Approx((pairs[i].coeffs() - pairs[i + 1].coeffs()).lpNorm<Eigen::Infinity>()));
        // Dense sampling at ten times the knot resolution never exceeds the
        // knot maximum and attains it (knots are sampled).
        const double dense = sampled_linf_distance(pairs[i], pairs[i + 1], 41, 21);
        CHECK(dense <= exact + 1e-12);
        CHECK(dense >= exact - 1e-12);
    }
}

TEST_CASE("projection onto the box") {
    const auto basis = default_basis();
    const AdmissibleSet K(0.5, 5.0);
    const auto inside = sample_K(K, basis, 1, 1)[0];
    CHECK(project_onto_K(inside, K).coeffs() == inside.coeffs());
    Eigen::VectorXd c = inside.coeffs();
    c[0] = K.lower - 1.0;
    c[1] = K.upper + 5.0;
    const auto p = project_onto_K(inside.with_coeffs(c), K);
    CHECK(p.coeffs()[0] == K.lower);
    CHECK(p.coeffs()[1] == K.upper);
    CHECK(K.contains(p));
    CHECK_FALSE(K.contains(inside.with_coeffs(c)));
    CHECK_THROWS_AS(AdmissibleSet(0.0, 5.0), InputError);
    CHECK_THROWS_AS(AdmissibleSet(2.0, 1.0), InputError);
}

TEST_CASE("uniform samples of the box") {
    const auto basis = default_basis();
    const AdmissibleSet K(0.5, 5.0);
    const auto a = sample_K(K, basis, 4, 42);
    const auto b = sample_K(K, basis, 4, 42);
    for (int i = 0; i < 4; ++i) CHECK(a[i].coeffs() == b[i].coeffs());
    CHECK(a[0].coeffs() != sample_K(K, basis, 1, 43)[0].coeffs());

    const int n = 10000;
    const auto many = sample_K(K, basis, n, 7);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(basis->size());
    std::mt19937_64 rng(9);
    for (const auto& q : many) {
        CHECK(q.coeffs().minCoeff() >= K.lower);
        CHECK(q.coeffs().maxCoeff() <= K.upper);
        mean += q.coeffs();
    }
    mean /= n;
    // Uniform on [m, q_max]: sigma of the mean is width / sqrt(12 n).
    const double sigma = (K.upper - K.lower) / std::sqrt(12.0 * n);
    CHECK((mean.array() - K.midpoint()).abs().maxCoeff() <= 3.0 * sigma);
    // Pointwise membership at sampled points for a handful of draws.
    for (int i = 0; i < 20; ++i) {
        for (int k = 0; k < 50; ++k) {
            const OutletPoint x = random_outlet_point(*basis, rng);
            CHECK(many[i].evaluate(std::uniform_real_distribution<double>(0.0, 1.0)(rng), x) >= K.lower - 1e-14);
        }
    }
}

TEST_CASE("duplicated basis keeps the span") {
    const auto basis = default_basis();
    const RobinBasis dup = basis->with_duplicate(3);
    CHECK(dup.size() == basis->size() + 1);
    CHECK_FALSE(dup.is_tensor());
    CHECK(dup.same_layout(*basis));
    CHECK_FALSE(dup == *basis);
}
