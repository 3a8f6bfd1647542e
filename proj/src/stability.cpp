#include "stokes_robin/stability.hpp"

#include "stokes_robin/error.hpp"
#include "stokes_robin/log.hpp"
#include "stokes_robin/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace stokes_robin {

namespace {

constexpr double kIdenticalTolerance = 1e-14;

LipschitzRatio ratio_from_traces(const RobinCoefficient& q1, const RobinCoefficient& q2, const MeasurementTrace& t1,
                                 const MeasurementTrace& t2) {
    LipschitzRatio r;
    r.parameter_distance = linf_distance(q1, q2);
    if (r.parameter_distance <= kIdenticalTolerance) {
        throw InputError("Lipschitz ratio is undefined for identical coefficients");
    }
    r.trace_distance = (t1 - t2).norm();
    if (r.trace_distance > 0.0) {
        r.ratio = r.parameter_distance / r.trace_distance;
    } else {
        r.ratio = std::numeric_limits<double>::infinity();
        r.identifiability_violation = true;
    }
    return r;
}

Eigen::VectorXd uniform_vector(std::mt19937_64& rng, int m, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Eigen::VectorXd v(m);
    for (int j = 0; j < m; ++j) v[j] = dist(rng);
    return v;
}

/// Random direction with sup norm one.
Eigen::VectorXd unit_direction(std::mt19937_64& rng, int m) {
    Eigen::VectorXd d = uniform_vector(rng, m, -1.0, 1.0);
    const double n = d.lpNorm<Eigen::Infinity>();
    return n > 0.0 ? Eigen::VectorXd(d / n) : Eigen::VectorXd::Ones(m);
}

}  // namespace

LipschitzRatio lipschitz_ratio(const Discretization& disc, const PreparedData& data, const RobinCoefficient& q1,
                               const RobinCoefficient& q2) {
    if (linf_distance(q1, q2) <= kIdenticalTolerance) {
        throw InputError("Lipschitz ratio is undefined for identical coefficients");
    }
    const MeasurementTrace t1 = extract_trace(solve_forward(disc, data, q1));
    const MeasurementTrace t2 = extract_trace(solve_forward(disc, data, q2));
    return ratio_from_traces(q1, q2, t1, t2);
}

std::string to_string(PairKind kind) {
    switch (kind) {
        case PairKind::uniform: return "uniform";
        case PairKind::small_perturbation: return "small_perturbation";
        case PairKind::basis_direction: return "basis_direction";
        case PairKind::singular_local: return "singular_local";
        case PairKind::singular_global: return "singular_global";
    }
    return "unknown";
}

double StabilityReport::c_emp_at(int n) const {
    double c = 0.0;
    int sampled = 0;
    for (const PairRecord& p : pairs) {
        const bool is_sampled = p.kind == PairKind::uniform || p.kind == PairKind::small_perturbation;
        if (is_sampled && sampled++ >= n) continue;
        c = std::max(c, p.ratio.ratio);
    }
    return c;
}

StabilityReport estimate_constant(const Discretization& disc, const PreparedData& data, const AdmissibleSet& K,
                                  int n_pairs, std::uint64_t seed, const StabilityOptions& options) {
    if (n_pairs < 1) throw InputError("stability probe needs at least one pair");
    const auto& basis = disc.basis_ptr();
    const int m = basis->size();
    const double width = K.upper - K.lower;
    const double delta = options.small_scale * width;
    const int small_period =
        options.small_fraction > 0.0 ? std::max(1, static_cast<int>(std::lround(1.0 / options.small_fraction))) : 0;

    StabilityReport report;
    report.seed = seed;
    report.n_pairs = n_pairs;
    report.data_bound = data.norms.data_bound();

    // All random draws happen here, sequentially, so the pair list does not
    // depend on the thread count.
    std::mt19937_64 rng(seed);
    for (int i = 0; i < n_pairs; ++i) {
        PairRecord p;
        p.index = i;
        if (small_period > 0 && i % small_period == small_period - 1) {
            p.kind = PairKind::small_perturbation;
            p.q1 = uniform_vector(rng, m, K.lower + delta, K.upper - delta);
            p.q2 = p.q1 + delta * unit_direction(rng, m);
        } else {
            p.kind = PairKind::uniform;
            p.q1 = uniform_vector(rng, m, K.lower, K.upper);
            p.q2 = uniform_vector(rng, m, K.lower, K.upper);
        }
        report.pairs.push_back(std::move(p));
    }

    // Hard pairs around the box center.
    const RobinCoefficient center = RobinCoefficient::constant(basis, K.midpoint());
    const StateTrajectory center_traj = solve_forward(disc, data, center);
    const TraceJacobian center_jac = assemble_jacobian(disc, center, center_traj, options.threads);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(center_jac.gram);
    if (eig.info() != Eigen::Success) throw SolverError("Gram eigen-decomposition failed at the box center");
    report.jacobian_min_singular.push_back(std::sqrt(std::max(0.0, eig.eigenvalues()[0])));
    Eigen::VectorXd v = eig.eigenvectors().col(0);
    v /= v.lpNorm<Eigen::Infinity>();

    auto add_hard = [&](PairKind kind, const Eigen::VectorXd& step) {
        PairRecord p;
        p.index = static_cast<int>(report.pairs.size());
        p.kind = kind;
        p.q1 = center.coeffs();
        p.q2 = center.coeffs() + step;
        report.pairs.push_back(std::move(p));
    };
    for (int j = 0; j < m; ++j) add_hard(PairKind::basis_direction, 0.25 * width * Eigen::VectorXd::Unit(m, j));
    add_hard(PairKind::singular_local, delta * v);
    add_hard(PairKind::singular_global, 0.45 * width * v);

    parallel_for(static_cast<int>(report.pairs.size()), options.threads, [&](int i) {
        PairRecord& p = report.pairs[i];
        const RobinCoefficient q1 = center.with_coeffs(p.q1);
        const RobinCoefficient q2 = center.with_coeffs(p.q2);
        const StateTrajectory s1 = solve_forward(disc, data, q1);
        const MeasurementTrace t1 = extract_trace(s1);
        const MeasurementTrace t2 = extract_trace(solve_forward(disc, data, q2));
        p.ratio = ratio_from_traces(q1, q2, t1, t2);
        if (p.kind == PairKind::small_perturbation) {
            const RobinCoefficient h = center.with_coeffs(p.q2 - p.q1);
            const double linear = directional_derivative(disc, q1, s1, h).norm();
            p.predicted_ratio = linear > 0.0 ? p.ratio.parameter_distance / linear
                                             : std::numeric_limits<double>::infinity();
        }
    });

    // Smallest singular values at a few sampled q (sequential; each uses the thread pool).
    const int jac_samples = std::min(options.jacobian_samples, n_pairs);
    for (int i = 0; i < jac_samples; ++i) {
        const RobinCoefficient q = center.with_coeffs(report.pairs[i].q1);
        const TraceJacobian jac = assemble_jacobian(disc, q, solve_forward(disc, data, q), options.threads);
        report.jacobian_min_singular.push_back(std::sqrt(std::max(0.0, gram_spectrum(jac).min())));
    }

    report.min_trace_distance = std::numeric_limits<double>::infinity();
    for (const PairRecord& p : report.pairs) {
        const bool sampled = p.kind == PairKind::uniform || p.kind == PairKind::small_perturbation;
        report.c_emp = std::max(report.c_emp, p.ratio.ratio);
        if (sampled) report.c_emp_sampled = std::max(report.c_emp_sampled, p.ratio.ratio);
        if (p.kind == PairKind::singular_local || p.kind == PairKind::singular_global) {
            report.singular_pair_ratio = std::max(report.singular_pair_ratio, p.ratio.ratio);
        }
        report.min_trace_distance = std::min(report.min_trace_distance, p.ratio.trace_distance);
        if (p.ratio.identifiability_violation) ++report.identifiability_violations;
        if (p.predicted_ratio) {
            report.max_prediction_deviation =
                std::max(report.max_prediction_deviation, std::abs(p.ratio.ratio / *p.predicted_ratio - 1.0));
        }
    }
    if (report.identifiability_violations > 0) {
        log_warning(std::to_string(report.identifiability_violations) +
                    " distinct coefficient pairs produced identical traces");
    }

    double hard = 0.0;
    for (std::size_t i = n_pairs; i < report.pairs.size(); ++i) hard = std::max(hard, report.pairs[i].ratio.ratio);
    double running = 0.0;
    int next = 1;
    for (int i = 0; i < n_pairs; ++i) {
        running = std::max(running, report.pairs[i].ratio.ratio);
        if (i + 1 == next || i + 1 == n_pairs) {
            report.growth_sampled.emplace_back(i + 1, running);
            report.growth.emplace_back(i + 1, std::max(running, hard));
            if (i + 1 == next) next *= 2;
        }
    }
    return report;
}

IdentifiabilityReport identifiability_scan(const Discretization& disc, const PreparedData& data, const AdmissibleSet& K,
                                           int n_pairs, std::uint64_t seed, double c_emp, double tolerance,
                                           int threads) {
    if (n_pairs < 1) throw InputError("identifiability scan needs at least one pair");
    if (!(c_emp > 0.0) || !std::isfinite(c_emp)) throw InputError("identifiability scan needs a finite C_emp > 0");
    if (tolerance < 0.0 || tolerance >= 1.0) throw InputError("scan tolerance must lie in [0, 1)");

    const auto samples = sample_K(K, disc.basis_ptr(), 2 * n_pairs, seed);
    IdentifiabilityReport report;
    report.seed = seed;
    report.c_emp = c_emp;
    report.tolerance = tolerance;

    std::vector<int> kept;
    for (int i = 0; i < n_pairs; ++i) {
        if (linf_distance(samples[2 * i], samples[2 * i + 1]) <= kIdenticalTolerance) {
            ++report.excluded;
        } else {
            kept.push_back(i);
        }
    }
    report.pairs.resize(kept.size());
    parallel_for(static_cast<int>(kept.size()), threads, [&](int k) {
        const int i = kept[k];
        const LipschitzRatio r = lipschitz_ratio(disc, data, samples[2 * i], samples[2 * i + 1]);
        ScanPair& s = report.pairs[k];
        s.parameter_distance = r.parameter_distance;
        s.trace_distance = r.trace_distance;
        s.floor = r.parameter_distance / c_emp * (1.0 - tolerance);
        s.holds = r.trace_distance >= s.floor;
    });
    report.min_trace_distance = std::numeric_limits<double>::infinity();
    for (const ScanPair& s : report.pairs) {
        report.min_trace_distance = std::min(report.min_trace_distance, s.trace_distance);
        if (!s.holds) ++report.violations;
    }
    if (report.violations > 0) {
        log_warning("identifiability floor violated by " + std::to_string(report.violations) +
                    " pairs (possible discrete non-identifiability)");
    }
    return report;
}

HypothesisReport hypothesis_check(const Discretization& disc, const PreparedData& data, const AdmissibleSet& K,
                                  const std::vector<RobinCoefficient>& samples, const HypothesisOptions& options) {
    if (samples.empty()) throw InputError("hypothesis check needs at least one sample");
    const RobinBasis& jac_basis = options.jacobian_basis ? *options.jacobian_basis : disc.basis();
    const int m = disc.basis().size();
    std::vector<int> probes(m);
    for (int j = 0; j < m; ++j) probes[j] = j;

    HypothesisReport report;
    report.data_bound = data.norms.data_bound();
    std::mt19937_64 rng(options.seed);
    bool c1 = true;
    bool injective = true;
    for (const RobinCoefficient& q : samples) {
        HypothesisSample s;
        s.q = q.coeffs();
        const RobinCoefficient h = q.with_coeffs(unit_direction(rng, m));
        const RobinCoefficient l = q.with_coeffs(unit_direction(rng, m));

        const TaylorReport taylor = taylor_remainder_test(disc, data, q, h, options.scales, options.threads);
        s.taylor_slope = taylor.remainder_slope;
        s.difference_slope = taylor.difference_slope;
        s.taylor_saturated = taylor.saturated;

        const ContinuityReport cont = dT_continuity_test(disc, data, q, l, options.scales, probes, options.threads);
        s.continuity_slope = cont.slope;
        s.continuity_monotone = cont.monotone;

        const StateTrajectory traj = solve_forward(disc, data, q);
        const GramSpectrum spec = gram_spectrum(assemble_jacobian(disc, q, traj, jac_basis, options.threads));
        s.gram_min = spec.min();
        s.gram_max = spec.max();
        s.gram_condition = spec.condition();
        s.injective = spec.injective();

        c1 = c1 && !s.taylor_saturated && s.taylor_slope >= kTaylorSlopeMin && s.taylor_slope <= kTaylorSlopeMax &&
             s.difference_slope >= kDifferenceSlopeMin && s.difference_slope <= kDifferenceSlopeMax &&
             s.continuity_slope >= kContinuitySlopeMin && s.continuity_slope <= kContinuitySlopeMax;
        injective = injective && s.injective;
        report.samples.push_back(std::move(s));
    }

    double c_emp = 0.0;
    if (options.c_emp) {
        c_emp = *options.c_emp;
    } else {
        StabilityOptions probe;
        probe.threads = options.threads;
        probe.jacobian_samples = 0;
        c_emp = estimate_constant(disc, data, K, options.scan_pairs, options.seed, probe).c_emp;
    }
    // The scan uses its own stream so its pairs differ from the probe's.
    report.scan = identifiability_scan(disc, data, K, options.scan_pairs, options.seed + 1, c_emp, 0.05,
                                       options.threads);
    report.injectivity = report.scan.holds();
    report.c1_regularity = c1;
    report.derivative_injective = injective;
    return report;
}

}  // namespace stokes_robin
