#include "stokes_robin/experiment.hpp"

#include "stokes_robin/error.hpp"
#include "stokes_robin/log.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace stokes_robin {

namespace {

/// 4 y (H - y) / H^2: unit-peak parabolic profile across the channel.
double parabola(double y, double H) { return 4.0 * y * (H - y) / (H * H); }

}  // namespace

ProblemData make_problem_data(const ExperimentConfig& config) {
    const double H = config.geometry.height;
    const double T = config.time.final_time;
    ProblemData data;

    const FieldSpec& u0 = config.data.initial_velocity;
    if (u0.kind == "poiseuille") {
        const double a = u0.amplitude;
        data.initial_velocity = [a, H](const Point& x) { return Point(a * parabola(x.y(), H), 0.0); };
    }

    const FieldSpec& g = config.data.inlet_traction;
    if (g.kind == "pulsatile") {
        const double a = g.amplitude, pulse = g.pulse, w = 2.0 * std::numbers::pi * g.frequency / T;
        data.inlet_traction = [=](double t, const Point& x) {
            return Point(a * (1.0 + pulse * std::sin(w * t)) * parabola(x.y(), H), 0.0);
        };
    } else if (g.kind == "constant") {
        const Point v(g.value[0], g.value[1]);
        data.inlet_traction = [v](double, const Point&) { return v; };
    }

    const FieldSpec& kappa = config.data.robin_load;
    if (kappa.kind == "constant") {
        const Point v(kappa.value[0], kappa.value[1]);
        data.robin_load = [v](double, const Point&) { return v; };
    }
    return data;
}

ManufacturedSolution make_manufactured(const ExperimentConfig& config) {
    ManufacturedSolution m;
    m.length = config.geometry.length;
    m.height = config.geometry.height;
    m.amplitude = config.convergence.amplitude;
    m.pressure_amplitude = config.convergence.pressure_amplitude;
    m.time_amplitude = config.convergence.time_amplitude;
    m.time_frequency = config.convergence.time_frequency;
    return m;
}

ConvergenceOptions make_convergence_options(const ExperimentConfig& config, int threads) {
    ConvergenceOptions o;
    o.coarse_nx = config.geometry.nx;
    o.coarse_ny = config.geometry.ny;
    o.outlet_segments = config.geometry.outlet_segments;
    o.final_time = config.time.final_time;
    o.levels = config.convergence.levels;
    o.base_time_steps = config.convergence.base_time_steps;
    o.temporal_levels = config.convergence.temporal_levels;
    o.temporal_mesh_level = config.convergence.temporal_mesh_level;
    o.temporal_base_steps = config.convergence.temporal_base_steps;
    o.window_begin = config.measurement.begin;
    o.window_end = config.measurement.end;
    o.q_value = config.convergence.q_value;
    o.threads = threads;
    return o;
}

RobinCoefficient make_coefficient(const CoefficientSpec& spec, const std::shared_ptr<const RobinBasis>& basis,
                                  const AdmissibleSet& K) {
    if (spec.kind == "midpoint") return RobinCoefficient::constant(basis, K.midpoint());
    if (spec.kind == "constant") return RobinCoefficient::constant(basis, spec.value);
    if (spec.kind == "sample") return sample_K(K, basis, 1, spec.seed)[0];
    if (spec.kind == "wave") {
        // q(t, y) = mid + value * sin(2 pi t / T + pi y / H) taken at the knots.
        if (!basis->is_tensor()) throw InputError("a wave coefficient needs the tensor basis layout");
        const double height = basis->segment_bounds().back() - basis->segment_bounds().front();
        std::vector<double> spatial_knots;
        for (const auto& knots : basis->segment_knots()) {
            for (double y : knots) spatial_knots.push_back(y);
        }
        Eigen::VectorXd c(basis->size());
        for (int j = 0; j < basis->size(); ++j) {
            const double t = basis->time_knots()[basis->time_index(j)];
            const double y = spatial_knots[basis->space_index(j)] - basis->segment_bounds().front();
            c[j] = K.midpoint() + spec.value * std::sin(2.0 * std::numbers::pi * t / basis->final_time() +
                                                       std::numbers::pi * y / height);
        }
        return RobinCoefficient(basis, std::move(c));
    }
    if (spec.kind == "coeffs") {
        if (static_cast<int>(spec.coeffs.size()) != basis->size()) {
            throw InputError("coefficient list has " + std::to_string(spec.coeffs.size()) + " entries, the basis has " +
                             std::to_string(basis->size()) + " functions");
        }
        return RobinCoefficient(basis, Eigen::Map<const Eigen::VectorXd>(spec.coeffs.data(),
                                                                         static_cast<Eigen::Index>(spec.coeffs.size())));
    }
    throw InputError("unknown coefficient kind '" + spec.kind + "'");
}

Experiment::Experiment(const ExperimentConfig& cfg) : config(cfg) {
    validate(config);
    const auto& g = config.geometry;
    coarse = std::make_shared<const Mesh>(build_channel_mesh(g.length, g.height, g.nx, g.ny, g.outlet_segments));
    Mesh fine = *coarse;
    for (int r = 0; r < g.refinements; ++r) fine = refine(fine);
    mesh = std::make_shared<const Mesh>(std::move(fine));
    basis = std::make_shared<const RobinBasis>(RobinBasis::from_mesh(*coarse, config.time.final_time,
                                                                     config.parameter_space.time_knots,
                                                                     config.parameter_space.spatial_knots_per_segment));
    disc = std::make_unique<Discretization>(mesh, TimeGrid(config.time.final_time, config.time.steps), basis,
                                            config.measurement.begin, config.measurement.end);
    admissible = AdmissibleSet(config.parameter_space.lower, config.parameter_space.upper);
    data = make_problem_data(config);
    if (data.initial_velocity) check_initial_divergence(mesh->geometry(), data.initial_velocity);
    prepared = prepare_data(*disc, data);
}

MeasurementTrace measured_trace(const Experiment& ex, const std::optional<std::filesystem::path>& trace_csv) {
    MeasurementTrace trace = [&] {
        if (trace_csv) return read_trace_csv(*trace_csv, *ex.disc);
        const RobinCoefficient q = ex.q_true();
        if (ex.config.inversion.crime_free) return crime_free_trace(*ex.disc, ex.data, q);
        return extract_trace(solve_forward(*ex.disc, ex.prepared, q));
    }();
    return add_noise(trace, ex.config.inversion.noise_level, ex.config.inversion.seed);
}

namespace {

Eigen::VectorXd unit_direction(std::uint64_t seed, int m) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::VectorXd d(m);
    for (int j = 0; j < m; ++j) d[j] = dist(rng);
    return d / d.lpNorm<Eigen::Infinity>();
}

const std::vector<double> kScales{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};

void run_forward(const Experiment& ex, const std::filesystem::path& dir, int threads) {
    const RobinCoefficient q = ex.q_true();
    const StateTrajectory traj = solve_forward(*ex.disc, ex.prepared, q);
    const MeasurementTrace trace = extract_trace(traj);
    write_trace_csv(dir / "trace.csv", trace, ex.disc->trace_space(), ex.disc->grid());
    write_json(dir / "q.json", coefficient_to_json(q));

    Json j;
    j["q"] = coefficient_to_json(q);
    j["norms"] = to_json(ex.prepared.norms);
    j["trace_norm"] = trace.norm();
    j["l2h1_norm"] = l2h1_norm(*ex.disc, traj);
    j["max_divergence_residual"] = max_divergence_residual(*ex.disc, traj);
    j["velocity_unknowns"] = ex.disc->spaces().free_size();
    j["pressure_unknowns"] = ex.disc->spaces().num_pressure();
    j["time_steps"] = ex.disc->grid().steps();
    if (ex.prepared.norms.total() > 0.0) {
        const auto samples = sample_K(ex.admissible, ex.basis, ex.config.energy.samples, ex.config.energy.seed);
        j["energy"] = to_json(verify_energy_estimate(*ex.disc, ex.data, samples, threads));
    } else {
        j["energy"] = nullptr;  // all data vanish: the solution is zero and the ratio undefined
    }
    write_json(dir / "forward.json", j);
}

void run_sensitivity(const Experiment& ex, const std::filesystem::path& dir, int threads) {
    const RobinCoefficient q = ex.q_true();
    const int m = ex.basis->size();
    const StateTrajectory traj = solve_forward(*ex.disc, ex.prepared, q);
    const TraceJacobian jac = assemble_jacobian(*ex.disc, q, traj, threads);
    const RobinBasis degenerate = ex.basis->with_duplicate(0);
    const TraceJacobian jac_degenerate = assemble_jacobian(*ex.disc, q, traj, degenerate, threads);

    const std::uint64_t seed = ex.config.hypotheses.seed;
    const RobinCoefficient h = q.with_coeffs(unit_direction(seed, m));
    const RobinCoefficient l = q.with_coeffs(unit_direction(seed + 1, m));
    std::vector<int> probes(m);
    for (int j = 0; j < m; ++j) probes[j] = j;

    Json gram = Json::array();
    for (int r = 0; r < m; ++r) {
        Json row = Json::array();
        for (int c = 0; c < m; ++c) row.push_back(jac.gram(r, c));
        gram.push_back(std::move(row));
    }
    Json j;
    j["q"] = coefficient_to_json(q);
    j["gram"] = std::move(gram);
    j["spectrum"] = to_json(gram_spectrum(jac));
    j["degenerate_control"] = to_json(gram_spectrum(jac_degenerate));
    j["taylor"] = to_json(taylor_remainder_test(*ex.disc, ex.prepared, q, h, kScales, threads));
    j["continuity"] = to_json(dT_continuity_test(*ex.disc, ex.prepared, q, l, kScales, probes, threads));
    write_json(dir / "sensitivity.json", j);
}

void run_invert(const Experiment& ex, const std::filesystem::path& dir, const RunOptions& options) {
    check_inlet_flux_nonvanishing(*ex.disc, ex.data);
    const MeasurementTrace measured = measured_trace(ex, options.trace_csv);
    write_trace_csv(dir / "measured_trace.csv", measured, ex.disc->trace_space(), ex.disc->grid());
    const RobinCoefficient q0 = ex.q_init();

    double lambda = 0.0;
    if (ex.config.inversion.regularization) {
        lambda = *ex.config.inversion.regularization;
    } else if (ex.config.inversion.noise_level > 0.0) {
        const TraceJacobian jac = assemble_jacobian(*ex.disc, q0, solve_forward(*ex.disc, ex.prepared, q0), options.threads);
        lambda = default_regularization(jac);
    }
    const InverseProblem problem(*ex.disc, ex.prepared, measured, ex.admissible, lambda);
    GaussNewtonOptions gn;
    gn.max_iterations = ex.config.inversion.max_iterations;
    gn.threads = options.threads;
    const InversionResult result = gauss_newton_solve(problem, q0, gn);

    Json j = to_json(result);
    j["regularization"] = lambda;
    j["noise_level"] = ex.config.inversion.noise_level;
    j["crime_free"] = ex.config.inversion.crime_free;
    j["q_init"] = coefficient_to_json(q0);
    if (!options.trace_csv) {
        const RobinCoefficient qt = ex.q_true();
        j["q_true"] = coefficient_to_json(qt);
        j["relative_linf_error"] = linf_distance(result.recovered, qt) / qt.coeffs().lpNorm<Eigen::Infinity>();
    }
    write_json(dir / "inversion.json", j);
    write_json(dir / "recovered.json", coefficient_to_json(result.recovered));
    write_iterations_csv(dir / "iterations.csv", result);
}

void run_probe(const Experiment& ex, const std::filesystem::path& dir, int threads) {
    check_inlet_flux_nonvanishing(*ex.disc, ex.data);
    const auto& p = ex.config.probe;
    StabilityOptions opts;
    opts.small_fraction = p.small_fraction;
    opts.small_scale = p.small_scale;
    opts.threads = threads;
    const StabilityReport report = estimate_constant(*ex.disc, ex.prepared, ex.admissible, p.n_pairs, p.seed, opts);
    const IdentifiabilityReport scan =
        identifiability_scan(*ex.disc, ex.prepared, ex.admissible, p.n_pairs, p.seed + 1, report.c_emp, 0.05, threads);
    Json j = to_json(report);
    j["identifiability_scan"] = to_json(scan);
    write_json(dir / "stability.json", j);
    write_pairs_csv(dir / "pairs.csv", report);
}

void run_hypotheses(const Experiment& ex, const std::filesystem::path& dir, int threads) {
    check_inlet_flux_nonvanishing(*ex.disc, ex.data);
    const auto& hc = ex.config.hypotheses;
    const auto samples = sample_K(ex.admissible, ex.basis, hc.samples, hc.seed);
    HypothesisOptions opts;
    opts.seed = hc.seed;
    opts.scan_pairs = hc.scan_pairs;
    opts.threads = threads;
    const HypothesisReport report = hypothesis_check(*ex.disc, ex.prepared, ex.admissible, samples, opts);

    // Control case: a duplicated basis function must be flagged.
    const RobinBasis degenerate = ex.basis->with_duplicate(0);
    const StateTrajectory traj = solve_forward(*ex.disc, ex.prepared, samples.front());
    const GramSpectrum control = gram_spectrum(assemble_jacobian(*ex.disc, samples.front(), traj, degenerate, threads));

    Json j = to_json(report);
    j["degenerate_control"] = to_json(control);
    j["degenerate_control_flagged"] = !control.injective();
    write_json(dir / "hypotheses.json", j);
}

void run_convergence(const Experiment& ex, const std::filesystem::path& dir, int threads) {
    const ManufacturedSolution exact = make_manufactured(ex.config);
    const ConvergenceOptions opts = make_convergence_options(ex.config, threads);
    const ConvergenceTable spatial = spatial_convergence(exact, opts);
    const ConvergenceTable temporal = temporal_convergence(exact, opts);
    write_convergence_csv(dir / "convergence_spatial.csv", spatial);
    write_convergence_csv(dir / "convergence_temporal.csv", temporal);
    write_json(dir / "convergence.json", Json{{"spatial", to_json(spatial)}, {"temporal", to_json(temporal)}});
}

}  // namespace

std::filesystem::path run_subcommand(const std::string& name, const ExperimentConfig& config,
                                     const RunOptions& options) {
    bool known = false;
    for (const char* s : kSubcommands) known = known || name == s;
    if (!known) throw InputError("unknown subcommand '" + name + "'");

    const std::filesystem::path dir = options.out / config_hash(config);
    if (std::filesystem::exists(dir / "config.toml")) {
        log_warning("output directory " + dir.string() + " already exists; artifacts are overwritten");
    }
    std::filesystem::create_directories(dir);
    {
        std::ofstream cfg(dir / "config.toml");
        cfg << to_toml(config);
    }

    const Experiment ex(config);
    write_json(dir / "mesh.json", mesh_to_json(*ex.mesh));
    log_info("running " + name + " in " + dir.string());
    if (name == "forward") {
        run_forward(ex, dir, options.threads);
    } else if (name == "sensitivity") {
        run_sensitivity(ex, dir, options.threads);
    } else if (name == "invert") {
        run_invert(ex, dir, options);
    } else if (name == "probe-stability") {
        run_probe(ex, dir, options.threads);
    } else if (name == "check-hypotheses") {
        run_hypotheses(ex, dir, options.threads);
    } else {
        run_convergence(ex, dir, options.threads);
    }
    return dir;
}

}  // namespace stokes_robin
