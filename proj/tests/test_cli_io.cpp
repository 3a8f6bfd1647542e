#include "stokes_robin/config.hpp"
#include "stokes_robin/error.hpp"
#include "stokes_robin/experiment.hpp"
#include "stokes_robin/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace stokes_robin;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("stokes_robin_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

/// Small configuration for fast end-to-end runs.
ExperimentConfig small_config() {
    ExperimentConfig c;
    c.geometry.refinements = 1;
    c.time.steps = 8;
    return c;
}

}  // namespace

TEST_CASE("defaults from a minimal config") {
    const ExperimentConfig c = parse_config_string("[geometry]\nnx = 4\nny = 2\n[time]\nsteps = 32\n");
    CHECK(c == ExperimentConfig{});
    CHECK(c.geometry.length == 2.0);
    CHECK(c.geometry.outlet_segments == 2);
    CHECK(c.parameter_space.lower == 0.5);
    CHECK(c.parameter_space.upper == 5.0);
    CHECK(c.probe.n_pairs == 200);
    CHECK(c.inversion.max_iterations == 50);
    CHECK(c.inversion.q_init.kind == "midpoint");
}

TEST_CASE("configuration errors name the key") {
    try {
        parse_config_string("[parameter_space]\nlower = 0.0\n");
        FAIL("m = 0 must be rejected");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "parameter_space.lower");
        CHECK(std::string(e.what()).find("positive") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_string("[geometry]\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("[geometry]\nnx = 'four'\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("[geometry\nnx = 4\n"), InputError);
    CHECK_THROWS_AS(parse_config_string("[geometry]\nny = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("[parameter_space]\nlower = 6.0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("[inversion.q_true]\nkind = 'nope'\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(fs::path("/nonexistent/config.toml")), InputError);
}

TEST_CASE("round trip and hashing") {
    ExperimentConfig c;
    c.inversion.regularization = 1e-7;
    c.inversion.q_true = {"coeffs", 1.0, 0, std::vector<double>(20, 1.25)};
    c.data.robin_load = {"constant", 1.0, 0.5, 1.0, {0.25, -0.5}};
    c.measurement = {0.25, 0.75};
    const std::string text = to_toml(c);
    const ExperimentConfig back = parse_config_string(text);
    CHECK(back == c);
    CHECK(to_toml(back) == text);
    CHECK(config_hash(back) == config_hash(c));
    CHECK(config_hash(c).size() == 16);
    CHECK(config_hash(c) != config_hash(ExperimentConfig{}));

    ExperimentConfig seeded;
    override_seeds(seeded, 99);
    CHECK(seeded.probe.seed == 99);
    CHECK(seeded.hypotheses.seed == 99);
    CHECK(seeded.energy.seed == 99);
    CHECK(seeded.inversion.seed == 99);
}

TEST_CASE("coefficient JSON round trip") {
    const Experiment ex(small_config());
    const RobinCoefficient q = ex.q_true();
    const RobinCoefficient back = coefficient_from_json(coefficient_to_json(q));
    CHECK(back.coeffs() == q.coeffs());
    CHECK(back.basis() == q.basis());
    CHECK_THROWS_AS(coefficient_from_json(Json{{"coeffs", 1}}), InputError);
}

TEST_CASE("wave coefficient") {
    const Experiment ex(small_config());
    const RobinCoefficient q = ex.q_true();
    CHECK(q.coeffs()[0] == doctest::Approx(2.75));
    CHECK(q.coeffs()[1] == doctest::Approx(4.0));
    CHECK(q.coeffs()[3] == doctest::Approx(2.75));
    CHECK(ex.admissible.contains(q));
    CHECK(make_coefficient({"constant", 1.5}, ex.basis, ex.admissible).coeffs().isConstant(1.5));
    CHECK_THROWS_AS(make_coefficient({"coeffs", 1.0, 0, {1.0, 2.0}}, ex.basis, ex.admissible), InputError);
}

TEST_CASE("trace CSV round trip") {
    const Experiment ex(small_config());
    const MeasurementTrace trace = extract_trace(solve_forward(*ex.disc, ex.prepared, ex.q_true()));
    const fs::path dir = scratch_dir("trace");
    write_trace_csv(dir / "t.csv", trace, ex.disc->trace_space(), ex.disc->grid());
    const MeasurementTrace back = read_trace_csv(dir / "t.csv", *ex.disc);
    CHECK((back - trace).norm() <= 1e-12 * trace.norm());

    auto rows = read_csv(dir / "t.csv");
    {
        std::ofstream out(dir / "short.csv");
        for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
            for (std::size_t k = 0; k < rows[i].size(); ++k) out << (k ? "," : "") << rows[i][k];
            out << '\n';
        }
    }
    CHECK_THROWS_AS(read_trace_csv(dir / "short.csv", *ex.disc), InputError);
    {
        std::ofstream out(dir / "bad.csv");
        out << "step,time,x,y,ux,uy\n0,0,0,0.3333,1,1\n";
    }
    CHECK_THROWS_AS(read_trace_csv(dir / "bad.csv", *ex.disc), InputError);
    CHECK_THROWS_AS(read_trace_csv(dir / "missing.csv", *ex.disc), InputError);
}

TEST_CASE("forward with zero data writes a zero trace") {
    ExperimentConfig c = small_config();
    c.data.initial_velocity.kind = "zero";
    c.data.inlet_traction.kind = "zero";
    const fs::path dir = run_subcommand("forward", c, {scratch_dir("zero"), 1, {}});
    const auto rows = read_csv(dir / "trace.csv");
    REQUIRE(rows.size() > 1);
    CHECK(rows[0] == std::vector<std::string>{"step", "time", "x", "y", "ux", "uy"});
    for (std::size_t i = 1; i < rows.size(); ++i) {
        REQUIRE(rows[i].size() == 6);
        CHECK(std::stod(rows[i][4]) == 0.0);
        CHECK(std::stod(rows[i][5]) == 0.0);
    }
    const Json j = read_json(dir / "forward.json");
    CHECK(j["trace_norm"].get<double>() == 0.0);
    CHECK(j["energy"].is_null());
    CHECK(fs::exists(dir / "config.toml"));
    CHECK(parse_config(dir / "config.toml") == c);
    CHECK(dir.filename() == config_hash(c));
}

TEST_CASE("convergence table with three levels") {
    ExperimentConfig c = small_config();
    c.convergence.levels = 3;
    c.convergence.temporal_levels = 2;
    c.convergence.temporal_mesh_level = 2;
    const fs::path dir = run_subcommand("convergence", c, {scratch_dir("conv"), 1, {}});
    const auto rows = read_csv(dir / "convergence_spatial.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[0][0] == "level");
    CHECK(rows[1][6].empty());
    for (int r = 2; r <= 3; ++r) {
        CHECK(std::stod(rows[r][7]) > 1.5);  // L2(H1) rate
    }
    CHECK(read_csv(dir / "convergence_temporal.csv").size() == 3);
    const Json j = read_json(dir / "convergence.json");
    CHECK(j["spatial"]["rows"].size() == 3);
}

TEST_CASE("zero manufactured solution has zero errors") {
    ConvergenceOptions opts;
    opts.levels = 2;
    opts.base_time_steps = 4;
    ManufacturedSolution zero;
    zero.amplitude = 0.0;
    zero.pressure_amplitude = 0.0;
    const ConvergenceTable t = spatial_convergence(zero, opts);
    for (const auto& row : t.rows) {
        CHECK(row.l2l2 == 0.0);
        CHECK(row.l2h1 == 0.0);
        CHECK(row.trace == 0.0);
    }
    CHECK(std::isnan(t.l2h1_rates[0]));
    opts.levels = 1;
    CHECK_THROWS_AS(spatial_convergence(zero, opts), InputError);
}

TEST_CASE("unknown subcommand") {
    CHECK_THROWS_AS(run_subcommand("bogus", small_config(), {scratch_dir("bogus"), 1, {}}), InputError);
}

TEST_CASE("JSON reports are reproducible") {
    ExperimentConfig c = small_config();
    const fs::path a = run_subcommand("sensitivity", c, {scratch_dir("det_a"), 1, {}});
    const fs::path b = run_subcommand("sensitivity", c, {scratch_dir("det_b"), 1, {}});
    std::ifstream fa(a / "sensitivity.json"), fb(b / "sensitivity.json");
    const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
    CHECK(!sa.empty());
    CHECK(sa == sb);
}
