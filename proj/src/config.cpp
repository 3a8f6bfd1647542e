#include "stokes_robin/config.hpp"

#include "stokes_robin/error.hpp"

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace stokes_robin {

namespace {

/// Reads one TOML table, remembering which keys were consumed so that
/// leftovers (typos) can be reported.
class TableReader {
public:
    TableReader(const toml::table* table, std::string prefix) : table_(table), prefix_(std::move(prefix)) {}

    std::string key(const std::string& name) const { return prefix_.empty() ? name : prefix_ + "." + name; }

    const toml::node* node(const std::string& name) {
        used_.insert(name);
        return table_ ? table_->get(name) : nullptr;
    }

    void read(const std::string& name, double& out) {
        if (const auto* n = node(name)) {
            if (auto v = n->value_exact<double>()) {
                out = *v;
            } else if (auto i = n->value_exact<std::int64_t>()) {
                out = static_cast<double>(*i);
            } else {
                throw ConfigError(key(name), "expected a number");
            }
        }
    }

    void read(const std::string& name, int& out) {
        if (const auto* n = node(name)) {
            auto v = n->value_exact<std::int64_t>();
            if (!v) throw ConfigError(key(name), "expected an integer");
            if (*v < std::numeric_limits<int>::min() || *v > std::numeric_limits<int>::max()) {
                throw ConfigError(key(name), "integer out of range");
            }
            out = static_cast<int>(*v);
        }
    }

    void read(const std::string& name, std::uint64_t& out) {
        if (const auto* n = node(name)) {
            auto v = n->value_exact<std::int64_t>();
            if (!v) throw ConfigError(key(name), "expected an integer");
            if (*v < 0) throw ConfigError(key(name), "seed must be non-negative");
            out = static_cast<std::uint64_t>(*v);
        }
    }

    void read(const std::string& name, bool& out) {
        if (const auto* n = node(name)) {
            auto v = n->value_exact<bool>();
            if (!v) throw ConfigError(key(name), "expected a boolean");
            out = *v;
        }
    }

    void read(const std::string& name, std::string& out) {
        if (const auto* n = node(name)) {
            auto v = n->value_exact<std::string>();
            if (!v) throw ConfigError(key(name), "expected a string");
            out = *v;
        }
    }

    void read(const std::string& name, std::vector<double>& out) {
        if (const auto* n = node(name)) {
            const auto* arr = n->as_array();
            if (!arr) throw ConfigError(key(name), "expected an array of numbers");
            out.clear();
            for (const auto& item : *arr) {
                if (auto v = item.value_exact<double>()) {
                    out.push_back(*v);
                } else if (auto i = item.value_exact<std::int64_t>()) {
                    out.push_back(static_cast<double>(*i));
                } else {
                    throw ConfigError(key(name), "expected an array of numbers");
                }
            }
        }
    }

    void read(const std::string& name, std::array<double, 2>& out) {
        std::vector<double> v{out[0], out[1]};
        read(name, v);
        if (v.size() != 2) throw ConfigError(key(name), "expected two numbers");
        out = {v[0], v[1]};
    }

    /// Sub-table; absent tables read as empty.
    TableReader sub(const std::string& name) {
        const auto* n = node(name);
        if (n && !n->is_table()) throw ConfigError(key(name), "expected a table");
        return TableReader(n ? n->as_table() : nullptr, key(name));
    }

    void reject_unknown() const {
        if (!table_) return;
        for (const auto& [k, v] : *table_) {
            if (!used_.count(std::string(k.str()))) throw ConfigError(key(std::string(k.str())), "unknown key");
        }
    }

private:
    const toml::table* table_;
    std::string prefix_;
    std::set<std::string> used_;
};

void read_field(TableReader& parent, const std::string& name, FieldSpec& f) {
    TableReader r = parent.sub(name);
    r.read("kind", f.kind);
    r.read("amplitude", f.amplitude);
    r.read("pulse", f.pulse);
    r.read("frequency", f.frequency);
    r.read("value", f.value);
    r.reject_unknown();
}

void read_coefficient(TableReader& parent, const std::string& name, CoefficientSpec& c) {
    TableReader r = parent.sub(name);
    r.read("kind", c.kind);
    r.read("value", c.value);
    r.read("seed", c.seed);
    r.read("coeffs", c.coeffs);
    r.reject_unknown();
}

toml::table field_table(const FieldSpec& f) {
    return toml::table{{"kind", f.kind},
                       {"amplitude", f.amplitude},
                       {"pulse", f.pulse},
                       {"frequency", f.frequency},
                       {"value", toml::array{f.value[0], f.value[1]}}};
}

toml::table coefficient_table(const CoefficientSpec& c) {
    toml::array coeffs;
    for (double v : c.coeffs) coeffs.push_back(v);
    return toml::table{{"kind", c.kind},
                       {"value", c.value},
                       {"seed", static_cast<std::int64_t>(c.seed)},
                       {"coeffs", std::move(coeffs)}};
}

void require(bool ok, const std::string& key, const std::string& msg) {
    if (!ok) throw ConfigError(key, msg);
}

void check_seed(std::uint64_t seed, const std::string& key) {
    require(seed <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()), key,
            "seed must fit in a signed 64-bit integer");
}

void check_kind(const std::string& kind, std::initializer_list<const char*> allowed, const std::string& key) {
    for (const char* a : allowed) {
        if (kind == a) return;
    }
    std::string list;
    for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
    throw ConfigError(key, "unknown kind '" + kind + "' (expected one of: " + list + ")");
}

void check_finite(double v, const std::string& key) { require(std::isfinite(v), key, "must be finite"); }

}  // namespace

void validate(const ExperimentConfig& c) {
    const auto& g = c.geometry;
    check_finite(g.length, "geometry.length");
    check_finite(g.height, "geometry.height");
    require(g.length > 0.0, "geometry.length", "must be positive");
    require(g.height > 0.0, "geometry.height", "must be positive");
    require(g.nx >= 1, "geometry.nx", "must be at least 1");
    require(g.ny >= 1, "geometry.ny", "must be at least 1");
    require(g.outlet_segments >= 1, "geometry.outlet_segments", "must be at least 1");
    require(g.ny % g.outlet_segments == 0, "geometry.outlet_segments", "must divide geometry.ny");
    require(g.refinements >= 0, "geometry.refinements", "must be non-negative");

    check_finite(c.time.final_time, "time.final_time");
    require(c.time.final_time > 0.0, "time.final_time", "must be positive");
    require(c.time.steps >= 1, "time.steps", "must be at least 1");

    check_kind(c.data.initial_velocity.kind, {"poiseuille", "zero"}, "data.initial_velocity.kind");
    check_kind(c.data.inlet_traction.kind, {"pulsatile", "constant", "zero"}, "data.inlet_traction.kind");
    check_kind(c.data.robin_load.kind, {"constant", "zero"}, "data.robin_load.kind");
    check_kind(c.data.body_force.kind, {"zero"}, "data.body_force.kind");

    const auto& p = c.parameter_space;
    require(p.time_knots >= 2, "parameter_space.time_knots", "must be at least 2");
    require(p.spatial_knots_per_segment >= 0, "parameter_space.spatial_knots_per_segment",
            "must be non-negative (0 selects the coarse outlet vertices)");
    check_finite(p.lower, "parameter_space.lower");
    check_finite(p.upper, "parameter_space.upper");
    require(p.lower > 0.0, "parameter_space.lower", "lower bound m must be positive: q >= m > 0 is required");
    require(p.upper > p.lower, "parameter_space.upper", "must exceed parameter_space.lower");

    require(c.measurement.begin >= 0.0, "measurement.begin", "must lie in [0, H]");
    require(c.measurement.end <= g.height, "measurement.end", "must lie in [0, H]");
    require(c.measurement.end > c.measurement.begin, "measurement.end", "window must be nonempty");

    const auto& inv = c.inversion;
    if (inv.regularization) {
        check_finite(*inv.regularization, "inversion.regularization");
        require(*inv.regularization >= 0.0, "inversion.regularization", "must be non-negative");
    }
    require(inv.noise_level >= 0.0 && std::isfinite(inv.noise_level), "inversion.noise_level",
            "must be a non-negative number");
    check_seed(inv.seed, "inversion.seed");
    for (const auto& [spec, key] : {std::pair{&inv.q_init, std::string("inversion.q_init")},
                                    std::pair{&inv.q_true, std::string("inversion.q_true")}}) {
        check_kind(spec->kind, {"midpoint", "constant", "sample", "wave", "coeffs"}, key + ".kind");
        check_seed(spec->seed, key + ".seed");
        if (spec->kind == "coeffs") require(!spec->coeffs.empty(), key + ".coeffs", "must list the coefficients");
    }
    require(inv.max_iterations >= 1, "inversion.max_iterations", "must be at least 1");

    require(c.probe.n_pairs >= 1, "probe.n_pairs", "must be at least 1");
    check_seed(c.probe.seed, "probe.seed");
    require(c.probe.small_fraction >= 0.0 && c.probe.small_fraction <= 1.0, "probe.small_fraction",
            "must lie in [0, 1]");
    require(c.probe.small_scale > 0.0 && c.probe.small_scale < 0.5, "probe.small_scale", "must lie in (0, 0.5)");

    require(c.hypotheses.samples >= 1, "hypotheses.samples", "must be at least 1");
    require(c.hypotheses.scan_pairs >= 1, "hypotheses.scan_pairs", "must be at least 1");
    check_seed(c.hypotheses.seed, "hypotheses.seed");

    require(c.energy.samples >= 1, "energy.samples", "must be at least 1");
    check_seed(c.energy.seed, "energy.seed");

    const auto& cv = c.convergence;
    require(cv.levels >= 2, "convergence.levels", "rates need at least 2 levels");
    require(cv.temporal_levels >= 2, "convergence.temporal_levels", "rates need at least 2 levels");
    require(cv.base_time_steps >= 1, "convergence.base_time_steps", "must be at least 1");
    require(cv.temporal_base_steps >= 1, "convergence.temporal_base_steps", "must be at least 1");
    require(cv.temporal_mesh_level >= 0, "convergence.temporal_mesh_level", "must be non-negative");
    require(cv.q_value > 0.0, "convergence.q_value", "must be positive");
}

ExperimentConfig parse_config_string(const std::string& text, const std::string& origin) {
    toml::table root;
    try {
        root = toml::parse(text, origin);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << origin << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
        throw InputError(msg.str());
    }

    ExperimentConfig c;
    TableReader top(&root, "");
    {
        TableReader r = top.sub("geometry");
        r.read("length", c.geometry.length);
        r.read("height", c.geometry.height);
        r.read("nx", c.geometry.nx);
        r.read("ny", c.geometry.ny);
        r.read("outlet_segments", c.geometry.outlet_segments);
        r.read("refinements", c.geometry.refinements);
        r.reject_unknown();
    }
    {
        TableReader r = top.sub("time");
        r.read("final_time", c.time.final_time);
        r.read("steps", c.time.steps);
        r.reject_unknown();
    }
    {
        TableReader r = top.sub("data");
        read_field(r, "initial_velocity", c.data.initial_velocity);
        read_field(r, "inlet_traction", c.data.inlet_traction);
        read_field(r, "robin_load", c.data.robin_load);
        read_field(r, "body_force", c.data.body_force);
        r.reject_unknown();
    }
    {
        TableReader r = top.sub("parameter_space");
        r.read("time_knots", c.parameter_space.time_knots);
        r.read("spatial_knots_per_segment", c.parameter_space.spatial_knots_per_segment);
        r.read("lower", c.parameter_space.lower);
        r.read("upper", c.parameter_space.upper);
        r.reject_unknown();
    }
    {
        TableReader r = top.sub("measurement");
        r.read("begin", c.measurement.begin);
        r.read("end", c.measurement.end);
        r.reject_unknown();
    }
    {
        TableReader r = top.sub("inversion");
        if (const auto* n = r.node("regularization")) {
            if (auto s = n->value_exact<std::string>()) {
                if (*s != "auto") throw ConfigError(r.key("regularization"), "expected a number or \"auto\"");
                c.inversion.regularization.reset();
            } else {
                double v = 0.0;
                r.read("regularization", v);
                c.inversion.regularization = v;
            }
        }
        r.read("noise_level", c.inversion.noise_level);
        r.read("seed", c.inversion.seed);
        read_coefficient(r, "q_init", c.inversion.q_init);
        read_coefficient(r, "q_true", c.inversion.q_true);
        r.read("max_iterations", c.inversion.max_iterations);
        r.read("crime_free", c.inversion.crime_free);
        r.reject_unknown();
    }
    {
        TableReader r = top.sub("probe");
        r.read("n_pairs", c.probe.n_pairs);
        r.read("seed", c.probe.seed);
        r.read("small_fraction", c.probe.small_fraction);
        r.read("small_scale", c.probe.small_scale);
        r.reject_unknown();
    }
    {
        TableReader r = top.sub("hypotheses");
        r.read("samples", c.hypotheses.samples);
        r.read("seed", c.hypotheses.seed);
        r.read("scan_pairs", c.hypotheses.scan_pairs);
        r.reject_unknown();
    }
    {
        TableReader r = top.sub("energy");
        r.read("samples", c.energy.samples);
        r.read("seed", c.energy.seed);
        r.reject_unknown();
    }
    {
        TableReader r = top.sub("convergence");
        auto& cv = c.convergence;
        r.read("levels", cv.levels);
        r.read("base_time_steps", cv.base_time_steps);
        r.read("temporal_levels", cv.temporal_levels);
        r.read("temporal_mesh_level", cv.temporal_mesh_level);
        r.read("temporal_base_steps", cv.temporal_base_steps);
        r.read("q_value", cv.q_value);
        r.read("amplitude", cv.amplitude);
        r.read("pressure_amplitude", cv.pressure_amplitude);
        r.read("time_amplitude", cv.time_amplitude);
        r.read("time_frequency", cv.time_frequency);
        r.reject_unknown();
    }
    top.reject_unknown();
    validate(c);
    return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_string(text.str(), path.string());
}

std::string to_toml(const ExperimentConfig& c) {
    toml::table root;
    root.insert("geometry", toml::table{{"length", c.geometry.length},
                                        {"height", c.geometry.height},
                                        {"nx", c.geometry.nx},
                                        {"ny", c.geometry.ny},
                                        {"outlet_segments", c.geometry.outlet_segments},
                                        {"refinements", c.geometry.refinements}});
    root.insert("time", toml::table{{"final_time", c.time.final_time}, {"steps", c.time.steps}});
    root.insert("data", toml::table{{"initial_velocity", field_table(c.data.initial_velocity)},
                                    {"inlet_traction", field_table(c.data.inlet_traction)},
                                    {"robin_load", field_table(c.data.robin_load)},
                                    {"body_force", field_table(c.data.body_force)}});
    root.insert("parameter_space", toml::table{{"time_knots", c.parameter_space.time_knots},
                                               {"spatial_knots_per_segment", c.parameter_space.spatial_knots_per_segment},
                                               {"lower", c.parameter_space.lower},
                                               {"upper", c.parameter_space.upper}});
    root.insert("measurement", toml::table{{"begin", c.measurement.begin}, {"end", c.measurement.end}});
    toml::table inv{{"noise_level", c.inversion.noise_level},
                    {"seed", static_cast<std::int64_t>(c.inversion.seed)},
                    {"q_init", coefficient_table(c.inversion.q_init)},
                    {"q_true", coefficient_table(c.inversion.q_true)},
                    {"max_iterations", c.inversion.max_iterations},
                    {"crime_free", c.inversion.crime_free}};
    if (c.inversion.regularization) {
        inv.insert("regularization", *c.inversion.regularization);
    } else {
        inv.insert("regularization", "auto");
    }
    root.insert("inversion", std::move(inv));
    root.insert("probe", toml::table{{"n_pairs", c.probe.n_pairs},
                                     {"seed", static_cast<std::int64_t>(c.probe.seed)},
                                     {"small_fraction", c.probe.small_fraction},
                                     {"small_scale", c.probe.small_scale}});
    root.insert("hypotheses", toml::table{{"samples", c.hypotheses.samples},
                                          {"seed", static_cast<std::int64_t>(c.hypotheses.seed)},
                                          {"scan_pairs", c.hypotheses.scan_pairs}});
    root.insert("energy", toml::table{{"samples", c.energy.samples},
                                      {"seed", static_cast<std::int64_t>(c.energy.seed)}});
    const auto& cv = c.convergence;
    root.insert("convergence", toml::table{{"levels", cv.levels},
                                           {"base_time_steps", cv.base_time_steps},
                                           {"temporal_levels", cv.temporal_levels},
                                           {"temporal_mesh_level", cv.temporal_mesh_level},
                                           {"temporal_base_steps", cv.temporal_base_steps},
                                           {"q_value", cv.q_value},
                                           {"amplitude", cv.amplitude},
                                           {"pressure_amplitude", cv.pressure_amplitude},
                                           {"time_amplitude", cv.time_amplitude},
                                           {"time_frequency", cv.time_frequency}});
    std::ostringstream out;
    out << root << "\n";
    return out.str();
}

std::string config_hash(const ExperimentConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_toml(config)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void override_seeds(ExperimentConfig& config, std::uint64_t seed) {
    config.inversion.seed = seed;
    config.probe.seed = seed;
    config.hypotheses.seed = seed;
    config.energy.seed = seed;
}

}  // namespace stokes_robin
