#include "stokes_robin/io.hpp"

#include "stokes_robin/error.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace stokes_robin {

namespace {

std::string kind_name(BoundaryKind k) {
    switch (k) {
        case BoundaryKind::Lateral: return "lateral";
        case BoundaryKind::Inlet: return "inlet";
        case BoundaryKind::Outlet: return "outlet";
    }
    return "unknown";
}

Json vector_json(const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Json doubles_json(const std::vector<double>& v) { return Json(v); }

/// JSON has no infinity; keep the information as a string.
Json number_or_string(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << std::setprecision(17);
    return out;
}

std::string csv_number(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

}  // namespace

Json mesh_to_json(const Mesh& mesh) {
    Json j;
    j["geometry"] = {{"length", mesh.geometry().length},
                     {"height", mesh.geometry().height},
                     {"outlet_segments", mesh.geometry().outlet_segments}};
    Json verts = Json::array();
    for (const Point& p : mesh.vertices()) verts.push_back({p.x(), p.y()});
    j["vertices"] = std::move(verts);
    Json tris = Json::array();
    for (const auto& t : mesh.triangles()) tris.push_back({t[0], t[1], t[2]});
    j["triangles"] = std::move(tris);
    Json edges = Json::array();
    for (const BoundaryEdge& e : mesh.boundary_edges()) {
        edges.push_back({{"vertices", {e.vertices[0], e.vertices[1]}},
                         {"kind", kind_name(e.tag.kind)},
                         {"segment", e.tag.segment},
                         {"normal", {e.normal.x(), e.normal.y()}},
                         {"length", e.length}});
    }
    j["boundary"] = std::move(edges);
    return j;
}

Json coefficient_to_json(const RobinCoefficient& q) {
    const RobinBasis& b = q.basis();
    if (!b.is_tensor()) throw InputError("only tensor-layout Robin coefficients can be serialized");
    Json j;
    j["time_knots"] = b.time_knots();
    j["segment_bounds"] = b.segment_bounds();
    j["segment_knots"] = b.segment_knots();
    j["coeffs"] = vector_json(q.coeffs());
    return j;
}

RobinCoefficient coefficient_from_json(const Json& j) {
    try {
        auto basis = std::make_shared<const RobinBasis>(j.at("time_knots").get<std::vector<double>>(),
                                                        j.at("segment_bounds").get<std::vector<double>>(),
                                                        j.at("segment_knots").get<std::vector<std::vector<double>>>());
        const auto c = j.at("coeffs").get<std::vector<double>>();
        if (static_cast<int>(c.size()) != basis->size()) {
            throw InputError("coefficient count does not match the basis");
        }
        return RobinCoefficient(basis, Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed Robin coefficient JSON: ") + e.what());
    }
}

Json to_json(const DataNorms& n) {
    return {{"initial", n.initial},
            {"inlet", n.inlet},
            {"robin_load", n.robin_load},
            {"data_bound_M1", n.data_bound()},
            {"total", n.total()}};
}

Json to_json(const EnergyReport& r) {
    return {{"ratios", doubles_json(r.ratios)},
            {"max_ratio", r.max_ratio},
            {"min_ratio", r.min_ratio},
            {"spread", number_or_string(r.spread())},
            {"norms", to_json(r.norms)}};
}

Json to_json(const GramSpectrum& s) {
    return {{"eigenvalues", vector_json(s.eigenvalues)},
            {"min", s.min()},
            {"max", s.max()},
            {"condition", number_or_string(s.condition())},
            {"injective", s.injective()},
            {"relative_tolerance", GramSpectrum::kInjectivityTolerance}};
}

Json to_json(const TaylorReport& r) {
    return {{"scales", doubles_json(r.scales)},
            {"remainders", doubles_json(r.remainders)},
            {"differences", doubles_json(r.differences)},
            {"remainder_slope", r.remainder_slope},
            {"difference_slope", r.difference_slope},
            {"saturated", r.saturated}};
}

Json to_json(const ContinuityReport& r) {
    return {{"scales", doubles_json(r.scales)},
            {"estimates", doubles_json(r.estimates)},
            {"slope", r.slope},
            {"monotone", r.monotone}};
}

Json to_json(const InversionResult& r) {
    Json history = Json::array();
    for (const IterationRecord& h : r.history) {
        history.push_back({{"iteration", h.iteration},
                           {"misfit", h.misfit},
                           {"gradient_norm", h.gradient_norm},
                           {"step_norm", h.step_norm},
                           {"damping", h.damping},
                           {"accepted", h.accepted}});
    }
    return {{"recovered", coefficient_to_json(r.recovered)},
            {"converged", r.converged},
            {"reason", r.reason},
            {"iterations", r.iterations},
            {"history", std::move(history)}};
}

Json to_json(const StabilityReport& r) {
    Json growth = Json::array();
    for (const auto& [n, c] : r.growth) growth.push_back({{"n", n}, {"c_emp", number_or_string(c)}});
    Json growth_sampled = Json::array();
    for (const auto& [n, c] : r.growth_sampled) growth_sampled.push_back({{"n", n}, {"c_emp", number_or_string(c)}});
    Json ratios = Json::array();
    for (const PairRecord& p : r.pairs) ratios.push_back(number_or_string(p.ratio.ratio));
    return {{"seed", r.seed},
            {"n_pairs", r.n_pairs},
            {"total_pairs", r.pairs.size()},
            {"c_emp", number_or_string(r.c_emp)},
            {"c_emp_sampled", number_or_string(r.c_emp_sampled)},
            {"c_emp_is_lower_bound", true},
            {"singular_pair_ratio", number_or_string(r.singular_pair_ratio)},
            {"min_trace_distance", r.min_trace_distance},
            {"growth", std::move(growth)},
            {"growth_sampled", std::move(growth_sampled)},
            {"jacobian_min_singular", doubles_json(r.jacobian_min_singular)},
            {"max_prediction_deviation", r.max_prediction_deviation},
            {"identifiability_violations", r.identifiability_violations},
            {"data_bound_M1", r.data_bound},
            {"ratios", std::move(ratios)}};
}

Json to_json(const IdentifiabilityReport& r) {
    Json pairs = Json::array();
    for (const ScanPair& p : r.pairs) {
        pairs.push_back({{"parameter_distance", p.parameter_distance},
                         {"trace_distance", p.trace_distance},
                         {"floor", p.floor},
                         {"holds", p.holds}});
    }
    return {{"seed", r.seed},
            {"c_emp", r.c_emp},
            {"tolerance", r.tolerance},
            {"excluded", r.excluded},
            {"min_trace_distance", number_or_string(r.min_trace_distance)},
            {"violations", r.violations},
            {"holds", r.holds()},
            {"pairs", std::move(pairs)}};
}

Json to_json(const HypothesisReport& r) {
    Json samples = Json::array();
    for (const HypothesisSample& s : r.samples) {
        samples.push_back({{"q", vector_json(s.q)},
                           {"taylor_slope", s.taylor_slope},
                           {"difference_slope", s.difference_slope},
                           {"taylor_saturated", s.taylor_saturated},
                           {"continuity_slope", s.continuity_slope},
                           {"continuity_monotone", s.continuity_monotone},
                           {"gram_min", s.gram_min},
                           {"gram_max", s.gram_max},
                           {"gram_condition", number_or_string(s.gram_condition)},
                           {"injective", s.injective}});
    }
    return {{"verdict",
             {{"injectivity", r.injectivity},
              {"c1_regularity", r.c1_regularity},
              {"derivative_injective", r.derivative_injective},
              {"all_pass", r.all_pass()}}},
            {"data_bound_M1", r.data_bound},
            {"samples", std::move(samples)},
            {"identifiability_scan", to_json(r.scan)}};
}

Json to_json(const ConvergenceTable& t) {
    Json rows = Json::array();
    for (const ConvergenceErrors& e : t.rows) {
        rows.push_back({{"level", e.level},
                        {"h", e.h},
                        {"time_steps", e.time_steps},
                        {"l2l2", e.l2l2},
                        {"l2h1", e.l2h1},
                        {"trace", e.trace}});
    }
    auto rates = [](const std::vector<double>& v) {
        Json a = Json::array();
        for (double x : v) a.push_back(number_or_string(x));
        return a;
    };
    return {{"rows", std::move(rows)},
            {"l2l2_rates", rates(t.l2l2_rates)},
            {"l2h1_rates", rates(t.l2h1_rates)},
            {"trace_rates", rates(t.trace_rates)}};
}

void write_json(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << j.dump(2) << "\n";
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("invalid JSON in '" + path.string() + "': " + e.what());
    }
}

void write_trace_csv(const std::filesystem::path& path, const MeasurementTrace& trace, const TraceSpace& space,
                     const TimeGrid& grid) {
    auto out = open_output(path);
    const auto& pts = space.node_points();
    const int n = static_cast<int>(pts.size());
    const Eigen::MatrixXd& v = trace.values();
    if (v.rows() != 2 * n || v.cols() != grid.steps() + 1) throw InputError("trace does not match window and grid");
    out << "step,time,x,y,ux,uy\n";
    for (int s = 0; s <= grid.steps(); ++s) {
        for (int i = 0; i < n; ++i) {
            out << s << ',' << grid.time(s) << ',' << pts[i].x() << ',' << pts[i].y() << ',' << v(i, s) << ','
                << v(n + i, s) << '\n';
        }
    }
}

MeasurementTrace read_trace_csv(const std::filesystem::path& path, const Discretization& disc) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open trace file '" + path.string() + "'");
    const auto& pts = disc.trace_space().node_points();
    const TimeGrid& grid = disc.grid();
    const int n = static_cast<int>(pts.size());
    Eigen::MatrixXd values = Eigen::MatrixXd::Constant(2 * n, grid.steps() + 1, std::numeric_limits<double>::quiet_NaN());

    std::string line;
    std::getline(in, line);
    if (line.rfind("step,time,x,y,ux,uy", 0) != 0) throw InputError(path.string() + ": missing trace CSV header");
    int row = 1;
    constexpr double tol = 1e-9;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string cell;
        std::vector<double> f;
        while (std::getline(fields, cell, ',')) {
            try {
                f.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw InputError(path.string() + ":" + std::to_string(row) + ": not a number: '" + cell + "'");
            }
        }
        if (f.size() != 6) throw InputError(path.string() + ":" + std::to_string(row) + ": expected 6 columns");
        const int step = static_cast<int>(f[0]);
        if (step < 0 || step > grid.steps() || std::abs(f[1] - grid.time(step)) > tol) {
            throw InputError(path.string() + ":" + std::to_string(row) + ": time does not match the solver grid");
        }
        int node = -1;
        for (int i = 0; i < n; ++i) {
            if (std::abs(pts[i].x() - f[2]) <= tol && std::abs(pts[i].y() - f[3]) <= tol) node = i;
        }
        if (node < 0) {
            throw InputError(path.string() + ":" + std::to_string(row) + ": point is not a node of the measurement window");
        }
        values(node, step) = f[4];
        values(n + node, step) = f[5];
    }
    if (values.hasNaN()) throw InputError(path.string() + ": trace does not cover every window node and time node");
    return MeasurementTrace(disc.trace_metric(), std::move(values));
}

void write_iterations_csv(const std::filesystem::path& path, const InversionResult& result) {
    auto out = open_output(path);
    out << "iteration,misfit,gradient_norm,step_norm,damping,accepted\n";
    for (const IterationRecord& h : result.history) {
        out << h.iteration << ',' << h.misfit << ',' << h.gradient_norm << ',' << h.step_norm << ',' << h.damping
            << ',' << (h.accepted ? 1 : 0) << '\n';
    }
}

void write_pairs_csv(const std::filesystem::path& path, const StabilityReport& report) {
    auto out = open_output(path);
    out << "index,kind,parameter_distance,trace_distance,ratio,predicted_ratio\n";
    for (const PairRecord& p : report.pairs) {
        out << p.index << ',' << to_string(p.kind) << ',' << p.ratio.parameter_distance << ','
            << p.ratio.trace_distance << ',' << p.ratio.ratio << ','
            << (p.predicted_ratio ? csv_number(*p.predicted_ratio) : std::string()) << '\n';
    }
}

void write_convergence_csv(const std::filesystem::path& path, const ConvergenceTable& table) {
    auto out = open_output(path);
    out << "level,h,time_steps,l2l2,l2h1,trace,rate_l2l2,rate_l2h1,rate_trace\n";
    for (std::size_t k = 0; k < table.rows.size(); ++k) {
        const auto& e = table.rows[k];
        out << e.level << ',' << e.h << ',' << e.time_steps << ',' << e.l2l2 << ',' << e.l2h1 << ',' << e.trace;
        if (k == 0) {
            out << ",,,\n";
        } else {
            out << ',' << table.l2l2_rates[k - 1] << ',' << table.l2h1_rates[k - 1] << ',' << table.trace_rates[k - 1]
                << '\n';
        }
    }
}

}  // namespace stokes_robin
