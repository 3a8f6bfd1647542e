#include "stokes_robin/manufactured.hpp"

#include "stokes_robin/error.hpp"
#include "stokes_robin/parallel.hpp"
#include "stokes_robin/quadrature.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace stokes_robin {

namespace {

constexpr double pi = std::numbers::pi;

/// a(x) = 2 + sin(pi x / L) and its first three derivatives.
std::array<double, 4> profile_x(double L, double x) {
    const double k = pi / L;
    const double s = std::sin(k * x);
    const double c = std::cos(k * x);
    return {2.0 + s, k * c, -k * k * s, -k * k * k * c};
}

/// b(y) = y^2 (H - y)^2 and its first three derivatives.
std::array<double, 4> profile_y(double H, double y) {
    return {y * y * (H - y) * (H - y), 2.0 * H * H * y - 6.0 * H * y * y + 4.0 * y * y * y,
            2.0 * H * H - 12.0 * H * y + 12.0 * y * y, -12.0 * H + 24.0 * y};
}

}  // namespace

double ManufacturedSolution::theta(double t) const { return 1.0 + time_amplitude * std::sin(time_frequency * t); }

double ManufacturedSolution::theta_dot(double t) const {
    return time_amplitude * time_frequency * std::cos(time_frequency * t);
}

Point ManufacturedSolution::velocity(double t, const Point& x) const {
    const auto a = profile_x(length, x.x());
    const auto b = profile_y(height, x.y());
    const double s = theta(t) * amplitude;
    return {s * a[0] * b[1], -s * a[1] * b[0]};
}

Point ManufacturedSolution::velocity_time_derivative(double t, const Point& x) const {
    const auto a = profile_x(length, x.x());
    const auto b = profile_y(height, x.y());
    const double s = theta_dot(t) * amplitude;
    return {s * a[0] * b[1], -s * a[1] * b[0]};
}

Eigen::Matrix2d ManufacturedSolution::velocity_gradient(double t, const Point& x) const {
    const auto a = profile_x(length, x.x());
    const auto b = profile_y(height, x.y());
    const double s = theta(t) * amplitude;
    Eigen::Matrix2d g;
    g << s * a[1] * b[1], s * a[0] * b[2], -s * a[2] * b[0], -s * a[1] * b[1];
    return g;
}

Point ManufacturedSolution::velocity_laplacian(double t, const Point& x) const {
    const auto a = profile_x(length, x.x());
    const auto b = profile_y(height, x.y());
    const double s = theta(t) * amplitude;
    return {s * (a[2] * b[1] + a[0] * b[3]), -s * (a[3] * b[0] + a[1] * b[2])};
}

double ManufacturedSolution::pressure(double t, const Point& x) const {
    return theta(t) * pressure_amplitude * std::cos(pi * x.x() / length) * std::cos(pi * x.y() / height);
}

Point ManufacturedSolution::pressure_gradient(double t, const Point& x) const {
    const double s = theta(t) * pressure_amplitude;
    const double cx = std::cos(pi * x.x() / length), sx = std::sin(pi * x.x() / length);
    const double cy = std::cos(pi * x.y() / height), sy = std::sin(pi * x.y() / height);
    return {-s * pi / length * sx * cy, -s * pi / height * cx * sy};
}

ProblemData ManufacturedSolution::problem_data(const RobinCoefficient& q) const {
    const ManufacturedSolution self = *this;
    const ChannelGeometry geometry{length, height, q.basis().num_segments()};
    ProblemData data;
    data.initial_velocity = [self](const Point& x) { return self.velocity(0.0, x); };
    data.body_force = [self](double t, const Point& x) -> Point {
        return self.velocity_time_derivative(t, x) - self.velocity_laplacian(t, x) + self.pressure_gradient(t, x);
    };
    // Inlet normal (-1, 0): grad u . nu - p nu = -d_x u + p e_x.
    data.inlet_traction = [self](double t, const Point& x) -> Point {
        const Eigen::Matrix2d g = self.velocity_gradient(t, x);
        return Point(-g(0, 0) + self.pressure(t, x), -g(1, 0));
    };
    // Outlet normal (1, 0): d_x u - p e_x + q u.
    data.robin_load = [self, q, geometry](double t, const Point& x) -> Point {
        const Eigen::Matrix2d g = self.velocity_gradient(t, x);
        const double qv = evaluate_q(q, geometry, t, x);
        const Point u = self.velocity(t, x);
        return Point(g(0, 0) - self.pressure(t, x) + qv * u.x(), g(1, 0) + qv * u.y());
    };
    return data;
}

ConvergenceErrors manufactured_errors(const Discretization& disc, const StateTrajectory& trajectory,
                                      const ManufacturedSolution& exact) {
    const FunctionSpaces& spaces = disc.spaces();
    const Mesh& mesh = disc.mesh();
    const TimeGrid& grid = disc.grid();
    const TraceSpace& window = disc.trace_space();

    ConvergenceErrors out;
    out.time_steps = grid.steps();
    for (const auto& e : mesh.edges()) {
        out.h = std::max(out.h, (mesh.vertices()[e[1]] - mesh.vertices()[e[0]]).norm());
    }

    double l2 = 0.0, h1 = 0.0, tr = 0.0;
    for (int n = 0; n <= grid.steps(); ++n) {
        const double t = grid.time(n);
        const double w = grid.trapezoid_weight(n);
        const Eigen::VectorXd full = spaces.extend_vector(trajectory.velocity[n]);
        double l2n = 0.0, h1n = 0.0;
        for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
            const auto& tri = mesh.triangles()[k];
            const double area = mesh.signed_area(k);
            for (const auto& qp : quadrature::triangle6) {
                Point x = Point::Zero();
                for (int i = 0; i < 3; ++i) x += qp.lambda[i] * mesh.vertices()[tri[i]];
                Point uh;
                Eigen::Matrix2d gh;
                spaces.evaluate(full, k, qp.lambda, uh, gh);
                l2n += qp.weight * area * (uh - exact.velocity(t, x)).squaredNorm();
                h1n += qp.weight * area * (gh - exact.velocity_gradient(t, x)).squaredNorm();
            }
        }
        // Window trace error with the P2 edge interpolant of the discrete trace.
        double trn = 0.0;
        for (std::size_t b = 0; b < mesh.boundary_edges().size(); ++b) {
            const BoundaryEdge& edge = mesh.boundary_edges()[b];
            if (edge.tag.kind != BoundaryKind::Inlet) continue;
            const Point& p0 = mesh.vertices()[edge.vertices[0]];
            const Point& p1 = mesh.vertices()[edge.vertices[1]];
            const double mid = 0.5 * (p0.y() + p1.y());
            if (mid < window.arc_begin() || mid > window.arc_end()) continue;
            const auto nodes = spaces.boundary_edge_nodes(b);
            for (const auto& gp : quadrature::gauss3) {
                const double s = gp.s;
                const std::array<double, 3> phi{(1 - s) * (1 - 2 * s), 4 * s * (1 - s), s * (2 * s - 1)};
                Point uh = Point::Zero();
                for (int i = 0; i < 3; ++i) {
                    uh += phi[i] * Point(full[nodes[i]], full[spaces.num_nodes() + nodes[i]]);
                }
                const Point x = (1 - s) * p0 + s * p1;
                trn += gp.weight * edge.length * (uh - exact.velocity(t, x)).squaredNorm();
            }
        }
        l2 += w * l2n;
        h1 += w * (l2n + h1n);
        tr += w * trn;
    }
    out.l2l2 = std::sqrt(l2);
    out.l2h1 = std::sqrt(h1);
    out.trace = std::sqrt(tr);
    return out;
}

ConvergenceTable make_table(std::vector<ConvergenceErrors> rows, bool temporal) {
    if (rows.size() < 2) throw InputError("convergence rates need at least two levels");
    ConvergenceTable table;
    auto rate = [](double e0, double e1, double s0, double s1) {
        if (e0 == 0.0 && e1 == 0.0) return std::numeric_limits<double>::quiet_NaN();
        return std::log(e0 / e1) / std::log(s0 / s1);
    };
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
        const auto& a = rows[k];
        const auto& b = rows[k + 1];
        const double s0 = temporal ? 1.0 / a.time_steps : a.h;
        const double s1 = temporal ? 1.0 / b.time_steps : b.h;
        table.l2l2_rates.push_back(rate(a.l2l2, b.l2l2, s0, s1));
        table.l2h1_rates.push_back(rate(a.l2h1, b.l2h1, s0, s1));
        table.trace_rates.push_back(rate(a.trace, b.trace, s0, s1));
    }
    table.rows = std::move(rows);
    return table;
}

namespace {

ConvergenceErrors run_level(const ManufacturedSolution& exact, const ConvergenceOptions& o, int refinements,
                            int steps, int level) {
    const Mesh coarse = build_channel_mesh(exact.length, exact.height, o.coarse_nx, o.coarse_ny, o.outlet_segments);
    Mesh fine = coarse;
    for (int r = 0; r < refinements; ++r) fine = refine(fine);
    auto basis = std::make_shared<const RobinBasis>(RobinBasis::from_mesh(coarse, o.final_time, 2));
    const Discretization disc(std::make_shared<const Mesh>(std::move(fine)), TimeGrid(o.final_time, steps), basis,
                              o.window_begin, o.window_end);
    const RobinCoefficient q = RobinCoefficient::constant(basis, o.q_value);
    const StateTrajectory traj = solve_forward(disc, exact.problem_data(q), q);
    ConvergenceErrors e = manufactured_errors(disc, traj, exact);
    e.level = level;
    return e;
}

}  // namespace

ConvergenceTable spatial_convergence(const ManufacturedSolution& exact, const ConvergenceOptions& options) {
    if (options.levels < 2) throw InputError("convergence study needs at least two levels");
    std::vector<ConvergenceErrors> rows(options.levels);
    parallel_for(options.levels, options.threads, [&](int k) {
        int steps = options.base_time_steps;
        for (int i = 0; i < k; ++i) steps *= 4;
        rows[k] = run_level(exact, options, k, steps, k);
    });
    return make_table(std::move(rows), false);
}

ConvergenceTable temporal_convergence(const ManufacturedSolution& exact, const ConvergenceOptions& options) {
    if (options.temporal_levels < 2) throw InputError("convergence study needs at least two levels");
    std::vector<ConvergenceErrors> rows(options.temporal_levels);
    parallel_for(options.temporal_levels, options.threads, [&](int k) {
        rows[k] = run_level(exact, options, options.temporal_mesh_level, options.temporal_base_steps << k, k);
    });
    return make_table(std::move(rows), true);
}

}  // namespace stokes_robin
