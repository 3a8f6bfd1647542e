#include "stokes_robin/forward.hpp"

#include "stokes_robin/error.hpp"
#include "stokes_robin/log.hpp"
#include "stokes_robin/parallel.hpp"
#include "stokes_robin/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stokes_robin {

namespace {

// int_{edges of kind} |field(t)|^2 by three-point Gauss.
double boundary_l2_squared(const Mesh& mesh, BoundaryKind kind, const VectorField& field, double t) {
    if (!field) return 0.0;
    double sum = 0.0;
    for (const auto& be : mesh.boundary_edges()) {
        if (be.tag.kind != kind) continue;
        const Point& a = mesh.vertices()[be.vertices[0]];
        const Point& b = mesh.vertices()[be.vertices[1]];
        for (const auto& qp : quadrature::gauss3) {
            sum += qp.weight * be.length * field(t, a + qp.s * (b - a)).squaredNorm();
        }
    }
    return sum;
}

double space_time_norm(const Mesh& mesh, const TimeGrid& grid, BoundaryKind kind, const VectorField& field) {
    if (!field) return 0.0;
    double sum = 0.0;
    for (int n = 0; n <= grid.steps(); ++n) {
        sum += grid.trapezoid_weight(n) * boundary_l2_squared(mesh, kind, field, grid.time(n));
    }
    return std::sqrt(sum);
}

}  // namespace

ProblemData ProblemData::scaled(double alpha) const {
    ProblemData out;
    if (initial_velocity) {
        out.initial_velocity = [f = initial_velocity, alpha](const Point& x) -> Point { return alpha * f(x); };
    }
    auto scale = [alpha](const VectorField& f) -> VectorField {
        if (!f) return {};
        return [f, alpha](double t, const Point& x) -> Point { return alpha * f(t, x); };
    };
    out.inlet_traction = scale(inlet_traction);
    out.robin_load = scale(robin_load);
    out.body_force = scale(body_force);
    return out;
}

Discretization::Discretization(std::shared_ptr<const Mesh> mesh, TimeGrid grid,
                               std::shared_ptr<const RobinBasis> basis, double window_begin, double window_end)
    : spaces_(std::move(mesh)),
      ops_(assemble_static(spaces_)),
      grid_(grid),
      basis_(std::move(basis)),
      outlet_(spaces_, *basis_),
      trace_(spaces_, window_begin, window_end) {
    if (std::abs(basis_->final_time() - grid_.final_time()) > 1e-12 * grid_.final_time()) {
        throw InputError("Robin basis and time grid disagree on the final time");
    }
    stepper_ = std::make_unique<SaddlePointStepper>(ops_, grid_.dt(), outlet_);
    metric_ = std::make_shared<TraceMetric>(trace_, grid_);
}

Eigen::MatrixXd Discretization::robin_block(const RobinCoefficient& q, double t) const {
    if (!q.basis().same_layout(*basis_)) throw InputError("Robin coefficient basis does not match the discretization");
    return outlet_.combine(q.spatial_weights(t));
}

PreparedData prepare_data(const Discretization& disc, const ProblemData& data) {
    const FunctionSpaces& spaces = disc.spaces();
    const TimeGrid& grid = disc.grid();
    PreparedData out;
    out.initial_full = spaces.interpolate(data.initial_velocity);
    out.initial = spaces.restrict_vector(out.initial_full);
    out.loads.reserve(grid.steps());
    for (int n = 1; n <= grid.steps(); ++n) {
        const double t = grid.time(n);
        Eigen::VectorXd full = assemble_loads(spaces, data.inlet_traction, data.robin_load, t);
        if (data.body_force) full += assemble_body_force(spaces, data.body_force, t);
        out.loads.push_back(spaces.restrict_vector(full));
    }
    out.norms.initial = std::sqrt(std::max(0.0, out.initial_full.dot(disc.ops().mass_full * out.initial_full)));
    out.norms.inlet = space_time_norm(disc.mesh(), grid, BoundaryKind::Inlet, data.inlet_traction);
    out.norms.robin_load = space_time_norm(disc.mesh(), grid, BoundaryKind::Outlet, data.robin_load);
    return out;
}

void check_inlet_flux_nonvanishing(const Discretization& disc, const ProblemData& data) {
    const TimeGrid& grid = disc.grid();
    for (int n = 0; n <= grid.steps(); ++n) {
        if (!(boundary_l2_squared(disc.mesh(), BoundaryKind::Inlet, data.inlet_traction, grid.time(n)) > 0.0)) {
            throw InputError("inlet traction g vanishes identically at t = " + std::to_string(grid.time(n)));
        }
    }
}

void check_initial_divergence(const ChannelGeometry& geometry, const StaticVectorField& u0) {
    if (!u0) return;
    const double scale = std::max(geometry.length, geometry.height);
    const double h = 1e-5 * scale;
    double max_div = 0.0;
    double max_grad = 0.0;
    for (int i = 1; i < 20; ++i) {
        for (int j = 1; j < 10; ++j) {
            const Point x(geometry.length * i / 20.0, geometry.height * j / 10.0);
            const Point dx = (u0(x + Point(h, 0)) - u0(x - Point(h, 0))) / (2 * h);
            const Point dy = (u0(x + Point(0, h)) - u0(x - Point(0, h))) / (2 * h);
            max_div = std::max(max_div, std::abs(dx.x() + dy.y()));
            max_grad = std::max({max_grad, dx.norm(), dy.norm()});
        }
    }
    if (max_div > 1e-6 * (1.0 + max_grad)) {
        throw InputError("initial velocity is not divergence free (max |div u0| = " + std::to_string(max_div) + ")");
    }
}

TraceMetric::TraceMetric(const TraceSpace& space, const TimeGrid& grid) : mass_(space.mass()) {
    weights_.resize(grid.steps() + 1);
    for (int n = 0; n <= grid.steps(); ++n) weights_[n] = grid.trapezoid_weight(n);
}

double TraceMetric::inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) const {
    double sum = 0.0;
    for (Eigen::Index n = 0; n < a.cols(); ++n) sum += weights_[n] * a.col(n).dot(mass_ * b.col(n));
    return sum;
}

MeasurementTrace::MeasurementTrace(std::shared_ptr<const TraceMetric> metric, Eigen::MatrixXd values)
    : metric_(std::move(metric)), values_(std::move(values)) {
    if (!metric_) throw InputError("measurement trace needs a metric");
    if (values_.rows() != metric_->mass().rows() ||
        values_.cols() != static_cast<Eigen::Index>(metric_->weights().size())) {
        throw InputError("measurement trace shape does not match its window and time grid");
    }
}

double MeasurementTrace::norm() const { return std::sqrt(std::max(0.0, inner(*this))); }

MeasurementTrace MeasurementTrace::operator-(const MeasurementTrace& other) const {
    return {metric_, values_ - other.values_};
}
MeasurementTrace MeasurementTrace::operator+(const MeasurementTrace& other) const {
    return {metric_, values_ + other.values_};
}
MeasurementTrace MeasurementTrace::operator*(double alpha) const { return {metric_, alpha * values_}; }

StateTrajectory solve_forward(const Discretization& disc, const PreparedData& data, const RobinCoefficient& q) {
    const TimeGrid& grid = disc.grid();
    const SaddlePointStepper& stepper = disc.stepper();
    const int nv = stepper.num_velocity();
    const int np = stepper.num_pressure();
    if (static_cast<int>(data.loads.size()) != grid.steps() || data.initial.size() != nv) {
        throw InputError("prepared data does not match the discretization");
    }
    if (q.coeffs().minCoeff() <= 0.0) {
        log_warning("Robin coefficient has non-positive coefficients (min " + std::to_string(q.coeffs().minCoeff()) +
                    "); q is outside L-infinity-plus");
    }

    StateTrajectory traj;
    traj.source = &disc;
    traj.robin_coeffs = q.coeffs();
    traj.velocity.reserve(grid.steps() + 1);
    traj.pressure.reserve(grid.steps());
    traj.velocity.push_back(data.initial);
    traj.outlet_velocity.push_back(disc.outlet().gather(data.initial));

    auto steps = std::make_shared<std::vector<SaddlePointStepper::Step>>();
    steps->reserve(grid.steps());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + np);
    const double inv_dt = 1.0 / grid.dt();
    for (int n = 0; n < grid.steps(); ++n) {
        const double t = grid.time(n + 1);
        steps->push_back(stepper.prepare(disc.robin_block(q, t)));
        rhs.head(nv) = inv_dt * (disc.ops().mass * traj.velocity.back()) + data.loads[n];
        const Eigen::VectorXd x = stepper.solve(steps->back(), rhs);
        if (!x.allFinite()) throw SolverError("non-finite solution at time step " + std::to_string(n + 1));
        traj.velocity.push_back(x.head(nv));
        traj.pressure.push_back(x.tail(np));
        traj.outlet_velocity.push_back(disc.outlet().gather(traj.velocity.back()));
    }
    traj.steps = std::move(steps);
    return traj;
}

StateTrajectory solve_forward(const Discretization& disc, const ProblemData& data, const RobinCoefficient& q) {
    return solve_forward(disc, prepare_data(disc, data), q);
}

MeasurementTrace extract_trace(const StateTrajectory& trajectory) {
    if (!trajectory.source) throw InputError("trajectory has no discretization");
    return extract_trace(trajectory, trajectory.source->trace_space(), trajectory.source->trace_metric());
}

MeasurementTrace extract_trace(const StateTrajectory& trajectory, const TraceSpace& space,
                               std::shared_ptr<const TraceMetric> metric) {
    Eigen::MatrixXd values(space.size(), static_cast<Eigen::Index>(trajectory.velocity.size()));
    for (std::size_t n = 0; n < trajectory.velocity.size(); ++n) {
        values.col(static_cast<Eigen::Index>(n)) = space.restrict_free(trajectory.velocity[n]);
    }
    return {std::move(metric), std::move(values)};
}

double l2h1_norm(const Discretization& disc, const StateTrajectory& trajectory) {
    const SparseMatrix h1 = disc.ops().mass + disc.ops().stiffness;
    double sum = 0.0;
    for (int n = 0; n <= disc.grid().steps(); ++n) {
        const auto& u = trajectory.velocity[n];
        sum += disc.grid().trapezoid_weight(n) * u.dot(h1 * u);
    }
    return std::sqrt(sum);
}

double max_divergence_residual(const Discretization& disc, const StateTrajectory& trajectory) {
    double worst = 0.0;
    for (std::size_t n = 1; n < trajectory.velocity.size(); ++n) {
        const auto& u = trajectory.velocity[n];
        const double scale = std::sqrt(u.dot(disc.ops().mass * u));
        if (scale == 0.0) continue;
        worst = std::max(worst, (disc.ops().divergence * u).norm() / scale);
    }
    return worst;
}

EnergyReport verify_energy_estimate(const Discretization& disc, const ProblemData& data,
                                    const std::vector<RobinCoefficient>& samples, int threads) {
    if (samples.empty()) throw InputError("energy estimate needs at least one q sample");
    const PreparedData prepared = prepare_data(disc, data);
    const double denominator = prepared.norms.total();
    if (!(denominator > 0.0)) throw InputError("energy estimate: data norms are all zero");

    EnergyReport report;
    report.norms = prepared.norms;
    report.ratios.assign(samples.size(), 0.0);
    parallel_for(static_cast<int>(samples.size()), threads, [&](int i) {
        report.ratios[i] = l2h1_norm(disc, solve_forward(disc, prepared, samples[i])) / denominator;
    });
    report.max_ratio = *std::max_element(report.ratios.begin(), report.ratios.end());
    report.min_ratio = *std::min_element(report.ratios.begin(), report.ratios.end());
    return report;
}

}  // namespace stokes_robin
