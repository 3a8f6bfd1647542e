#include "stokes_robin/parameter_space.hpp"

#include "stokes_robin/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

namespace stokes_robin {

namespace {

bool strictly_increasing(const std::vector<double>& v) {
    return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
}

// Hat function of knot `k` on the increasing grid `knots`, clamped at the ends.
double hat(const std::vector<double>& knots, int k, double x) {
    const int n = static_cast<int>(knots.size());
    if (n == 1) return 1.0;
    x = std::clamp(x, knots.front(), knots.back());
    if (k > 0 && x >= knots[k - 1] && x <= knots[k]) {
        return (x - knots[k - 1]) / (knots[k] - knots[k - 1]);
    }
    if (k < n - 1 && x >= knots[k] && x <= knots[k + 1]) {
        return (knots[k + 1] - x) / (knots[k + 1] - knots[k]);
    }
    return 0.0;
}

}  // namespace

RobinBasis::RobinBasis(std::vector<double> time_knots, std::vector<double> segment_bounds,
                       std::vector<std::vector<double>> segment_knots,
                       std::vector<std::pair<int, int>> functions)
    : time_knots_(std::move(time_knots)),
      segment_bounds_(std::move(segment_bounds)),
      segment_knots_(std::move(segment_knots)),
      functions_(std::move(functions)) {
    if (time_knots_.size() < 2 || time_knots_.front() != 0.0 || !strictly_increasing(time_knots_)) {
        throw InputError("time knots must start at 0 and increase strictly (at least two knots)");
    }
    if (segment_knots_.empty() || segment_bounds_.size() != segment_knots_.size() + 1 ||
        !strictly_increasing(segment_bounds_)) {
        throw InputError("segment bounds must be N+1 increasing arc positions");
    }
    for (std::size_t i = 0; i < segment_knots_.size(); ++i) {
        const auto& knots = segment_knots_[i];
        const double lo = segment_bounds_[i];
        const double hi = segment_bounds_[i + 1];
        if (knots.empty() || !strictly_increasing(knots)) {
            throw InputError("segment knots must be nonempty and strictly increasing");
        }
        if (knots.size() == 1 && (knots[0] < lo || knots[0] > hi)) {
            throw InputError("single segment knot outside its segment");
        }
        if (knots.size() > 1 && (std::abs(knots.front() - lo) > 1e-12 || std::abs(knots.back() - hi) > 1e-12)) {
            throw InputError("segment knots must span the segment end points");
        }
        for (std::size_t k = 0; k < knots.size(); ++k) {
            spatial_.push_back({static_cast<int>(i) + 1, static_cast<int>(k)});
        }
    }
    const int nt = static_cast<int>(time_knots_.size());
    const int ns = static_cast<int>(spatial_.size());
    if (functions_.empty()) {
        for (int k = 0; k < nt; ++k) {
            for (int s = 0; s < ns; ++s) functions_.emplace_back(k, s);
        }
        tensor_ = true;
    } else {
        for (const auto& [k, s] : functions_) {
            if (k < 0 || k >= nt || s < 0 || s >= ns) throw InputError("basis function index out of range");
        }
        tensor_ = static_cast<int>(functions_.size()) == nt * ns;
        for (int j = 0; tensor_ && j < nt * ns; ++j) {
            tensor_ = functions_[j] == std::pair<int, int>{j / ns, j % ns};
        }
    }
}

RobinBasis RobinBasis::from_mesh(const Mesh& mesh, double final_time, int time_knot_count,
                                 int spatial_knots_per_segment) {
    if (!(final_time > 0.0)) throw InputError("final time must be positive");
    if (time_knot_count < 2) throw InputError("at least two time knots are required");
    std::vector<double> time_knots(time_knot_count);
    for (int k = 0; k < time_knot_count; ++k) {
        time_knots[k] = final_time * k / (time_knot_count - 1);
    }
    time_knots.back() = final_time;

    const int n_seg = mesh.geometry().outlet_segments;
    std::vector<double> bounds;
    std::vector<std::vector<double>> knots(n_seg);
    for (int i = 1; i <= n_seg; ++i) {
        const auto edges = boundary_edges_by_tag(mesh, BoundaryTag::outlet(i));
        std::set<double> ys;
        for (const auto& be : edges) {
            ys.insert(mesh.vertices()[be.vertices[0]].y());
            ys.insert(mesh.vertices()[be.vertices[1]].y());
        }
        const double lo = *ys.begin();
        const double hi = *ys.rbegin();
        if (i == 1) bounds.push_back(lo);
        bounds.push_back(hi);
        if (spatial_knots_per_segment <= 0) {
            knots[i - 1].assign(ys.begin(), ys.end());
        } else if (spatial_knots_per_segment == 1) {
            knots[i - 1] = {0.5 * (lo + hi)};
        } else {
            for (int k = 0; k < spatial_knots_per_segment; ++k) {
                knots[i - 1].push_back(lo + (hi - lo) * k / (spatial_knots_per_segment - 1));
            }
            knots[i - 1].back() = hi;
        }
    }
    return RobinBasis(std::move(time_knots), std::move(bounds), std::move(knots));
}

RobinBasis RobinBasis::with_duplicate(int j) const {
    if (j < 0 || j >= size()) throw InputError("basis index out of range");
    auto functions = functions_;
    functions.push_back(functions_[j]);
    return RobinBasis(time_knots_, segment_bounds_, segment_knots_, std::move(functions));
}

double RobinBasis::time_hat(int k, double t) const { return hat(time_knots_, k, t); }

double RobinBasis::spatial_hat(int s, const OutletPoint& x) const {
    const auto& f = spatial_[s];
    if (f.segment != x.segment) return 0.0;
    return hat(segment_knots_[f.segment - 1], f.knot, x.arc);
}

OutletPoint RobinBasis::locate(const ChannelGeometry& geometry, const Point& x) const {
    const double tol = 1e-9 * std::max(geometry.length, geometry.height);
    if (std::abs(x.x() - geometry.length) > tol || x.y() < segment_bounds_.front() - tol ||
        x.y() > segment_bounds_.back() + tol) {
        throw InputError("point is not on the outlet boundary");
    }
    const int n = num_segments();
    for (int i = 1; i < n; ++i) {
        if (x.y() < segment_bounds_[i]) return {i, x.y()};
    }
    return {n, x.y()};
}

bool RobinBasis::operator==(const RobinBasis& other) const {
    return time_knots_ == other.time_knots_ && segment_bounds_ == other.segment_bounds_ &&
           segment_knots_ == other.segment_knots_ && functions_ == other.functions_;
}

RobinCoefficient::RobinCoefficient(std::shared_ptr<const RobinBasis> basis, Eigen::VectorXd coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
    if (!basis_) throw InputError("Robin coefficient needs a basis");
    if (coeffs_.size() != basis_->size()) {
        throw InputError("coefficient count " + std::to_string(coeffs_.size()) + " does not match basis size " +
                         std::to_string(basis_->size()));
    }
}

RobinCoefficient RobinCoefficient::constant(std::shared_ptr<const RobinBasis> basis, double value) {
    const int m = basis->size();
    return {std::move(basis), Eigen::VectorXd::Constant(m, value)};
}

double RobinCoefficient::evaluate(double t, const OutletPoint& x) const {
    double v = 0.0;
    for (int j = 0; j < size(); ++j) v += coeffs_[j] * basis_->value(j, t, x);
    return v;
}

Eigen::VectorXd RobinCoefficient::spatial_weights(double t) const {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(basis_->num_spatial());
    for (int j = 0; j < size(); ++j) {
        w[basis_->space_index(j)] += coeffs_[j] * basis_->time_hat(basis_->time_index(j), t);
    }
    return w;
}

double evaluate_q(const RobinCoefficient& q, const ChannelGeometry& geometry, double t, const Point& x) {
    return q.evaluate(t, q.basis().locate(geometry, x));
}

double linf_distance(const RobinCoefficient& q1, const RobinCoefficient& q2) {
    if (!(q1.basis() == q2.basis())) throw InputError("Robin coefficients use different bases");
    if (q1.basis().is_tensor()) return (q1.coeffs() - q2.coeffs()).lpNorm<Eigen::Infinity>();
    return sampled_linf_distance(q1, q2, 201, 41);
}

double sampled_linf_distance(const RobinCoefficient& q1, const RobinCoefficient& q2, int time_samples,
                             int space_samples) {
    if (!(q1.basis() == q2.basis())) throw InputError("Robin coefficients use different bases");
    const RobinBasis& basis = q1.basis();
    const RobinCoefficient diff = q1.with_coeffs(q1.coeffs() - q2.coeffs());

    std::set<double> times(basis.time_knots().begin(), basis.time_knots().end());
    for (int i = 0; i < time_samples; ++i) {
        times.insert(basis.final_time() * i / std::max(1, time_samples - 1));
    }
    double best = 0.0;
    for (int seg = 1; seg <= basis.num_segments(); ++seg) {
        const double lo = basis.segment_bounds()[seg - 1];
        const double hi = basis.segment_bounds()[seg];
        std::set<double> arcs(basis.segment_knots()[seg - 1].begin(), basis.segment_knots()[seg - 1].end());
        for (int i = 0; i < space_samples; ++i) arcs.insert(lo + (hi - lo) * i / std::max(1, space_samples - 1));
        for (double t : times) {
            for (double y : arcs) best = std::max(best, std::abs(diff.evaluate(t, {seg, y})));
        }
    }
    return best;
}

AdmissibleSet::AdmissibleSet(double lower_bound, double upper_bound) : lower(lower_bound), upper(upper_bound) {
    if (!(lower > 0.0)) throw InputError("admissible lower bound m must be positive (q >= m > 0)");
    if (!(upper > lower)) throw InputError("admissible upper bound must exceed the lower bound");
}

bool AdmissibleSet::contains(const RobinCoefficient& q) const {
    return q.coeffs().minCoeff() >= lower && q.coeffs().maxCoeff() <= upper;
}

RobinCoefficient project_onto_K(const RobinCoefficient& q, const AdmissibleSet& K) {
    return q.with_coeffs(q.coeffs().cwiseMax(K.lower).cwiseMin(K.upper));
}

std::vector<RobinCoefficient> sample_K(const AdmissibleSet& K, std::shared_ptr<const RobinBasis> basis,
                                       int count, std::uint64_t seed) {
    if (count < 1) throw InputError("sample count must be at least 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(K.lower, K.upper);
    std::vector<RobinCoefficient> out;
    out.reserve(count);
    for (int n = 0; n < count; ++n) {
        Eigen::VectorXd c(basis->size());
        for (int j = 0; j < c.size(); ++j) c[j] = uniform(rng);
        out.emplace_back(basis, std::move(c));
    }
    return out;
}

}  // namespace stokes_robin
