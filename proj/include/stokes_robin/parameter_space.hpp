#pragma once

#include "stokes_robin/mesh.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

namespace stokes_robin {

/// A point of the outlet expressed as (segment 1..N, arc position y).
struct OutletPoint {
    int segment = 1;
    double arc = 0.0;
};

/// Space-time basis on (0, T) x outlet.
///
/// Function j is the product of time hat `time_index(j)` (on `time_knots`)
/// and spatial hat `space_index(j)`. Spatial hats are piecewise linear in the
/// arc position and supported on a single outlet segment, so coefficient
/// functions are continuous in time and on each segment and may jump between
/// segments. The default tensor layout has M = (P+1) * S functions ordered
/// j = k * S + s and forms a partition of unity.
class RobinBasis {
public:
    /// `segment_bounds` (N+1 increasing arc positions) delimit the outlet
    /// segments. `segment_knots[i]` holds the increasing knots of segment i+1;
    /// with two or more knots the first and last must be the segment end
    /// points, a single knot carries one constant function. An empty
    /// `functions` list selects the tensor layout.
    RobinBasis(std::vector<double> time_knots, std::vector<double> segment_bounds,
               std::vector<std::vector<double>> segment_knots,
               std::vector<std::pair<int, int>> functions = {});

    /// Uniform time knots, and spatial knots at the outlet vertices of `mesh`
    /// (or `spatial_knots_per_segment` equispaced knots when > 0).
    static RobinBasis from_mesh(const Mesh& mesh, double final_time, int time_knot_count,
                                int spatial_knots_per_segment = 0);

    /// Copy of this basis with function `j` appended a second time. The result
    /// spans the same space with a linearly dependent generating set.
    RobinBasis with_duplicate(int j) const;

    int size() const { return static_cast<int>(functions_.size()); }
    int num_spatial() const { return static_cast<int>(spatial_.size()); }
    int num_segments() const { return static_cast<int>(segment_knots_.size()); }
    double final_time() const { return time_knots_.back(); }
    const std::vector<double>& time_knots() const { return time_knots_; }
    const std::vector<double>& segment_bounds() const { return segment_bounds_; }
    const std::vector<std::vector<double>>& segment_knots() const { return segment_knots_; }
    const std::vector<std::pair<int, int>>& functions() const { return functions_; }
    /// True for the canonical tensor layout (interpolatory at the knots).
    bool is_tensor() const { return tensor_; }

    int time_index(int j) const { return functions_[j].first; }
    int space_index(int j) const { return functions_[j].second; }
    /// Segment (1..N) carrying spatial function s.
    int segment_of(int s) const { return spatial_[s].segment; }

    double time_hat(int k, double t) const;
    double spatial_hat(int s, const OutletPoint& x) const;
    double value(int j, double t, const OutletPoint& x) const {
        return time_hat(time_index(j), t) * spatial_hat(space_index(j), x);
    }

    /// Locate a physical outlet point; throws InputError when off the outlet.
    OutletPoint locate(const ChannelGeometry& geometry, const Point& x) const;

    bool operator==(const RobinBasis& other) const;
    /// Same time knots and spatial functions (the generating list may differ).
    bool same_layout(const RobinBasis& other) const {
        return time_knots_ == other.time_knots_ && segment_bounds_ == other.segment_bounds_ &&
               segment_knots_ == other.segment_knots_;
    }

private:
    struct SpatialFunction {
        int segment;  // 1..N
        int knot;     // index into segment_knots_[segment-1]
    };

    std::vector<double> time_knots_;
    std::vector<double> segment_bounds_;
    std::vector<std::vector<double>> segment_knots_;
    std::vector<SpatialFunction> spatial_;
    std::vector<std::pair<int, int>> functions_;
    bool tensor_ = true;
};

/// Element of V_M: a coefficient vector against a shared basis.
class RobinCoefficient {
public:
    RobinCoefficient(std::shared_ptr<const RobinBasis> basis, Eigen::VectorXd coeffs);
    static RobinCoefficient constant(std::shared_ptr<const RobinBasis> basis, double value);

    const RobinBasis& basis() const { return *basis_; }
    const std::shared_ptr<const RobinBasis>& basis_ptr() const { return basis_; }
    const Eigen::VectorXd& coeffs() const { return coeffs_; }
    int size() const { return static_cast<int>(coeffs_.size()); }

    double evaluate(double t, const OutletPoint& x) const;

    /// Spatial weights w_s(t) = sum over functions with space index s of
    /// c_j * time_hat_j(t); then q(t, x) = sum_s w_s(t) * spatial_hat_s(x).
    Eigen::VectorXd spatial_weights(double t) const;

    RobinCoefficient with_coeffs(Eigen::VectorXd coeffs) const { return {basis_, std::move(coeffs)}; }

private:
    std::shared_ptr<const RobinBasis> basis_;
    Eigen::VectorXd coeffs_;
};

/// Pointwise evaluation at a physical outlet point (InputError off the outlet).
double evaluate_q(const RobinCoefficient& q, const ChannelGeometry& geometry, double t, const Point& x);

/// Sup-norm distance on (0, T) x outlet. Exact knot maximum for tensor bases,
/// dense sampling otherwise.
double linf_distance(const RobinCoefficient& q1, const RobinCoefficient& q2);

/// Maximum of |q1 - q2| over `time_samples` uniform times (knots included)
/// and `space_samples` uniform arc positions on every segment (end points
/// of each segment included).
double sampled_linf_distance(const RobinCoefficient& q1, const RobinCoefficient& q2,
                             int time_samples, int space_samples);

/// Box [lower, upper]^M of admissible coefficients, lower > 0.
struct AdmissibleSet {
    double lower = 0.5;
    double upper = 5.0;

    AdmissibleSet() = default;
    AdmissibleSet(double lower_bound, double upper_bound);
    double midpoint() const { return 0.5 * (lower + upper); }
    bool contains(const RobinCoefficient& q) const;
};

RobinCoefficient project_onto_K(const RobinCoefficient& q, const AdmissibleSet& K);

/// `count` independent uniform draws from the box, reproducible per seed.
std::vector<RobinCoefficient> sample_K(const AdmissibleSet& K, std::shared_ptr<const RobinBasis> basis,
                                       int count, std::uint64_t seed);

}  // namespace stokes_robin
