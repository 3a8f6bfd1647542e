#pragma once

#include "stokes_robin/mesh.hpp"
#include "stokes_robin/parameter_space.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <vector>

namespace stokes_robin {

using SparseMatrix = Eigen::SparseMatrix<double>;
/// Time-dependent vector field (t, x) -> R^2. An empty function means zero.
using VectorField = std::function<Point(double, const Point&)>;
using StaticVectorField = std::function<Point(const Point&)>;

/// Taylor-Hood P2/P1 spaces on a mesh.
///
/// P2 nodes are the mesh vertices followed by the edge midpoints. The full
/// velocity vector has 2 * num_nodes() entries, component-major
/// (index = c * num_nodes() + node). Free velocity unknowns exclude every
/// node on the lateral walls, where u = 0 is imposed. Pressure is P1 with one
/// unknown per vertex.
class FunctionSpaces {
public:
    explicit FunctionSpaces(std::shared_ptr<const Mesh> mesh);

    const Mesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }

    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    int num_pressure() const { return static_cast<int>(mesh_->num_vertices()); }
    int full_size() const { return 2 * num_nodes(); }
    int free_size() const { return static_cast<int>(free_to_full_.size()); }

    const Point& node(int i) const { return nodes_[i]; }
    /// Element nodes: three vertices then midpoints of edges (0,1), (1,2), (2,0).
    const std::array<int, 6>& element_nodes(std::size_t t) const { return element_nodes_[t]; }
    /// Nodes of boundary edge b in arc order: start vertex, midpoint, end vertex.
    std::array<int, 3> boundary_edge_nodes(std::size_t b) const;

    bool on_lateral(int node) const { return lateral_[node]; }
    int free_index(int full) const { return full_to_free_[full]; }
    const std::vector<int>& free_to_full() const { return free_to_full_; }

    Eigen::VectorXd interpolate(const StaticVectorField& field) const;  ///< full vector
    Eigen::VectorXd restrict_vector(const Eigen::VectorXd& full) const;
    Eigen::VectorXd extend_vector(const Eigen::VectorXd& free) const;
    /// Velocity-by-velocity (or pressure-by-velocity when `rows_are_pressure`)
    /// restriction of a full-space matrix to free unknowns.
    SparseMatrix restrict_matrix(const SparseMatrix& full, bool rows_are_pressure = false) const;

    /// Velocity and its gradient (row c = grad u_c) of a full vector at a
    /// barycentric point of triangle t.
    void evaluate(const Eigen::VectorXd& full, std::size_t t, const std::array<double, 3>& lambda,
                  Point& value, Eigen::Matrix2d& gradient) const;

private:
    std::shared_ptr<const Mesh> mesh_;
    std::vector<Point> nodes_;
    std::vector<std::array<int, 6>> element_nodes_;
    std::vector<bool> lateral_;
    std::vector<int> full_to_free_;
    std::vector<int> free_to_full_;
};

/// Reference P2 shape functions at a barycentric point (values and gradients
/// given the barycentric gradients of the element).
struct P2Shape {
    std::array<double, 6> value;
    std::array<Point, 6> gradient;
};
P2Shape p2_shape(const std::array<double, 3>& lambda, const std::array<Point, 3>& lambda_gradient);
/// Barycentric gradients and area of triangle t; throws SolverError when degenerate.
std::array<Point, 3> barycentric_gradients(const Mesh& mesh, std::size_t t, double& area);

/// Static Galerkin operators of the Stokes system.
///
/// mass / stiffness: int u.v and int grad u : grad v (full gradient, no
/// symmetrization). divergence: B_{k,i} = -int psi_k div phi_i. Matrices with
/// the `_full` suffix act on the full velocity space; the others on free
/// unknowns.
struct AssembledOperators {
    SparseMatrix mass_full;
    SparseMatrix stiffness_full;
    SparseMatrix divergence_full;
    SparseMatrix mass;
    SparseMatrix stiffness;
    SparseMatrix divergence;
    SparseMatrix pressure_mass;
    SparseMatrix outlet_mass;  ///< unweighted int_{outlet} u.v, free unknowns
};

AssembledOperators assemble_static(const FunctionSpaces& spaces);

/// int_{edges of `kind`} w(x) u.v with `weight(edge, x)` sampled at the
/// three Gauss points of each edge. Full velocity space.
SparseMatrix assemble_weighted_boundary_mass(
    const FunctionSpaces& spaces, BoundaryKind kind,
    const std::function<double(const BoundaryEdge&, const Point&)>& weight);

/// int_{outlet} q(t) u.v on free unknowns, q sampled pointwise.
SparseMatrix assemble_robin_matrix(const FunctionSpaces& spaces, const RobinCoefficient& q, double t);

/// int_{inlet} g(t).v + int_{outlet} kappa(t).v on the full velocity space.
Eigen::VectorXd assemble_loads(const FunctionSpaces& spaces, const VectorField& g, const VectorField& kappa,
                               double t);
/// int_Omega f(t).v on the full velocity space.
Eigen::VectorXd assemble_body_force(const FunctionSpaces& spaces, const VectorField& f, double t);

/// Measurement window: the inlet edges whose midpoints fall in an arc
/// interval [begin, end] of the inlet wall.
class TraceSpace {
public:
    TraceSpace(const FunctionSpaces& spaces, double arc_begin, double arc_end);

    /// Trace unknowns: 2 * (number of window nodes), component-major.
    int size() const { return 2 * static_cast<int>(nodes_.size()); }
    const std::vector<int>& nodes() const { return nodes_; }
    const std::vector<Point>& node_points() const { return points_; }
    double length() const { return length_; }
    double arc_begin() const { return arc_begin_; }
    double arc_end() const { return arc_end_; }

    /// Boundary mass: x^T mass() x = int_window |u|^2 for trace vector x.
    const Eigen::MatrixXd& mass() const { return mass_; }
    Eigen::VectorXd restrict_free(const Eigen::VectorXd& free) const;
    Eigen::VectorXd restrict_full(const Eigen::VectorXd& full) const;

private:
    std::vector<int> nodes_;
    std::vector<Point> points_;
    std::vector<int> free_index_;  // per trace unknown, -1 when eliminated
    std::vector<int> full_index_;
    Eigen::MatrixXd mass_;
    double length_ = 0.0;
    double arc_begin_ = 0.0;
    double arc_end_ = 0.0;
};

/// Outlet Robin operators split by spatial basis function:
/// block(s)_{ab} = int_{outlet} psi_s phi_a . phi_b over outlet free unknowns,
/// so that the q-weighted Robin matrix at time t is combine(q.spatial_weights(t)).
class OutletRobinBlocks {
public:
    OutletRobinBlocks(const FunctionSpaces& spaces, const RobinBasis& basis);

    int size() const { return static_cast<int>(dofs_.size()); }
    const std::vector<int>& dofs() const { return dofs_; }  ///< free indices
    const Eigen::MatrixXd& block(int s) const { return blocks_[s]; }
    int num_blocks() const { return static_cast<int>(blocks_.size()); }

    Eigen::MatrixXd combine(const Eigen::VectorXd& spatial_weights) const;
    Eigen::VectorXd gather(const Eigen::VectorXd& free) const;
    /// Adds `local` (outlet unknowns) into the free vector `free`.
    void scatter_add(const Eigen::VectorXd& local, Eigen::VectorXd& free) const;

private:
    std::vector<int> dofs_;
    std::vector<Eigen::MatrixXd> blocks_;
};

/// Discrete inf-sup constant: sqrt of the smallest eigenvalue of
/// B (M + A)^{-1} B^T p = lambda Mp p on free velocity unknowns.
double discrete_inf_sup(const AssembledOperators& ops);

}  // namespace stokes_robin
