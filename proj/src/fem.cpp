#include "stokes_robin/fem.hpp"

#include "stokes_robin/error.hpp"
#include "stokes_robin/quadrature.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <map>

namespace stokes_robin {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SparseMatrix from_triplets(int rows, int cols, const Triplets& triplets) {
    SparseMatrix m(rows, cols);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

// P2 shape functions on a boundary edge, s in [0, 1] from start to end vertex.
std::array<double, 3> edge_shape(double s) {
    return {(1.0 - s) * (1.0 - 2.0 * s), 4.0 * s * (1.0 - s), s * (2.0 * s - 1.0)};
}

}  // namespace

FunctionSpaces::FunctionSpaces(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh)) {
    if (!mesh_) throw InputError("function spaces need a mesh");
    const Mesh& m = *mesh_;
    const int nv = static_cast<int>(m.num_vertices());
    nodes_ = m.vertices();
    for (const auto& e : m.edges()) nodes_.push_back(0.5 * (m.vertices()[e[0]] + m.vertices()[e[1]]));

    element_nodes_.resize(m.num_triangles());
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        const auto& v = m.triangles()[t];
        const auto& e = m.triangle_edges()[t];
        element_nodes_[t] = {v[0], v[1], v[2], nv + e[0], nv + e[1], nv + e[2]};
    }

    lateral_.assign(nodes_.size(), false);
    for (std::size_t b = 0; b < m.boundary_edges().size(); ++b) {
        if (m.boundary_edges()[b].tag.kind != BoundaryKind::Lateral) continue;
        for (int node : boundary_edge_nodes(b)) lateral_[node] = true;
    }

    const int n = num_nodes();
    full_to_free_.assign(2 * n, -1);
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < n; ++i) {
            if (lateral_[i]) continue;
            full_to_free_[c * n + i] = static_cast<int>(free_to_full_.size());
            free_to_full_.push_back(c * n + i);
        }
    }
}

std::array<int, 3> FunctionSpaces::boundary_edge_nodes(std::size_t b) const {
    const auto& be = mesh_->boundary_edges()[b];
    return {be.vertices[0], static_cast<int>(mesh_->num_vertices()) + mesh_->boundary_edge_index(b),
            be.vertices[1]};
}

Eigen::VectorXd FunctionSpaces::interpolate(const StaticVectorField& field) const {
    const int n = num_nodes();
    Eigen::VectorXd full = Eigen::VectorXd::Zero(2 * n);
    if (!field) return full;
    for (int i = 0; i < n; ++i) {
        const Point v = field(nodes_[i]);
        full[i] = v.x();
        full[n + i] = v.y();
    }
    return full;
}

Eigen::VectorXd FunctionSpaces::restrict_vector(const Eigen::VectorXd& full) const {
    Eigen::VectorXd out(free_size());
    for (int k = 0; k < free_size(); ++k) out[k] = full[free_to_full_[k]];
    return out;
}

Eigen::VectorXd FunctionSpaces::extend_vector(const Eigen::VectorXd& free) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(full_size());
    for (int k = 0; k < free_size(); ++k) out[free_to_full_[k]] = free[k];
    return out;
}

SparseMatrix FunctionSpaces::restrict_matrix(const SparseMatrix& full, bool rows_are_pressure) const {
    Triplets triplets;
    triplets.reserve(full.nonZeros());
    for (int col = 0; col < full.outerSize(); ++col) {
        const int fc = full_to_free_[col];
        if (fc < 0) continue;
        for (SparseMatrix::InnerIterator it(full, col); it; ++it) {
            const int fr = rows_are_pressure ? static_cast<int>(it.row()) : full_to_free_[it.row()];
            if (fr >= 0) triplets.emplace_back(fr, fc, it.value());
        }
    }
    return from_triplets(rows_are_pressure ? static_cast<int>(full.rows()) : free_size(), free_size(), triplets);
}

void FunctionSpaces::evaluate(const Eigen::VectorXd& full, std::size_t t, const std::array<double, 3>& lambda,
                              Point& value, Eigen::Matrix2d& gradient) const {
    double area = 0.0;
    const auto grads = barycentric_gradients(*mesh_, t, area);
    const P2Shape shape = p2_shape(lambda, grads);
    const int n = num_nodes();
    value.setZero();
    gradient.setZero();
    for (int a = 0; a < 6; ++a) {
        const int node = element_nodes_[t][a];
        for (int c = 0; c < 2; ++c) {
            const double u = full[c * n + node];
            value[c] += u * shape.value[a];
            gradient.row(c) += u * shape.gradient[a].transpose();
        }
    }
}

P2Shape p2_shape(const std::array<double, 3>& l, const std::array<Point, 3>& g) {
    P2Shape s;
    for (int i = 0; i < 3; ++i) {
        s.value[i] = l[i] * (2.0 * l[i] - 1.0);
        s.gradient[i] = (4.0 * l[i] - 1.0) * g[i];
    }
    for (int k = 0; k < 3; ++k) {
        const int i = k;
        const int j = (k + 1) % 3;
        s.value[3 + k] = 4.0 * l[i] * l[j];
        s.gradient[3 + k] = 4.0 * (l[i] * g[j] + l[j] * g[i]);
    }
    return s;
}

std::array<Point, 3> barycentric_gradients(const Mesh& mesh, std::size_t t, double& area) {
    const auto& v = mesh.triangles()[t];
    const Point& p0 = mesh.vertices()[v[0]];
    const Point& p1 = mesh.vertices()[v[1]];
    const Point& p2 = mesh.vertices()[v[2]];
    area = mesh.signed_area(t);
    if (!(area > 0.0)) throw SolverError("singular element Jacobian in triangle " + std::to_string(t));
    const double inv = 1.0 / (2.0 * area);
    return {Point((p1.y() - p2.y()) * inv, (p2.x() - p1.x()) * inv),
            Point((p2.y() - p0.y()) * inv, (p0.x() - p2.x()) * inv),
            Point((p0.y() - p1.y()) * inv, (p1.x() - p0.x()) * inv)};
}

AssembledOperators assemble_static(const FunctionSpaces& spaces) {
    const Mesh& mesh = spaces.mesh();
    const int n = spaces.num_nodes();
    Triplets mass, stiff, div, pmass;
    mass.reserve(mesh.num_triangles() * 72);
    stiff.reserve(mesh.num_triangles() * 72);
    div.reserve(mesh.num_triangles() * 36);
    pmass.reserve(mesh.num_triangles() * 9);

    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        double area = 0.0;
        const auto grads = barycentric_gradients(mesh, t, area);
        const auto& nodes = spaces.element_nodes(t);
        const auto& verts = mesh.triangles()[t];

        Eigen::Matrix<double, 6, 6> m_loc = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 6, 6> a_loc = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 3, 6> bx = Eigen::Matrix<double, 3, 6>::Zero();
        Eigen::Matrix<double, 3, 6> by = Eigen::Matrix<double, 3, 6>::Zero();
        Eigen::Matrix3d p_loc = Eigen::Matrix3d::Zero();
        for (const auto& qp : quadrature::triangle6) {
            const P2Shape s = p2_shape(qp.lambda, grads);
            const double w = qp.weight * area;
            for (int a = 0; a < 6; ++a) {
                for (int b = 0; b < 6; ++b) {
                    m_loc(a, b) += w * s.value[a] * s.value[b];
                    a_loc(a, b) += w * s.gradient[a].dot(s.gradient[b]);
                }
            }
            for (int k = 0; k < 3; ++k) {
                for (int b = 0; b < 6; ++b) {
                    bx(k, b) -= w * qp.lambda[k] * s.gradient[b].x();
                    by(k, b) -= w * qp.lambda[k] * s.gradient[b].y();
                }
                for (int l = 0; l < 3; ++l) p_loc(k, l) += w * qp.lambda[k] * qp.lambda[l];
            }
        }
        for (int c = 0; c < 2; ++c) {
            for (int a = 0; a < 6; ++a) {
                for (int b = 0; b < 6; ++b) {
                    mass.emplace_back(c * n + nodes[a], c * n + nodes[b], m_loc(a, b));
                    stiff.emplace_back(c * n + nodes[a], c * n + nodes[b], a_loc(a, b));
                }
            }
        }
        for (int k = 0; k < 3; ++k) {
            for (int b = 0; b < 6; ++b) {
                div.emplace_back(verts[k], nodes[b], bx(k, b));
                div.emplace_back(verts[k], n + nodes[b], by(k, b));
            }
            for (int l = 0; l < 3; ++l) pmass.emplace_back(verts[k], verts[l], p_loc(k, l));
        }
    }

    AssembledOperators ops;
    ops.mass_full = from_triplets(2 * n, 2 * n, mass);
    ops.stiffness_full = from_triplets(2 * n, 2 * n, stiff);
    ops.divergence_full = from_triplets(spaces.num_pressure(), 2 * n, div);
    ops.pressure_mass = from_triplets(spaces.num_pressure(), spaces.num_pressure(), pmass);
    ops.mass = spaces.restrict_matrix(ops.mass_full);
    ops.stiffness = spaces.restrict_matrix(ops.stiffness_full);
    ops.divergence = spaces.restrict_matrix(ops.divergence_full, true);
    ops.outlet_mass = spaces.restrict_matrix(assemble_weighted_boundary_mass(
        spaces, BoundaryKind::Outlet, [](const BoundaryEdge&, const Point&) { return 1.0; }));
    return ops;
}

SparseMatrix assemble_weighted_boundary_mass(
    const FunctionSpaces& spaces, BoundaryKind kind,
    const std::function<double(const BoundaryEdge&, const Point&)>& weight) {
    const Mesh& mesh = spaces.mesh();
    const int n = spaces.num_nodes();
    Triplets triplets;
    for (std::size_t b = 0; b < mesh.boundary_edges().size(); ++b) {
        const auto& be = mesh.boundary_edges()[b];
        if (be.tag.kind != kind) continue;
        const auto nodes = spaces.boundary_edge_nodes(b);
        const Point& pa = mesh.vertices()[be.vertices[0]];
        const Point& pb = mesh.vertices()[be.vertices[1]];
        Eigen::Matrix3d local = Eigen::Matrix3d::Zero();
        for (const auto& qp : quadrature::gauss3) {
            const Point x = pa + qp.s * (pb - pa);
            const double w = qp.weight * be.length * weight(be, x);
            const auto phi = edge_shape(qp.s);
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) local(i, j) += w * phi[i] * phi[j];
            }
        }
        for (int c = 0; c < 2; ++c) {
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) triplets.emplace_back(c * n + nodes[i], c * n + nodes[j], local(i, j));
            }
        }
    }
    return from_triplets(2 * n, 2 * n, triplets);
}

SparseMatrix assemble_robin_matrix(const FunctionSpaces& spaces, const RobinCoefficient& q, double t) {
    const auto weight = [&](const BoundaryEdge& be, const Point& x) {
        return q.evaluate(t, OutletPoint{be.tag.segment, x.y()});
    };
    return spaces.restrict_matrix(assemble_weighted_boundary_mass(spaces, BoundaryKind::Outlet, weight));
}

Eigen::VectorXd assemble_loads(const FunctionSpaces& spaces, const VectorField& g, const VectorField& kappa,
                               double t) {
    const Mesh& mesh = spaces.mesh();
    const int n = spaces.num_nodes();
    Eigen::VectorXd load = Eigen::VectorXd::Zero(2 * n);
    for (std::size_t b = 0; b < mesh.boundary_edges().size(); ++b) {
        const auto& be = mesh.boundary_edges()[b];
        const VectorField* field = nullptr;
        if (be.tag.kind == BoundaryKind::Inlet && g) field = &g;
        if (be.tag.kind == BoundaryKind::Outlet && kappa) field = &kappa;
        if (!field) continue;
        const auto nodes = spaces.boundary_edge_nodes(b);
        const Point& pa = mesh.vertices()[be.vertices[0]];
        const Point& pb = mesh.vertices()[be.vertices[1]];
        for (const auto& qp : quadrature::gauss3) {
            const Point x = pa + qp.s * (pb - pa);
            const Point value = (*field)(t, x) * (qp.weight * be.length);
            const auto phi = edge_shape(qp.s);
            for (int i = 0; i < 3; ++i) {
                load[nodes[i]] += value.x() * phi[i];
                load[n + nodes[i]] += value.y() * phi[i];
            }
        }
    }
    return load;
}

Eigen::VectorXd assemble_body_force(const FunctionSpaces& spaces, const VectorField& f, double t) {
    const Mesh& mesh = spaces.mesh();
    const int n = spaces.num_nodes();
    Eigen::VectorXd load = Eigen::VectorXd::Zero(2 * n);
    if (!f) return load;
    for (std::size_t tri = 0; tri < mesh.num_triangles(); ++tri) {
        double area = 0.0;
        const auto grads = barycentric_gradients(mesh, tri, area);
        const auto& nodes = spaces.element_nodes(tri);
        const auto& v = mesh.triangles()[tri];
        for (const auto& qp : quadrature::triangle6) {
            const Point x = qp.lambda[0] * mesh.vertices()[v[0]] + qp.lambda[1] * mesh.vertices()[v[1]] +
                            qp.lambda[2] * mesh.vertices()[v[2]];
            const Point value = f(t, x) * (qp.weight * area);
            const P2Shape s = p2_shape(qp.lambda, grads);
            for (int a = 0; a < 6; ++a) {
                load[nodes[a]] += value.x() * s.value[a];
                load[n + nodes[a]] += value.y() * s.value[a];
            }
        }
    }
    return load;
}

TraceSpace::TraceSpace(const FunctionSpaces& spaces, double arc_begin, double arc_end) {
    const Mesh& mesh = spaces.mesh();
    const double tol = 1e-12 * mesh.geometry().height;
    std::vector<std::size_t> edges;
    for (std::size_t b = 0; b < mesh.boundary_edges().size(); ++b) {
        const auto& be = mesh.boundary_edges()[b];
        if (be.tag.kind != BoundaryKind::Inlet) continue;
        const double mid = 0.5 * (mesh.vertices()[be.vertices[0]].y() + mesh.vertices()[be.vertices[1]].y());
        if (mid >= arc_begin - tol && mid <= arc_end + tol) edges.push_back(b);
    }
    if (edges.empty()) throw InputError("measurement window contains no inlet edge");

    std::map<double, int> by_arc;  // sorted by y
    arc_begin_ = mesh.geometry().height;
    arc_end_ = 0.0;
    for (std::size_t b : edges) {
        const auto& be = mesh.boundary_edges()[b];
        arc_begin_ = std::min(arc_begin_, mesh.vertices()[be.vertices[0]].y());
        arc_end_ = std::max(arc_end_, mesh.vertices()[be.vertices[1]].y());
        length_ += be.length;
        for (int node : spaces.boundary_edge_nodes(b)) by_arc.emplace(spaces.node(node).y(), node);
    }
    for (const auto& [y, node] : by_arc) {
        nodes_.push_back(node);
        points_.push_back(spaces.node(node));
    }
    const int m = static_cast<int>(nodes_.size());
    const int n = spaces.num_nodes();
    std::map<int, int> local;
    for (int i = 0; i < m; ++i) local[nodes_[i]] = i;
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < m; ++i) {
            full_index_.push_back(c * n + nodes_[i]);
            free_index_.push_back(spaces.free_index(c * n + nodes_[i]));
        }
    }

    mass_ = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    for (std::size_t b : edges) {
        const auto& be = mesh.boundary_edges()[b];
        const auto nodes = spaces.boundary_edge_nodes(b);
        for (const auto& qp : quadrature::gauss3) {
            const auto phi = edge_shape(qp.s);
            const double w = qp.weight * be.length;
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    const int li = local[nodes[i]];
                    const int lj = local[nodes[j]];
                    const double v = w * phi[i] * phi[j];
                    mass_(li, lj) += v;
                    mass_(m + li, m + lj) += v;
                }
            }
        }
    }
}

Eigen::VectorXd TraceSpace::restrict_free(const Eigen::VectorXd& free) const {
    Eigen::VectorXd out(size());
    for (int k = 0; k < size(); ++k) out[k] = free_index_[k] < 0 ? 0.0 : free[free_index_[k]];
    return out;
}

Eigen::VectorXd TraceSpace::restrict_full(const Eigen::VectorXd& full) const {
    Eigen::VectorXd out(size());
    for (int k = 0; k < size(); ++k) out[k] = full[full_index_[k]];
    return out;
}

OutletRobinBlocks::OutletRobinBlocks(const FunctionSpaces& spaces, const RobinBasis& basis) {
    const Mesh& mesh = spaces.mesh();
    if (basis.num_segments() != mesh.geometry().outlet_segments) {
        throw InputError("Robin basis segment count does not match the mesh outlet");
    }
    const int n = spaces.num_nodes();
    std::map<double, int> by_arc;
    for (std::size_t b = 0; b < mesh.boundary_edges().size(); ++b) {
        if (mesh.boundary_edges()[b].tag.kind != BoundaryKind::Outlet) continue;
        for (int node : spaces.boundary_edge_nodes(b)) {
            if (!spaces.on_lateral(node)) by_arc.emplace(spaces.node(node).y(), node);
        }
    }
    std::map<int, int> local;  // full index -> local
    for (int c = 0; c < 2; ++c) {
        for (const auto& [y, node] : by_arc) {
            local[c * n + node] = static_cast<int>(dofs_.size());
            dofs_.push_back(spaces.free_index(c * n + node));
        }
    }

    const int m = size();
    blocks_.assign(basis.num_spatial(), Eigen::MatrixXd::Zero(m, m));
    for (std::size_t b = 0; b < mesh.boundary_edges().size(); ++b) {
        const auto& be = mesh.boundary_edges()[b];
        if (be.tag.kind != BoundaryKind::Outlet) continue;
        const auto nodes = spaces.boundary_edge_nodes(b);
        const Point& pa = mesh.vertices()[be.vertices[0]];
        const Point& pb = mesh.vertices()[be.vertices[1]];
        for (const auto& qp : quadrature::gauss3) {
            const Point x = pa + qp.s * (pb - pa);
            const auto phi = edge_shape(qp.s);
            for (int s = 0; s < basis.num_spatial(); ++s) {
                const double psi = basis.spatial_hat(s, {be.tag.segment, x.y()});
                if (psi == 0.0) continue;
                const double w = qp.weight * be.length * psi;
                for (int c = 0; c < 2; ++c) {
                    for (int i = 0; i < 3; ++i) {
                        auto ii = local.find(c * n + nodes[i]);
                        if (ii == local.end()) continue;
                        for (int j = 0; j < 3; ++j) {
                            auto jj = local.find(c * n + nodes[j]);
                            if (jj == local.end()) continue;
                            blocks_[s](ii->second, jj->second) += w * phi[i] * phi[j];
                        }
                    }
                }
            }
        }
    }
}

Eigen::MatrixXd OutletRobinBlocks::combine(const Eigen::VectorXd& spatial_weights) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(size(), size());
    for (int s = 0; s < num_blocks(); ++s) {
        if (spatial_weights[s] != 0.0) out += spatial_weights[s] * blocks_[s];
    }
    return out;
}

Eigen::VectorXd OutletRobinBlocks::gather(const Eigen::VectorXd& free) const {
    Eigen::VectorXd out(size());
    for (int k = 0; k < size(); ++k) out[k] = free[dofs_[k]];
    return out;
}

void OutletRobinBlocks::scatter_add(const Eigen::VectorXd& local, Eigen::VectorXd& free) const {
    for (int k = 0; k < size(); ++k) free[dofs_[k]] += local[k];
}

double discrete_inf_sup(const AssembledOperators& ops) {
    const SparseMatrix x = ops.mass + ops.stiffness;
    Eigen::SimplicialLDLT<SparseMatrix> chol(x);
    if (chol.info() != Eigen::Success) throw SolverError("velocity H1 matrix is not positive definite");
    const Eigen::MatrixXd bt = Eigen::MatrixXd(ops.divergence.transpose());
    const Eigen::MatrixXd y = chol.solve(bt);
    Eigen::MatrixXd schur = Eigen::MatrixXd(ops.divergence) * y;
    schur = 0.5 * (schur + schur.transpose()).eval();
    const Eigen::MatrixXd mp = Eigen::MatrixXd(ops.pressure_mass);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(schur, mp, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw SolverError("inf-sup eigenproblem failed");
    return std::sqrt(std::max(0.0, eig.eigenvalues().minCoeff()));
}

}  // namespace stokes_robin
