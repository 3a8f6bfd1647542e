#pragma once

#include <Eigen/Core>

#include <array>
#include <vector>

namespace stokes_robin {

using Point = Eigen::Vector2d;

enum class BoundaryKind { Lateral, Inlet, Outlet };

/// Boundary part of the channel: no-slip walls (top/bottom), the accessible
/// inlet (left wall) and the outlet segments 1..N (right wall, bottom to top).
struct BoundaryTag {
    BoundaryKind kind = BoundaryKind::Lateral;
    int segment = 0;  ///< 1..N for Outlet, 0 otherwise

    static BoundaryTag lateral() { return {BoundaryKind::Lateral, 0}; }
    static BoundaryTag inlet() { return {BoundaryKind::Inlet, 0}; }
    static BoundaryTag outlet(int i) { return {BoundaryKind::Outlet, i}; }

    bool operator==(const BoundaryTag&) const = default;
};

struct BoundaryEdge {
    std::array<int, 2> vertices{};  ///< ordered by increasing arc position
    BoundaryTag tag;
    Point normal = Point::Zero();   ///< outward unit normal
    double length = 0.0;
};

struct ChannelGeometry {
    double length = 2.0;
    double height = 1.0;
    int outlet_segments = 1;
};

/// Conforming triangulation of the channel [0, L] x [0, H].
///
/// Immutable after construction. The constructor checks orientation,
/// conformity and boundary tagging; violations throw InputError.
class Mesh {
public:
    Mesh(ChannelGeometry geometry, std::vector<Point> vertices,
         std::vector<std::array<int, 3>> triangles, std::vector<BoundaryEdge> boundary);

    const ChannelGeometry& geometry() const { return geometry_; }
    const std::vector<Point>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
    const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_; }

    /// Unique edges (sorted vertex pairs). Local edge k of triangle t is
    /// (v_k, v_{k+1 mod 3}) and has global index `triangle_edges()[t][k]`.
    const std::vector<std::array<int, 2>>& edges() const { return edges_; }
    const std::vector<std::array<int, 3>>& triangle_edges() const { return triangle_edges_; }
    /// Global edge index of boundary edge `b`.
    int boundary_edge_index(std::size_t b) const { return boundary_edge_ids_[b]; }

    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_triangles() const { return triangles_.size(); }

    double signed_area(std::size_t t) const;
    Point centroid(std::size_t t) const;

private:
    ChannelGeometry geometry_;
    std::vector<Point> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<BoundaryEdge> boundary_;
    std::vector<std::array<int, 2>> edges_;
    std::vector<std::array<int, 3>> triangle_edges_;
    std::vector<int> boundary_edge_ids_;
};

/// Structured triangulation with (nx+1)(ny+1) vertices and 2 nx ny triangles.
/// The right wall is split into `outlet_segments` runs of ny/N edges each.
Mesh build_channel_mesh(double length, double height, int nx, int ny, int outlet_segments);

/// Uniform red refinement: every triangle split into four at edge midpoints.
Mesh refine(const Mesh& mesh);

/// Position of a boundary point along its wall: y on the inlet and outlet,
/// counterclockwise perimeter coordinate on the lateral walls.
double arc_position(const ChannelGeometry& geometry, BoundaryKind kind, const Point& p);

/// Edges carrying `tag`, in ascending arc position. Outlet(i) with i outside
/// 1..N throws InputError.
std::vector<BoundaryEdge> boundary_edges_by_tag(const Mesh& mesh, BoundaryTag tag);

}  // namespace stokes_robin
