#include "stokes_robin/mesh.hpp"

#include "stokes_robin/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace stokes_robin {

namespace {

std::array<int, 2> sorted_pair(int a, int b) {
    return a < b ? std::array<int, 2>{a, b} : std::array<int, 2>{b, a};
}

}  // namespace

Mesh::Mesh(ChannelGeometry geometry, std::vector<Point> vertices,
           std::vector<std::array<int, 3>> triangles, std::vector<BoundaryEdge> boundary)
    : geometry_(geometry),
      vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_(std::move(boundary)) {
    const int nv = static_cast<int>(vertices_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        for (int v : triangles_[t]) {
            if (v < 0 || v >= nv) throw InputError("triangle references missing vertex");
        }
        if (!(signed_area(t) > 0.0)) {
            throw InputError("triangle " + std::to_string(t) + " has non-positive signed area");
        }
    }

    std::map<std::array<int, 2>, int> edge_ids;
    std::vector<int> edge_use;
    triangle_edges_.resize(triangles_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        for (int k = 0; k < 3; ++k) {
            const auto key = sorted_pair(triangles_[t][k], triangles_[t][(k + 1) % 3]);
            auto [it, inserted] = edge_ids.try_emplace(key, static_cast<int>(edges_.size()));
            if (inserted) {
                edges_.push_back(key);
                edge_use.push_back(0);
            }
            ++edge_use[it->second];
            triangle_edges_[t][k] = it->second;
        }
    }
    for (int use : edge_use) {
        if (use > 2) throw InputError("non-conforming mesh: edge shared by more than two triangles");
    }

    // Owning triangle of every edge, used to orient boundary normals.
    std::vector<int> owner(edges_.size(), -1);
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        for (int e : triangle_edges_[t]) owner[e] = static_cast<int>(t);
    }

    std::vector<int> tagged(edges_.size(), 0);
    boundary_edge_ids_.reserve(boundary_.size());
    for (auto& be : boundary_) {
        auto it = edge_ids.find(sorted_pair(be.vertices[0], be.vertices[1]));
        if (it == edge_ids.end() || edge_use[it->second] != 1) {
            throw InputError("boundary record does not match a boundary edge of the mesh");
        }
        if (++tagged[it->second] > 1) throw InputError("boundary edge tagged twice");
        if (be.tag.kind == BoundaryKind::Outlet &&
            (be.tag.segment < 1 || be.tag.segment > geometry_.outlet_segments)) {
            throw InputError("outlet segment index out of range");
        }
        boundary_edge_ids_.push_back(it->second);

        const Point& a = vertices_[be.vertices[0]];
        const Point& b = vertices_[be.vertices[1]];
        if (arc_position(geometry_, be.tag.kind, a) > arc_position(geometry_, be.tag.kind, b)) {
            std::swap(be.vertices[0], be.vertices[1]);
        }
        const Point tangent = b - a;
        be.length = tangent.norm();
        Point normal(tangent.y(), -tangent.x());
        normal /= be.length;
        const Point outward = 0.5 * (a + b) - centroid(owner[it->second]);
        if (normal.dot(outward) < 0.0) normal = -normal;
        be.normal = normal;
    }
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        if (edge_use[e] == 1 && tagged[e] == 0) throw InputError("untagged boundary edge");
    }
}

double Mesh::signed_area(std::size_t t) const {
    const Point& a = vertices_[triangles_[t][0]];
    const Point& b = vertices_[triangles_[t][1]];
    const Point& c = vertices_[triangles_[t][2]];
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

Point Mesh::centroid(std::size_t t) const {
    return (vertices_[triangles_[t][0]] + vertices_[triangles_[t][1]] + vertices_[triangles_[t][2]]) / 3.0;
}

Mesh build_channel_mesh(double length, double height, int nx, int ny, int outlet_segments) {
    if (!(length > 0.0) || !(height > 0.0)) throw InputError("channel dimensions must be positive");
    if (nx < 1 || ny < 1) throw InputError("nx and ny must be at least 1");
    if (outlet_segments < 1 || outlet_segments > ny) {
        throw InputError("outlet segment count must lie in [1, ny]");
    }
    if (ny % outlet_segments != 0) {
        throw InputError("ny must be divisible by the outlet segment count");
    }

    std::vector<Point> vertices;
    vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            vertices.emplace_back(length * i / nx, height * j / ny);
        }
    }
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };

    std::vector<std::array<int, 3>> triangles;
    triangles.reserve(static_cast<std::size_t>(2 * nx * ny));
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }

    std::vector<BoundaryEdge> boundary;
    for (int i = 0; i < nx; ++i) {
        boundary.push_back({{id(i, 0), id(i + 1, 0)}, BoundaryTag::lateral()});
        boundary.push_back({{id(i, ny), id(i + 1, ny)}, BoundaryTag::lateral()});
    }
    const int per_segment = ny / outlet_segments;
    for (int j = 0; j < ny; ++j) {
        boundary.push_back({{id(0, j), id(0, j + 1)}, BoundaryTag::inlet()});
        boundary.push_back({{id(nx, j), id(nx, j + 1)}, BoundaryTag::outlet(j / per_segment + 1)});
    }

    return Mesh({length, height, outlet_segments}, std::move(vertices), std::move(triangles),
                std::move(boundary));
}

Mesh refine(const Mesh& mesh) {
    std::vector<Point> vertices = mesh.vertices();
    const int nv = static_cast<int>(vertices.size());
    for (const auto& e : mesh.edges()) {
        vertices.push_back(0.5 * (mesh.vertices()[e[0]] + mesh.vertices()[e[1]]));
    }

    std::vector<std::array<int, 3>> triangles;
    triangles.reserve(4 * mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& v = mesh.triangles()[t];
        const auto& e = mesh.triangle_edges()[t];
        const int m01 = nv + e[0];
        const int m12 = nv + e[1];
        const int m20 = nv + e[2];
        triangles.push_back({v[0], m01, m20});
        triangles.push_back({m01, v[1], m12});
        triangles.push_back({m20, m12, v[2]});
        triangles.push_back({m01, m12, m20});
    }

    std::vector<BoundaryEdge> boundary;
    boundary.reserve(2 * mesh.boundary_edges().size());
    for (std::size_t b = 0; b < mesh.boundary_edges().size(); ++b) {
        const auto& be = mesh.boundary_edges()[b];
        const int mid = nv + mesh.boundary_edge_index(b);
        boundary.push_back({{be.vertices[0], mid}, be.tag});
        boundary.push_back({{mid, be.vertices[1]}, be.tag});
    }

    return Mesh(mesh.geometry(), std::move(vertices), std::move(triangles), std::move(boundary));
}

double arc_position(const ChannelGeometry& geometry, BoundaryKind kind, const Point& p) {
    if (kind != BoundaryKind::Lateral) return p.y();
    // Bottom wall first (left to right), then the top wall (right to left).
    const double L = geometry.length;
    const double H = geometry.height;
    if (p.y() < 0.5 * H) return p.x();
    return L + H + (L - p.x());
}

std::vector<BoundaryEdge> boundary_edges_by_tag(const Mesh& mesh, BoundaryTag tag) {
    if (tag.kind == BoundaryKind::Outlet &&
        (tag.segment < 1 || tag.segment > mesh.geometry().outlet_segments)) {
        throw InputError("outlet segment index " + std::to_string(tag.segment) + " out of range 1.." +
                         std::to_string(mesh.geometry().outlet_segments));
    }
    std::vector<BoundaryEdge> out;
    for (const auto& be : mesh.boundary_edges()) {
        if (be.tag == tag) out.push_back(be);
    }
    const auto& g = mesh.geometry();
    auto key = [&](const BoundaryEdge& be) {
        return arc_position(g, be.tag.kind, 0.5 * (mesh.vertices()[be.vertices[0]] + mesh.vertices()[be.vertices[1]]));
    };
    std::sort(out.begin(), out.end(),
              [&](const BoundaryEdge& a, const BoundaryEdge& b) { return key(a) < key(b); });
    return out;
}

}  // namespace stokes_robin
