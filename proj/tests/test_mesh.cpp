#include "stokes_robin/error.hpp"
#include "stokes_robin/mesh.hpp"

#include <doctest.h>

#include <cmath>

using namespace stokes_robin;

namespace {

double total_area(const Mesh& mesh) {
    double a = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) a += mesh.signed_area(t);
    return a;
}

double boundary_length(const Mesh& mesh) {
    double l = 0.0;
    for (const auto& e : mesh.boundary_edges()) l += e.length;
    return l;
}

void check_geometry_invariants(const Mesh& mesh) {
    const auto& g = mesh.geometry();
    CHECK(std::abs(total_area(mesh) - g.length * g.height) <= 1e-12 * g.length * g.height);
    CHECK(std::abs(boundary_length(mesh) - 2.0 * (g.length + g.height)) <= 1e-12 * 2.0 * (g.length + g.height));
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) CHECK(mesh.signed_area(t) > 0.0);
    for (const auto& e : mesh.boundary_edges()) {
        const Point tangent = mesh.vertices()[e.vertices[1]] - mesh.vertices()[e.vertices[0]];
        CHECK(std::abs(e.normal.dot(tangent)) <= 1e-12);
        CHECK(std::abs(e.normal.norm() - 1.0) <= 1e-12);
        CHECK(std::abs(tangent.norm() - e.length) <= 1e-12);
    }
}

}  // namespace

TEST_CASE("structured channel counts") {
    const Mesh m = build_channel_mesh(2.0, 1.0, 4, 2, 1);
    CHECK(m.num_vertices() == 15);
    CHECK(m.num_triangles() == 16);
    const auto outlet = boundary_edges_by_tag(m, BoundaryTag::outlet(1));
    REQUIRE(outlet.size() == 2);
    for (const auto& e : outlet) {
        CHECK(m.vertices()[e.vertices[0]].x() == doctest::Approx(2.0));
        CHECK(m.vertices()[e.vertices[1]].x() == doctest::Approx(2.0));
        CHECK(e.normal.x() == doctest::Approx(1.0));
    }
    check_geometry_invariants(m);

    const Mesh unit = build_channel_mesh(1.0, 1.0, 1, 1, 1);
    CHECK(unit.num_vertices() == 4);
    CHECK(unit.num_triangles() == 2);
}

TEST_CASE("outlet segments split the right wall evenly") {
    const Mesh m = build_channel_mesh(2.0, 1.0, 4, 4, 2);
    const auto s1 = boundary_edges_by_tag(m, BoundaryTag::outlet(1));
    const auto s2 = boundary_edges_by_tag(m, BoundaryTag::outlet(2));
    REQUIRE(s1.size() == 2);
    REQUIRE(s2.size() == 2);
    // Segment 1 is the lower half, segment 2 the upper half.
    for (const auto& e : s1) CHECK(m.vertices()[e.vertices[1]].y() <= 0.5 + 1e-14);
    for (const auto& e : s2) CHECK(m.vertices()[e.vertices[0]].y() >= 0.5 - 1e-14);
}

TEST_CASE("boundary queries by tag") {
    const Mesh m = build_channel_mesh(2.0, 1.0, 4, 2, 1);
    const auto inlet = boundary_edges_by_tag(m, BoundaryTag::inlet());
    REQUIRE(inlet.size() == 2);
    CHECK(arc_position(m.geometry(), BoundaryKind::Inlet, m.vertices()[inlet[0].vertices[0]]) <
          arc_position(m.geometry(), BoundaryKind::Inlet, m.vertices()[inlet[1].vertices[0]]));
    for (const auto& e : inlet) CHECK(e.normal.x() == doctest::Approx(-1.0));
    CHECK(boundary_edges_by_tag(m, BoundaryTag::lateral()).size() == 8);
    CHECK_THROWS_AS(boundary_edges_by_tag(m, BoundaryTag::outlet(2)), InputError);
    CHECK_THROWS_AS(boundary_edges_by_tag(m, BoundaryTag::outlet(0)), InputError);
}

TEST_CASE("red refinement") {
    const Mesh unit = build_channel_mesh(1.0, 1.0, 1, 1, 1);
    CHECK(refine(unit).num_triangles() == 8);

    const Mesh coarse = build_channel_mesh(2.0, 1.0, 4, 2, 2);
    const Mesh once = refine(coarse);
    const Mesh twice = refine(once);
    CHECK(twice.num_triangles() == 256);
    CHECK(once.boundary_edges().size() == 2 * coarse.boundary_edges().size());
    CHECK(twice.boundary_edges().size() == 2 * once.boundary_edges().size());
    CHECK(boundary_edges_by_tag(twice, BoundaryTag::outlet(1)).size() == 4);
    CHECK(boundary_edges_by_tag(twice, BoundaryTag::outlet(2)).size() == 4);
    check_geometry_invariants(once);
    check_geometry_invariants(twice);
    // Every coarse vertex survives refinement.
    for (const auto& v : coarse.vertices()) {
        bool found = false;
        for (const auto& w : twice.vertices()) found = found || (v - w).norm() <= 1e-14;
        CHECK(found);
    }
}

TEST_CASE("unique edges and triangle edge map") {
    const Mesh m = build_channel_mesh(2.0, 1.0, 3, 2, 1);
    // Euler: V - E + F = 1 for a simply connected triangulation.
    CHECK(static_cast<long>(m.num_vertices()) - static_cast<long>(m.edges().size()) +
              static_cast<long>(m.num_triangles()) ==
          1);
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        for (int k = 0; k < 3; ++k) {
            const auto& e = m.edges()[m.triangle_edges()[t][k]];
            const int a = m.triangles()[t][k];
            const int b = m.triangles()[t][(k + 1) % 3];
            CHECK(((e[0] == a && e[1] == b) || (e[0] == b && e[1] == a)));
        }
    }
}

TEST_CASE("invalid meshes are rejected") {
    CHECK_THROWS_AS(build_channel_mesh(0.0, 1.0, 2, 2, 1), InputError);
    CHECK_THROWS_AS(build_channel_mesh(2.0, 1.0, 0, 2, 1), InputError);
    CHECK_THROWS_AS(build_channel_mesh(2.0, 1.0, 4, 3, 2), InputError);
    CHECK_THROWS_AS(build_channel_mesh(2.0, 1.0, 4, 2, 3), InputError);

    const Mesh good = build_channel_mesh(1.0, 1.0, 1, 1, 1);
    auto triangles = good.triangles();
    std::swap(triangles[0][1], triangles[0][2]);  // clockwise
    CHECK_THROWS_AS(Mesh(good.geometry(), good.vertices(), triangles, good.boundary_edges()), InputError);

    auto boundary = good.boundary_edges();
    boundary.pop_back();
    CHECK_THROWS_AS(Mesh(good.geometry(), good.vertices(), good.triangles(), boundary), InputError);
}
