#pragma once

#include <array>

namespace stokes_robin::quadrature {

/// Barycentric point with weight (weights sum to 1 over the reference triangle).
struct TrianglePoint {
    std::array<double, 3> lambda;
    double weight;
};

/// Six-point symmetric rule, exact for polynomials of degree 4.
inline constexpr std::array<TrianglePoint, 6> triangle6 = {{
    {{0.10810301816807023, 0.44594849091596489, 0.44594849091596489}, 0.22338158967801147},
    {{0.44594849091596489, 0.10810301816807023, 0.44594849091596489}, 0.22338158967801147},
    {{0.44594849091596489, 0.44594849091596489, 0.10810301816807023}, 0.22338158967801147},
    {{0.81684757298045851, 0.091576213509770743, 0.091576213509770743}, 0.10995174365532187},
    {{0.091576213509770743, 0.81684757298045851, 0.091576213509770743}, 0.10995174365532187},
    {{0.091576213509770743, 0.091576213509770743, 0.81684757298045851}, 0.10995174365532187},
}};

/// Point on [0, 1] with weight (weights sum to 1).
struct LinePoint {
    double s;
    double weight;
};

/// Three-point Gauss rule on [0, 1], exact for degree 5.
inline constexpr std::array<LinePoint, 3> gauss3 = {{
    {0.5 - 0.3872983346207417, 5.0 / 18.0},
    {0.5, 8.0 / 18.0},
    {0.5 + 0.3872983346207417, 5.0 / 18.0},
}};

}  // namespace stokes_robin::quadrature
