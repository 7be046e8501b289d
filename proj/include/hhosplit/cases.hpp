#pragma once

// Manufactured solutions on the unit square.

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "basis.hpp"
#include "errors.hpp"
#include "mesh.hpp"

namespace hhosplit {

using VectorFunction = std::function<Point(const Point&)>;

/// Outward unit normal of the unit square at a boundary point (nearest side).
inline Point unit_square_normal(const Point& p)
{
    const double d[4] = {p.x(), 1.0 - p.x(), p.y(), 1.0 - p.y()};
    const Point n[4] = {{-1.0, 0.0}, {1.0, 0.0}, {0.0, -1.0}, {0.0, 1.0}};
    int best = 0;
    for (int i = 1; i < 4; ++i)
        if (d[i] < d[best])
            best = i;
    return n[best];
}

/// A closed-form solution. For biharmonic cases `u` is psi, `omega` = -Lap psi
/// and f = Lap^2 psi; for Poisson cases f = -Lap u and `omega` is empty.
struct ManufacturedCase
{
    std::string name;
    bool biharmonic = false;
    ScalarFunction u;
    ScalarFunction omega;
    ScalarFunction f;
    VectorFunction grad;

    ScalarFunction gD() const { return u; }

    /// Normal derivative on the unit-square boundary.
    ScalarFunction gN() const
    {
        return [g = grad](const Point& p) { return g(p).dot(unit_square_normal(p)); };
    }
};

namespace cases {

inline constexpr double pi = std::numbers::pi;

/// u = sin(4 pi x) sin(4 pi y).
inline ManufacturedCase sine()
{
    ManufacturedCase c;
    c.name = "sine";
    c.u = [](const Point& p) { return std::sin(4 * pi * p.x()) * std::sin(4 * pi * p.y()); };
    c.f = [](const Point& p) { return 32 * pi * pi * std::sin(4 * pi * p.x()) * std::sin(4 * pi * p.y()); };
    c.grad = [](const Point& p) {
        return Point(4 * pi * std::cos(4 * pi * p.x()) * std::sin(4 * pi * p.y()),
                     4 * pi * std::sin(4 * pi * p.x()) * std::cos(4 * pi * p.y()));
    };
    return c;
}

/// psi = x sin(pi y) exp(-x y).
inline ManufacturedCase exponential()
{
    ManufacturedCase c;
    c.name = "exp";
    c.biharmonic = true;
    c.u = [](const Point& p) { return p.x() * std::sin(pi * p.y()) * std::exp(-p.x() * p.y()); };
    c.omega = [](const Point& p) {
        const double x = p.x(), y = p.y(), s = std::sin(pi * y), co = std::cos(pi * y);
        return -(x * x * x * s - 2 * pi * x * x * co + x * y * y * s - pi * pi * x * s - 2 * y * s) * std::exp(-x * y);
    };
    c.f = [](const Point& p) {
        const double x = p.x(), y = p.y(), s = std::sin(pi * y), co = std::cos(pi * y);
        const double x2 = x * x, x3 = x2 * x, y2 = y * y, pi2 = pi * pi;
        return (x3 * x2 * s - 4 * pi * x2 * x2 * co + 2 * x3 * y2 * s - 6 * pi2 * x3 * s - 4 * pi * x2 * y2 * co -
                12 * x2 * y * s + 4 * pi2 * pi * x2 * co + x * y2 * y2 * s - 2 * pi2 * x * y2 * s +
                16 * pi * x * y * co + 12 * x * s + pi2 * pi2 * x * s - 4 * y2 * y * s + 4 * pi2 * y * s -
                8 * pi * co) *
               std::exp(-x * y);
    };
    c.grad = [](const Point& p) {
        const double x = p.x(), y = p.y(), s = std::sin(pi * y), co = std::cos(pi * y), e = std::exp(-x * y);
        return Point(-(x * y - 1) * e * s, -x * (x * s - pi * co) * e);
    };
    return c;
}

/// psi = x^4 (x-1)^2 y^4 (y-1)^2, clamped on the unit square.
inline ManufacturedCase polynomial()
{
    ManufacturedCase c;
    c.name = "poly";
    c.biharmonic = true;
    c.u = [](const Point& p) {
        const double x = p.x(), y = p.y();
        return std::pow(x, 4) * std::pow(x - 1, 2) * std::pow(y, 4) * std::pow(y - 1, 2);
    };
    c.omega = [](const Point& p) {
        const double x = p.x(), y = p.y();
        const double x2 = x * x, x3 = x2 * x, x4 = x2 * x2, y2 = y * y, y3 = y2 * y, y4 = y2 * y2;
        return -2 * x2 * y2 *
               (15 * x4 * y2 - 20 * x4 * y + 6 * x4 - 30 * x3 * y2 + 40 * x3 * y - 12 * x3 + 15 * x2 * y4 -
                30 * x2 * y3 + 30 * x2 * y2 - 20 * x2 * y + 6 * x2 - 20 * x * y4 + 40 * x * y3 - 20 * x * y2 +
                6 * y4 - 12 * y3 + 6 * y2);
    };
    c.f = [](const Point& p) {
        const double x = p.x(), y = p.y();
        const double x2 = x * x, x3 = x2 * x, x4 = x2 * x2, x5 = x4 * x, x6 = x3 * x3;
        const double y2 = y * y, y3 = y2 * y, y4 = y2 * y2, y5 = y4 * y, y6 = y3 * y3;
        return 8 * (45 * x6 * y2 - 30 * x6 * y + 3 * x6 - 90 * x5 * y2 + 60 * x5 * y - 6 * x5 + 225 * x4 * y4 -
                    300 * x4 * y3 + 135 * x4 * y2 - 30 * x4 * y + 3 * x4 - 300 * x3 * y4 + 400 * x3 * y3 -
                    120 * x3 * y2 + 45 * x2 * y6 - 90 * x2 * y5 + 135 * x2 * y4 - 120 * x2 * y3 + 36 * x2 * y2 -
                    30 * x * y6 + 60 * x * y5 - 30 * x * y4 + 3 * y6 - 6 * y5 + 3 * y4);
    };
    c.grad = [](const Point& p) {
        const double x = p.x(), y = p.y();
        return Point(2 * std::pow(x, 3) * std::pow(y, 4) * (x - 1) * (3 * x - 2) * std::pow(y - 1, 2),
                     2 * std::pow(x, 4) * std::pow(y, 3) * std::pow(x - 1, 2) * (y - 1) * (3 * y - 2));
    };
    return c;
}

inline ManufacturedCase by_name(const std::string& name)
{
    if (name == "sine")
        return sine();
    if (name == "exp")
        return exponential();
    if (name == "poly")
        return polynomial();
    throw config_error("unknown case '" + name + "' (expected sine, exp or poly)");
}

inline std::vector<std::string> names() { return {"sine", "exp", "poly"}; }

} // namespace cases

} // namespace hhosplit
