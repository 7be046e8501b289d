#pragma once

// Gauss rules on segments, triangles and simple polygons.

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "errors.hpp"
#include "mesh.hpp"

namespace hhosplit {

struct QuadraturePoint
{
    Point point;
    double weight;
};

using Quadrature = std::vector<QuadraturePoint>;

namespace detail {

struct GaussRule1D
{
    std::vector<double> nodes;   // on [0, 1]
    std::vector<double> weights; // sum to 1
};

// Golub-Welsch on the Legendre Jacobi matrix, mapped to [0,1].
inline GaussRule1D compute_gauss_legendre(std::size_t npts)
{
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(npts, npts);
    for (std::size_t i = 1; i < npts; ++i) {
        const double b = double(i) / std::sqrt(4.0 * double(i) * double(i) - 1.0);
        J(i, i - 1) = J(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussRule1D r;
    for (std::size_t i = 0; i < npts; ++i) {
        const double v0 = es.eigenvectors()(0, i);
        r.nodes.push_back(0.5 * (es.eigenvalues()(i) + 1.0));
        r.weights.push_back(v0 * v0);
    }
    return r;
}

inline const GaussRule1D& gauss_legendre(std::size_t npts)
{
    static std::mutex m;
    static std::map<std::size_t, GaussRule1D> cache;
    std::lock_guard lock(m);
    auto it = cache.find(npts);
    if (it == cache.end())
        it = cache.emplace(npts, compute_gauss_legendre(npts)).first;
    return it->second;
}

inline double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

inline bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2)
{
    const double d1 = cross(q2 - q1, p1 - q1), d2 = cross(q2 - q1, p2 - q1);
    const double d3 = cross(p2 - p1, q1 - p1), d4 = cross(p2 - p1, q2 - p1);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

} // namespace detail

/// Gauss-Legendre rule on [a, b], exact for polynomials of degree <= order.
inline Quadrature segment_quadrature(const Point& a, const Point& b, int order)
{
    const std::size_t npts = std::size_t(std::max(order, 0)) / 2 + 1;
    const auto& r = detail::gauss_legendre(npts);
    const double len = (b - a).norm();
    Quadrature q;
    q.reserve(npts);
    for (std::size_t i = 0; i < npts; ++i)
        q.push_back({a + r.nodes[i] * (b - a), r.weights[i] * len});
    return q;
}

inline Quadrature face_quadrature(const Mesh& mesh, std::size_t f, int order)
{
    const Face& fc = mesh.face(f);
    return segment_quadrature(mesh.vertices()[fc.vertices[0]], mesh.vertices()[fc.vertices[1]], order);
}

/// Collapsed (Duffy) Gauss rule on a counter-clockwise triangle; exact for
/// bivariate polynomials of total degree <= order.
inline void append_triangle_quadrature(Quadrature& q, const Point& a, const Point& b, const Point& c, int order)
{
    const std::size_t npts = std::size_t(std::max(order, 0) + 1) / 2 + 1;
    const auto& r = detail::gauss_legendre(npts);
    const double area2 = detail::cross(b - a, c - a);
    for (std::size_t i = 0; i < npts; ++i) {
        const double u = r.nodes[i];
        for (std::size_t j = 0; j < npts; ++j) {
            const double v = r.nodes[j] * (1.0 - u);
            q.push_back({a + u * (b - a) + v * (c - a), r.weights[i] * r.weights[j] * (1.0 - u) * area2});
        }
    }
}

namespace detail {

// Ear clipping for simple polygons that are not star-shaped about their centroid.
inline std::vector<std::array<Point, 3>> ear_clip(std::vector<Point> poly)
{
    std::vector<std::array<Point, 3>> tris;
    auto inside = [](const Point& p, const Point& a, const Point& b, const Point& c) {
        return cross(b - a, p - a) >= 0 && cross(c - b, p - b) >= 0 && cross(a - c, p - c) >= 0;
    };
    while (poly.size() > 3) {
        bool clipped = false;
        const std::size_t m = poly.size();
        for (std::size_t i = 0; i < m && !clipped; ++i) {
            const Point& a = poly[(i + m - 1) % m];
            const Point& b = poly[i];
            const Point& c = poly[(i + 1) % m];
            if (cross(b - a, c - b) <= 0)
                continue;
            bool empty = true;
            for (std::size_t j = 0; j < m && empty; ++j) {
                if (j == i || j == (i + 1) % m || j == (i + m - 1) % m)
                    continue;
                if (inside(poly[j], a, b, c))
                    empty = false;
            }
            if (empty) {
                tris.push_back({a, b, c});
                poly.erase(poly.begin() + std::ptrdiff_t(i));
                clipped = true;
            }
        }
        if (!clipped)
            throw geometry_error("polygon triangulation failed");
    }
    tris.push_back({poly[0], poly[1], poly[2]});
    return tris;
}

} // namespace detail

/// Quadrature on a cell, exact for total degree <= order. The cell is fanned
/// from its centroid into triangles; polygons that are not star-shaped about
/// the centroid are ear-clipped instead.
inline Quadrature cell_quadrature(const Mesh& mesh, std::size_t t, int order)
{
    const Cell& c = mesh.cell(t);
    const std::size_t m = c.vertices.size();
    std::vector<Point> poly;
    poly.reserve(m);
    for (auto v : c.vertices)
        poly.push_back(mesh.vertices()[v]);

    Quadrature q;
    if (m == 3) {
        append_triangle_quadrature(q, poly[0], poly[1], poly[2], order);
        return q;
    }

    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 2; j < m; ++j) {
            if (i == 0 && j == m - 1)
                continue;
            if (detail::segments_intersect(poly[i], poly[(i + 1) % m], poly[j], poly[(j + 1) % m]))
                throw geometry_error("cell " + std::to_string(t) + " is not a simple polygon");
        }

    bool star = true;
    for (std::size_t i = 0; i < m && star; ++i)
        star = detail::cross(poly[i] - c.centroid, poly[(i + 1) % m] - c.centroid) > 0;

    if (star) {
        for (std::size_t i = 0; i < m; ++i)
            append_triangle_quadrature(q, c.centroid, poly[i], poly[(i + 1) % m], order);
    } else {
        for (const auto& tri : detail::ear_clip(poly))
            append_triangle_quadrature(q, tri[0], tri[1], tri[2], order);
    }
    return q;
}

} // namespace hhosplit
