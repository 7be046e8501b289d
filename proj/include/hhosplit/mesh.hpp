#pragma once

// Two-dimensional polytopal meshes: storage, generators, plain-text I/O and
// vertex-layer neighbourhoods of boundary faces.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace hhosplit {

using Point = Eigen::Vector2d;

struct Cell
{
    std::vector<std::size_t> vertices; ///< counter-clockwise loop
    std::vector<std::size_t> faces;    ///< faces[i] joins vertices[i] and vertices[i+1]
    Point centroid = Point::Zero();
    double measure = 0.0;
    double diameter = 0.0;
    bool on_boundary = false;
};

inline constexpr std::size_t no_owner = std::numeric_limits<std::size_t>::max();

struct Face
{
    std::array<std::size_t, 2> vertices{};
    /// owners[0] < owners[1]; owners[1] == no_owner on the boundary.
    std::array<std::size_t, 2> owners{no_owner, no_owner};
    Point midpoint = Point::Zero();
    Point tangent = Point::Zero();
    Point normal = Point::Zero(); ///< unit, outward from owners[0]
    double measure = 0.0;
    bool on_boundary = false;

    double diameter() const { return measure; }
};

class Mesh
{
public:
    Mesh() = default;

    /// Builds topology and geometry from counter-clockwise vertex loops.
    Mesh(std::vector<Point> vertices, std::vector<std::vector<std::size_t>> loops)
        : vertices_(std::move(vertices))
    {
        build(std::move(loops));
    }

    const std::vector<Point>& vertices() const { return vertices_; }
    const std::vector<Cell>& cells() const { return cells_; }
    const std::vector<Face>& faces() const { return faces_; }

    const Cell& cell(std::size_t t) const { return cells_[t]; }
    const Face& face(std::size_t f) const { return faces_[f]; }

    std::size_t num_cells() const { return cells_.size(); }
    std::size_t num_faces() const { return faces_.size(); }

    /// Boundary faces in increasing face id.
    const std::vector<std::size_t>& boundary_faces() const { return boundary_faces_; }
    std::size_t num_boundary_faces() const { return boundary_faces_.size(); }

    /// Position of face f in boundary_faces(), or no_owner for interior faces.
    std::size_t boundary_index(std::size_t f) const { return boundary_index_[f]; }

    /// Cells sharing vertex v.
    const std::vector<std::size_t>& vertex_cells(std::size_t v) const { return vertex_cells_[v]; }

    double h() const { return h_; }

    /// +1 when the stored normal of face f points out of cell t, -1 otherwise.
    double normal_sign(std::size_t t, std::size_t f) const
    {
        return faces_[f].owners[0] == t ? 1.0 : -1.0;
    }

    Point outward_normal(std::size_t t, std::size_t f) const
    {
        return normal_sign(t, f) * faces_[f].normal;
    }

private:
    void build(std::vector<std::vector<std::size_t>> loops)
    {
        std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> edge_cells;
        for (std::size_t t = 0; t < loops.size(); ++t) {
            const auto& loop = loops[t];
            if (loop.size() < 3)
                throw geometry_error("cell " + std::to_string(t) + " has fewer than 3 vertices");
            for (std::size_t i = 0; i < loop.size(); ++i) {
                auto a = loop[i], b = loop[(i + 1) % loop.size()];
                if (a >= vertices_.size() || b >= vertices_.size())
                    throw topology_error("cell " + std::to_string(t) + " references unknown vertex");
                if (a == b)
                    throw geometry_error("cell " + std::to_string(t) + " has a repeated vertex");
                edge_cells[{std::min(a, b), std::max(a, b)}].push_back(t);
            }
        }

        faces_.reserve(edge_cells.size());
        std::map<std::pair<std::size_t, std::size_t>, std::size_t> face_id;
        for (const auto& [key, owners] : edge_cells) {
            if (owners.size() > 2)
                throw topology_error("non-manifold face (" + std::to_string(key.first) + ", " +
                                     std::to_string(key.second) + ") shared by " +
                                     std::to_string(owners.size()) + " cells");
            if (owners.size() == 2 && owners[0] == owners[1])
                throw topology_error("cell " + std::to_string(owners[0]) + " uses a face twice");
            Face fc;
            fc.vertices = {key.first, key.second};
            fc.owners[0] = owners[0];
            if (owners.size() == 2) {
                fc.owners[0] = std::min(owners[0], owners[1]);
                fc.owners[1] = std::max(owners[0], owners[1]);
            }
            fc.on_boundary = owners.size() == 1;
            face_id[key] = faces_.size();
            faces_.push_back(fc);
        }

        cells_.resize(loops.size());
        for (std::size_t t = 0; t < loops.size(); ++t) {
            Cell& c = cells_[t];
            c.vertices = std::move(loops[t]);
            const std::size_t m = c.vertices.size();
            double area2 = 0.0;
            Point cx = Point::Zero();
            for (std::size_t i = 0; i < m; ++i) {
                const Point& p = vertices_[c.vertices[i]];
                const Point& q = vertices_[c.vertices[(i + 1) % m]];
                const double cross = p.x() * q.y() - q.x() * p.y();
                area2 += cross;
                cx += cross * (p + q);
            }
            if (!(area2 > 0.0))
                throw geometry_error("cell " + std::to_string(t) +
                                     " has non-positive measure (vertices must be counter-clockwise)");
            c.measure = 0.5 * area2;
            c.centroid = cx / (3.0 * area2);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = i + 1; j < m; ++j)
                    c.diameter = std::max(c.diameter, (vertices_[c.vertices[i]] - vertices_[c.vertices[j]]).norm());
            h_ = std::max(h_, c.diameter);

            c.faces.resize(m);
            for (std::size_t i = 0; i < m; ++i) {
                auto a = c.vertices[i], b = c.vertices[(i + 1) % m];
                const std::size_t f = face_id.at({std::min(a, b), std::max(a, b)});
                c.faces[i] = f;
                Face& fc = faces_[f];
                if (fc.owners[0] == t) {
                    // Edge a->b runs counter-clockwise around the owner, so the
                    // outward normal is the tangent rotated clockwise.
                    const Point d = vertices_[b] - vertices_[a];
                    fc.measure = d.norm();
                    fc.tangent = d / fc.measure;
                    fc.normal = Point(fc.tangent.y(), -fc.tangent.x());
                    fc.midpoint = 0.5 * (vertices_[a] + vertices_[b]);
                }
                if (fc.on_boundary)
                    c.on_boundary = true;
            }
        }

        boundary_index_.assign(faces_.size(), no_owner);
        for (std::size_t f = 0; f < faces_.size(); ++f)
            if (faces_[f].on_boundary) {
                boundary_index_[f] = boundary_faces_.size();
                boundary_faces_.push_back(f);
            }

        vertex_cells_.assign(vertices_.size(), {});
        for (std::size_t t = 0; t < cells_.size(); ++t)
            for (auto v : cells_[t].vertices)
                vertex_cells_[v].push_back(t);
    }

    std::vector<Point> vertices_;
    std::vector<Cell> cells_;
    std::vector<Face> faces_;
    std::vector<std::size_t> boundary_faces_;
    std::vector<std::size_t> boundary_index_;
    std::vector<std::vector<std::size_t>> vertex_cells_;
    double h_ = 0.0;
};

namespace detail {

inline std::vector<Point> unit_square_lattice(std::size_t n)
{
    std::vector<Point> pts;
    pts.reserve((n + 1) * (n + 1));
    for (std::size_t j = 0; j <= n; ++j)
        for (std::size_t i = 0; i <= n; ++i)
            pts.emplace_back(double(i) / double(n), double(j) / double(n));
    return pts;
}

} // namespace detail

/// n x n squares on (0,1)^2, cells numbered row by row from the bottom.
inline Mesh generate_cartesian(std::size_t n)
{
    if (n == 0)
        throw config_error("generate_cartesian: n must be positive");
    std::vector<std::vector<std::size_t>> loops;
    loops.reserve(n * n);
    auto vid = [n](std::size_t i, std::size_t j) { return j * (n + 1) + i; };
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            loops.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
    return Mesh(detail::unit_square_lattice(n), std::move(loops));
}

/// Each Cartesian square split along its lower-left to upper-right diagonal.
inline Mesh generate_triangular(std::size_t n)
{
    if (n == 0)
        throw config_error("generate_triangular: n must be positive");
    std::vector<std::vector<std::size_t>> loops;
    loops.reserve(2 * n * n);
    auto vid = [n](std::size_t i, std::size_t j) { return j * (n + 1) + i; };
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            loops.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            loops.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    return Mesh(detail::unit_square_lattice(n), std::move(loops));
}

// Plain-text format:
//   NV NC
//   x y            (NV lines)
//   m v1 ... vm    (NC lines, 0-based, counter-clockwise)

inline Mesh parse_mesh(std::istream& is)
{
    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&](const char* what) {
        if (!std::getline(is, line))
            throw parse_error(std::string("unexpected end of file, expected ") + what, lineno + 1);
        ++lineno;
        return std::istringstream(line);
    };
    auto expect_end = [&](std::istringstream& ss) {
        std::string rest;
        if (ss >> rest)
            throw parse_error("trailing token '" + rest + "'", lineno);
    };

    long long nv = 0, nc = 0;
    {
        auto ss = next_line("header 'NV NC'");
        if (!(ss >> nv >> nc) || nv < 0 || nc < 0)
            throw parse_error("malformed header, expected 'NV NC'", lineno);
        expect_end(ss);
    }

    std::vector<Point> pts(static_cast<std::size_t>(nv));
    for (auto& p : pts) {
        auto ss = next_line("vertex 'x y'");
        if (!(ss >> p.x() >> p.y()))
            throw parse_error("malformed vertex, expected 'x y'", lineno);
        expect_end(ss);
    }

    std::vector<std::vector<std::size_t>> loops(static_cast<std::size_t>(nc));
    for (auto& loop : loops) {
        auto ss = next_line("cell 'm v1 ... vm'");
        long long m = 0;
        if (!(ss >> m))
            throw parse_error("malformed cell, expected vertex count", lineno);
        if (m < 3)
            throw parse_error("cell with fewer than 3 vertices", lineno);
        loop.resize(static_cast<std::size_t>(m));
        for (auto& v : loop) {
            long long id = 0;
            if (!(ss >> id))
                throw parse_error("cell lists fewer vertices than declared", lineno);
            if (id < 0 || id >= nv)
                throw parse_error("vertex id " + std::to_string(id) + " out of range", lineno);
            v = static_cast<std::size_t>(id);
        }
        expect_end(ss);
    }
    return Mesh(std::move(pts), std::move(loops));
}

inline Mesh read_mesh(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw error("cannot open mesh file '" + path + "'");
    return parse_mesh(is);
}

inline void write_mesh(std::ostream& os, const Mesh& mesh)
{
    os << mesh.vertices().size() << ' ' << mesh.num_cells() << '\n';
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& p : mesh.vertices())
        os << p.x() << ' ' << p.y() << '\n';
    for (const auto& c : mesh.cells()) {
        os << c.vertices.size();
        for (auto v : c.vertices)
            os << ' ' << v;
        os << '\n';
    }
}

inline void write_mesh(const std::string& path, const Mesh& mesh)
{
    std::ofstream os(path);
    if (!os)
        throw error("cannot write mesh file '" + path + "'");
    write_mesh(os, mesh);
}

/// Cell neighbourhood of a boundary face, grown by vertex-sharing layers.
///
/// All index lists are sorted by global id; the position of an entry in its
/// list is its patch-local index.
struct Patch
{
    std::size_t face = 0;            ///< global id of the seed boundary face
    std::size_t seed_cell = 0;       ///< the cell owning the seed face
    std::vector<std::size_t> cells;
    std::vector<std::size_t> interior_faces; ///< both owners inside the patch
    std::vector<std::size_t> boundary_faces; ///< at most one owner inside the patch
    std::vector<std::size_t> domain_faces;   ///< boundary_faces lying on the domain boundary

    static std::size_t local_index(const std::vector<std::size_t>& list, std::size_t global)
    {
        auto it = std::lower_bound(list.begin(), list.end(), global);
        return (it != list.end() && *it == global) ? std::size_t(it - list.begin()) : no_owner;
    }

    std::size_t local_cell(std::size_t t) const { return local_index(cells, t); }
    bool contains(std::size_t t) const { return local_cell(t) != no_owner; }
};

/// Patch around the boundary face carrying boundary DoF j, with
/// `dofs_per_face` DoFs per boundary face (1 addresses faces directly).
inline Patch neighborhood(const Mesh& mesh, std::size_t j, unsigned alpha, std::size_t dofs_per_face = 1)
{
    if (dofs_per_face == 0 || j >= mesh.num_boundary_faces() * dofs_per_face)
        throw index_error("boundary DoF " + std::to_string(j) + " out of range");

    Patch p;
    p.face = mesh.boundary_faces()[j / dofs_per_face];
    p.seed_cell = mesh.face(p.face).owners[0];

    std::vector<char> in(mesh.num_cells(), 0);
    std::vector<std::size_t> layer{p.seed_cell};
    in[p.seed_cell] = 1;
    p.cells.push_back(p.seed_cell);
    for (unsigned a = 0; a < alpha && !layer.empty(); ++a) {
        std::vector<std::size_t> next;
        for (auto t : layer)
            for (auto v : mesh.cell(t).vertices)
                for (auto s : mesh.vertex_cells(v))
                    if (!in[s]) {
                        in[s] = 1;
                        next.push_back(s);
                        p.cells.push_back(s);
                    }
        layer = std::move(next);
    }
    std::sort(p.cells.begin(), p.cells.end());

    for (auto t : p.cells)
        for (auto f : mesh.cell(t).faces) {
            const Face& fc = mesh.face(f);
            const bool both = !fc.on_boundary && in[fc.owners[0]] && in[fc.owners[1]];
            (both ? p.interior_faces : p.boundary_faces).push_back(f);
        }
    for (auto* list : {&p.interior_faces, &p.boundary_faces}) {
        std::sort(list->begin(), list->end());
        list->erase(std::unique(list->begin(), list->end()), list->end());
    }
    for (auto f : p.boundary_faces)
        if (mesh.face(f).on_boundary)
            p.domain_faces.push_back(f);
    return p;
}

} // namespace hhosplit
