#pragma once

#include <Eigen/Dense>

#include "basis.hpp"
#include "mesh.hpp"

namespace hhosplit {

/// Coefficients of a hybrid pair: P^l on every cell and P^k on every face,
/// stored cell-major and face-major respectively.
struct HybridVector
{
    int k = 0;
    int l = 0;
    Eigen::VectorXd cells;
    Eigen::VectorXd faces;

    HybridVector() = default;
    HybridVector(const Mesh& mesh, int k_, int l_)
        : k(k_), l(l_), cells(Eigen::VectorXd::Zero(Eigen::Index(mesh.num_cells() * cell_basis_size(l_)))),
          faces(Eigen::VectorXd::Zero(Eigen::Index(mesh.num_faces() * face_basis_size(k_))))
    {}

    Eigen::Index cell_size() const { return Eigen::Index(cell_basis_size(l)); }
    Eigen::Index face_size() const { return Eigen::Index(face_basis_size(k)); }

    auto cell_block(std::size_t t) { return cells.segment(Eigen::Index(t) * cell_size(), cell_size()); }
    auto cell_block(std::size_t t) const { return cells.segment(Eigen::Index(t) * cell_size(), cell_size()); }
    auto face_block(std::size_t f) { return faces.segment(Eigen::Index(f) * face_size(), face_size()); }
    auto face_block(std::size_t f) const { return faces.segment(Eigen::Index(f) * face_size(), face_size()); }
};

/// Coefficients over P^k of the boundary faces, in Mesh::boundary_faces() order.
struct TraceVector
{
    int k = 0;
    Eigen::VectorXd values;

    TraceVector() = default;
    TraceVector(const Mesh& mesh, int k_)
        : k(k_), values(Eigen::VectorXd::Zero(Eigen::Index(mesh.num_boundary_faces() * face_basis_size(k_))))
    {}
    TraceVector(int k_, Eigen::VectorXd v) : k(k_), values(std::move(v)) {}

    Eigen::Index block_size() const { return Eigen::Index(face_basis_size(k)); }
    std::size_t num_blocks() const { return std::size_t(values.size() / block_size()); }
    Eigen::Index size() const { return values.size(); }

    /// Block of the i-th boundary face (position in boundary_faces()).
    auto block(std::size_t i) { return values.segment(Eigen::Index(i) * block_size(), block_size()); }
    auto block(std::size_t i) const { return values.segment(Eigen::Index(i) * block_size(), block_size()); }
};

/// One polynomial of degree `degree` per cell, in the scaled-monomial basis.
struct PiecewisePolynomial
{
    int degree = 0;
    std::vector<Eigen::VectorXd> coefficients;

    double eval(const Mesh& mesh, std::size_t t, const Point& p) const
    {
        return CellBasis(mesh, t, degree).eval(p).dot(coefficients[t]);
    }
};

} // namespace hhosplit
