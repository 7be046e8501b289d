#pragma once

// Polynomial bases on cells and faces and the associated L2 projectors.
//
// Cells use monomials scaled about the centroid by the cell diameter.
// Faces use Legendre polynomials of the arclength coordinate mapped to
// [-1, 1], so face Gram matrices are diagonal with entries |F| / (2a + 1).

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "mesh.hpp"
#include "quadrature.hpp"

namespace hhosplit {

using ScalarFunction = std::function<double(const Point&)>;

inline std::size_t cell_basis_size(int degree) { return std::size_t((degree + 1) * (degree + 2) / 2); }
inline std::size_t face_basis_size(int degree) { return std::size_t(degree + 1); }

/// Quadrature order used for bilinear forms and loads at face degree k.
inline int default_quadrature_order(int k) { return 2 * (k + 2); }
/// Quadrature order used for error norms at face degree k.
inline int error_quadrature_order(int k) { return 2 * (k + 2) + 2; }

class CellBasis
{
public:
    CellBasis(const Mesh& mesh, std::size_t t, int degree)
        : CellBasis(mesh.cell(t).centroid, mesh.cell(t).diameter, degree)
    {}

    CellBasis(Point center, double scale, int degree)
        : center_(std::move(center)), scale_(scale), degree_(degree)
    {
        for (int d = 0; d <= degree; ++d)
            for (int a = d; a >= 0; --a)
                powers_.emplace_back(a, d - a);
    }

    int degree() const { return degree_; }
    std::size_t size() const { return powers_.size(); }
    const std::vector<std::pair<int, int>>& powers() const { return powers_; }
    const Point& center() const { return center_; }
    double scale() const { return scale_; }

    Eigen::VectorXd eval(const Point& p) const
    {
        const double xi = (p.x() - center_.x()) / scale_, eta = (p.y() - center_.y()) / scale_;
        Eigen::VectorXd v(size());
        for (std::size_t i = 0; i < size(); ++i)
            v(i) = ipow(xi, powers_[i].first) * ipow(eta, powers_[i].second);
        return v;
    }

    /// size() x 2 matrix of gradients.
    Eigen::MatrixX2d grad(const Point& p) const
    {
        const double xi = (p.x() - center_.x()) / scale_, eta = (p.y() - center_.y()) / scale_;
        Eigen::MatrixX2d g(size(), 2);
        for (std::size_t i = 0; i < size(); ++i) {
            const auto [a, b] = powers_[i];
            g(i, 0) = a == 0 ? 0.0 : a * ipow(xi, a - 1) * ipow(eta, b) / scale_;
            g(i, 1) = b == 0 ? 0.0 : b * ipow(xi, a) * ipow(eta, b - 1) / scale_;
        }
        return g;
    }

private:
    static double ipow(double x, int n)
    {
        double r = 1.0;
        for (int i = 0; i < n; ++i)
            r *= x;
        return r;
    }

    Point center_;
    double scale_;
    int degree_;
    std::vector<std::pair<int, int>> powers_;
};

class FaceBasis
{
public:
    FaceBasis(const Mesh& mesh, std::size_t f, int degree)
        : center_(mesh.face(f).midpoint), tangent_(mesh.face(f).tangent), length_(mesh.face(f).measure),
          degree_(degree)
    {}

    int degree() const { return degree_; }
    std::size_t size() const { return std::size_t(degree_ + 1); }

    /// Reference coordinate in [-1, 1] along the face.
    double coordinate(const Point& p) const { return 2.0 * (p - center_).dot(tangent_) / length_; }

    Eigen::VectorXd eval(const Point& p) const
    {
        const double s = coordinate(p);
        Eigen::VectorXd v(size());
        double pm1 = 0.0, pc = 1.0;
        for (int a = 0; a <= degree_; ++a) {
            v(a) = pc;
            const double pn = ((2.0 * a + 1.0) * s * pc - a * pm1) / (a + 1.0);
            pm1 = pc;
            pc = pn;
        }
        return v;
    }

private:
    Point center_, tangent_;
    double length_;
    int degree_;
};

/// Gram matrix (phi_i, phi_j) of any basis with an eval() member.
template <typename Basis>
Eigen::MatrixXd mass_matrix(const Basis& basis, const Quadrature& quad)
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(basis.size(), basis.size());
    for (const auto& qp : quad) {
        const Eigen::VectorXd v = basis.eval(qp.point);
        m.noalias() += qp.weight * v * v.transpose();
    }
    return m;
}

/// (f, phi_i) for every basis function.
template <typename Basis>
Eigen::VectorXd load_vector(const Basis& basis, const Quadrature& quad, const ScalarFunction& f)
{
    Eigen::VectorXd b = Eigen::VectorXd::Zero(basis.size());
    for (const auto& qp : quad)
        b += qp.weight * f(qp.point) * basis.eval(qp.point);
    return b;
}

template <typename Basis>
Eigen::VectorXd solve_gram(const Basis& basis, const Quadrature& quad, const Eigen::VectorXd& rhs)
{
    Eigen::LLT<Eigen::MatrixXd> llt(mass_matrix(basis, quad));
    if (llt.info() != Eigen::Success)
        throw conditioning_error("singular Gram matrix");
    return llt.solve(rhs);
}

/// Coefficients of the L2(T) projection of f onto P^m(T).
inline Eigen::VectorXd project_cell(const ScalarFunction& f, const Mesh& mesh, std::size_t t, int m, int order = -1)
{
    const CellBasis basis(mesh, t, m);
    const auto quad = cell_quadrature(mesh, t, order < 0 ? 2 * m + 4 : order);
    return solve_gram(basis, quad, load_vector(basis, quad, f));
}

/// Coefficients of the L2(F) projection of g onto P^k(F).
inline Eigen::VectorXd project_face(const ScalarFunction& g, const Mesh& mesh, std::size_t f, int k, int order = -1)
{
    const FaceBasis basis(mesh, f, k);
    const auto quad = face_quadrature(mesh, f, order < 0 ? 2 * k + 4 : order);
    return solve_gram(basis, quad, load_vector(basis, quad, g));
}

} // namespace hhosplit
