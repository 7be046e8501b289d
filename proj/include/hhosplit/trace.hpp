#pragma once

// Extension of boundary polynomials into the hybrid space and the discrete
// normal derivative of an HHO solution.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "hho.hpp"
#include "spaces.hpp"

namespace hhosplit {

/// Face vector over all faces: boundary faces copy v, interior faces are zero.
inline Eigen::VectorXd lift_faces(const Mesh& mesh, const TraceVector& v)
{
    if (v.num_blocks() != mesh.num_boundary_faces())
        throw index_error("trace vector does not match the mesh boundary");
    const Eigen::Index fd = v.block_size();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(mesh.num_faces()) * fd);
    const auto& bf = mesh.boundary_faces();
    for (std::size_t i = 0; i < bf.size(); ++i)
        out.segment(Eigen::Index(bf[i]) * fd, fd) = v.block(i);
    return out;
}

/// Boundary blocks of a face vector over all faces.
inline TraceVector restrict_to_boundary(const Mesh& mesh, int k, const Eigen::VectorXd& faces)
{
    TraceVector v(mesh, k);
    const Eigen::Index fd = v.block_size();
    const auto& bf = mesh.boundary_faces();
    for (std::size_t i = 0; i < bf.size(); ++i)
        v.block(i) = faces.segment(Eigen::Index(bf[i]) * fd, fd);
    return v;
}

/// Hybrid extension: faces from lift_faces, cells from the local recovery.
inline HybridVector lift_hybrid(const TraceVector& v, const CondensedSystem& sys)
{
    const Mesh& mesh = sys.mesh();
    HybridVector h(mesh, sys.k(), sys.l());
    h.faces = lift_faces(mesh, v);
    for (std::size_t t = 0; t < mesh.num_cells(); ++t) {
        const auto& op = sys.local(t);
        const Eigen::VectorXd x = sys.gather(h, t);
        h.cell_block(t) = op.recovery * x.tail(op.layout.skeleton());
    }
    return h;
}

/// Discrete normal derivative for arbitrary local loads (see
/// CondensedSystem::source_loads and friends).
inline TraceVector normal_derivative(const HybridVector& u, const std::vector<Eigen::VectorXd>& loads,
                                     const CondensedSystem& sys)
{
    return TraceVector(sys.k(), sys.moments_to_coefficients(sys.flux_moments(u, loads)));
}

/// Discrete normal derivative of u, assumed to solve -Lap u = f.
inline TraceVector normal_derivative(const HybridVector& u, const ScalarFunction& f, const CondensedSystem& sys)
{
    return normal_derivative(u, sys.source_loads(f), sys);
}

/// Relative L2 error over the boundary of a trace against g. When g vanishes
/// the absolute error is returned and `zero_exact` is set.
inline double trace_error(const Mesh& mesh, const TraceVector& v, const ScalarFunction& g, int order,
                          bool* zero_exact = nullptr)
{
    double num = 0.0, den = 0.0;
    const auto& bf = mesh.boundary_faces();
    for (std::size_t i = 0; i < bf.size(); ++i) {
        const FaceBasis b(mesh, bf[i], v.k);
        for (const auto& qp : face_quadrature(mesh, bf[i], order)) {
            const double ex = g(qp.point);
            const double d = ex - b.eval(qp.point).dot(v.block(i));
            num += qp.weight * d * d;
            den += qp.weight * ex * ex;
        }
    }
    if (zero_exact)
        *zero_exact = den == 0.0;
    return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

} // namespace hhosplit
