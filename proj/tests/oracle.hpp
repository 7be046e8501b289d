#pragma once

// Test-only brute-force machinery: dense uncondensed assembly over all hybrid
// DoFs (cells first, then faces), independent quadrature for the
// boundary-stabilized Gram matrix, and dense solves.

#include <algorithm>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hhosplit/hho.hpp"
#include "hhosplit/quadrature.hpp"

namespace oracle {

using namespace hhosplit;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Full
{
    const CondensedSystem* sys = nullptr;
    Index cell_total = 0; ///< number of cell DoFs
    Index n = 0;          ///< all DoFs
    MatrixXd a;           ///< a_h
    MatrixXd g;           ///< <<., .>>

    Index face_index(std::size_t f) const { return cell_total + Index(f) * sys->face_dofs(); }
};

inline std::vector<Index> local_indices(const Full& full, std::size_t t)
{
    const CondensedSystem& sys = *full.sys;
    std::vector<Index> idx;
    for (Index i = 0; i < sys.cell_dofs(); ++i)
        idx.push_back(Index(t) * sys.cell_dofs() + i);
    for (auto f : sys.mesh().cell(t).faces)
        for (Index a = 0; a < sys.face_dofs(); ++a)
            idx.push_back(full.face_index(f) + a);
    return idx;
}

// Gram matrix of <<., .>> on one cell, built from its definition with fresh
// quadrature.
inline MatrixXd stab_gram(const Mesh& mesh, std::size_t t, int k, int l)
{
    const CellBasis cb(mesh, t, l);
    const Index nc = Index(cb.size()), fd = k + 1;
    const auto& faces = mesh.cell(t).faces;
    const Index n = nc + Index(faces.size()) * fd;
    MatrixXd g = MatrixXd::Zero(n, n);
    for (const auto& qp : cell_quadrature(mesh, t, 2 * l + 2)) {
        const VectorXd v = cb.eval(qp.point);
        g.topLeftCorner(nc, nc) += qp.weight * v * v.transpose();
    }
    if (!mesh.cell(t).on_boundary)
        return g;
    for (std::size_t i = 0; i < faces.size(); ++i) {
        const FaceBasis fb(mesh, faces[i], k);
        const auto quad = face_quadrature(mesh, faces[i], 2 * std::max(k, l) + 2);
        MatrixXd mf = MatrixXd::Zero(fd, fd), cross = MatrixXd::Zero(fd, nc);
        for (const auto& qp : quad) {
            const VectorXd pf = fb.eval(qp.point);
            mf += qp.weight * pf * pf.transpose();
            cross += qp.weight * pf * cb.eval(qp.point).transpose();
        }
        // jump = pi_F(v_T) - v_F in face coefficients
        MatrixXd d = MatrixXd::Zero(fd, n);
        d.leftCols(nc) = mf.llt().solve(cross);
        d.block(0, nc + Index(i) * fd, fd, fd) = -MatrixXd::Identity(fd, fd);
        g += mesh.face(faces[i]).diameter() * d.transpose() * mf * d;
    }
    return g;
}

inline Full assemble(const CondensedSystem& sys)
{
    const Mesh& mesh = sys.mesh();
    Full full;
    full.sys = &sys;
    full.cell_total = Index(mesh.num_cells()) * sys.cell_dofs();
    full.n = full.cell_total + Index(mesh.num_faces()) * sys.face_dofs();
    full.a = MatrixXd::Zero(full.n, full.n);
    full.g = MatrixXd::Zero(full.n, full.n);
    for (std::size_t t = 0; t < mesh.num_cells(); ++t) {
        const auto idx = local_indices(full, t);
        const MatrixXd& at = sys.local(t).a;
        const MatrixXd gt = stab_gram(mesh, t, sys.k(), sys.l());
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < idx.size(); ++j) {
                full.a(idx[i], idx[j]) += at(Index(i), Index(j));
                full.g(idx[i], idx[j]) += gt(Index(i), Index(j));
            }
    }
    return full;
}

inline VectorXd flatten(const HybridVector& v)
{
    VectorXd x(v.cells.size() + v.faces.size());
    x << v.cells, v.faces;
    return x;
}

inline HybridVector unflatten(const Full& full, const VectorXd& x)
{
    HybridVector v(full.sys->mesh(), full.sys->k(), full.sys->l());
    v.cells = x.head(full.cell_total);
    v.faces = x.tail(full.n - full.cell_total);
    return v;
}

/// Global vector of local loads.
inline VectorXd scatter_loads(const Full& full, const std::vector<VectorXd>& loads)
{
    VectorXd r = VectorXd::Zero(full.n);
    for (std::size_t t = 0; t < loads.size(); ++t) {
        const auto idx = local_indices(full, t);
        for (std::size_t i = 0; i < idx.size(); ++i)
            r(idx[i]) += loads[t](Index(i));
    }
    return r;
}

/// DoFs that are not on boundary faces.
inline std::vector<Index> free_indices(const Full& full)
{
    std::vector<Index> idx;
    for (Index i = 0; i < full.cell_total; ++i)
        idx.push_back(i);
    const Mesh& mesh = full.sys->mesh();
    for (std::size_t f = 0; f < mesh.num_faces(); ++f)
        if (!mesh.face(f).on_boundary)
            for (Index a = 0; a < full.sys->face_dofs(); ++a)
                idx.push_back(full.face_index(f) + a);
    return idx;
}

/// Full vector with face values from a trace on the boundary and zero
/// elsewhere.
inline VectorXd boundary_extension(const Full& full, const TraceVector& trace)
{
    VectorXd x = VectorXd::Zero(full.n);
    const auto& bf = full.sys->mesh().boundary_faces();
    for (std::size_t i = 0; i < bf.size(); ++i)
        x.segment(full.face_index(bf[i]), full.sys->face_dofs()) = trace.block(i);
    return x;
}

/// Uncondensed Dirichlet solve: a(u, v) = rhs(v) for all v vanishing on the
/// boundary faces, u equal to `trace` there.
inline VectorXd dirichlet_solve(const Full& full, const VectorXd& rhs, const TraceVector& trace)
{
    const auto fr = free_indices(full);
    VectorXd u = boundary_extension(full, trace);
    const VectorXd r = rhs - full.a * u;
    const Index m = Index(fr.size());
    MatrixXd aff(m, m);
    VectorXd rf(m);
    for (Index i = 0; i < m; ++i) {
        rf(i) = r(fr[std::size_t(i)]);
        for (Index j = 0; j < m; ++j)
            aff(i, j) = full.a(fr[std::size_t(i)], fr[std::size_t(j)]);
    }
    const VectorXd x = aff.ldlt().solve(rf);
    for (Index i = 0; i < m; ++i)
        u(fr[std::size_t(i)]) = x(i);
    return u;
}

/// Cell recovery by elimination on the full matrix: given face values in x,
/// returns x with cells set so that a(x, (w_T, 0)) = 0 for all w_T.
inline VectorXd recover_cells(const Full& full, VectorXd x)
{
    const Index nc = full.cell_total;
    x.head(nc).setZero();
    const VectorXd rhs = -(full.a.topRows(nc) * x);
    x.head(nc) = full.a.topLeftCorner(nc, nc).ldlt().solve(rhs);
    return x;
}

/// Hybrid lifting of a trace: faces copied on the boundary, zero inside,
/// cells recovered.
inline VectorXd lift(const Full& full, const TraceVector& trace)
{
    return recover_cells(full, boundary_extension(full, trace));
}

inline VectorXd random_vector(Index n, std::mt19937& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    VectorXd x(n);
    for (Index i = 0; i < n; ++i)
        x(i) = u(rng);
    return x;
}

} // namespace oracle
