#pragma once

// Sparse approximation of the Galerkin matrix of l_h, built column by column
// on vertex-layer neighbourhoods of the boundary faces and applied through
// BiCGSTAB.

#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "biharmonic.hpp"
#include "errors.hpp"
#include "hho.hpp"
#include "krylov.hpp"
#include "mesh.hpp"

namespace hhosplit {

class PatchPreconditioner
{
public:
    PatchPreconditioner() = default;

    /// Builds the approximation for `problem`; the inner BiCGSTAB tolerance
    /// defaults to the outer one.
    static PatchPreconditioner build(const SplitProblem& problem, unsigned alpha, double inner_tol = -1.0,
                                     std::size_t dense_below = 400)
    {
        const CondensedSystem& sys = problem.sys();
        const Mesh& mesh = sys.mesh();
        const Eigen::Index fd = sys.face_dofs();
        const std::size_t nb = mesh.num_boundary_faces();

        PatchPreconditioner pc;
        pc.alpha_ = alpha;
        pc.inner_tol_ = inner_tol > 0.0 ? inner_tol : problem.eps;
        pc.patches_.reserve(nb);

        std::vector<Eigen::Triplet<double>> trip;
        for (std::size_t i = 0; i < nb; ++i) {
            // All DoFs of a face share one neighbourhood.
            Patch p = neighborhood(mesh, i, alpha, 1);
            const Eigen::MatrixXd cols = patch_columns(sys, p, dense_below);
            for (std::size_t d = 0; d < p.domain_faces.size(); ++d) {
                const Eigen::Index row0 = Eigen::Index(mesh.boundary_index(p.domain_faces[d])) * fd;
                for (Eigen::Index a = 0; a < fd; ++a)
                    for (Eigen::Index m = 0; m < fd; ++m)
                        trip.emplace_back(row0 + a, Eigen::Index(i) * fd + m, cols(Eigen::Index(d) * fd + a, m));
            }
            pc.patches_.push_back(std::move(p));
        }
        const Eigen::Index n = Eigen::Index(nb) * fd;
        SparseMatrix m(n, n);
        m.setFromTriplets(trip.begin(), trip.end());
        pc.matrix_ = std::make_shared<const SparseMatrix>(std::move(m));
        return pc;
    }

    unsigned alpha() const { return alpha_; }
    double inner_tolerance() const { return inner_tol_; }
    const SparseMatrix& matrix() const { return *matrix_; }
    Eigen::MatrixXd dense() const { return Eigen::MatrixXd(*matrix_); }
    const std::vector<Patch>& patches() const { return patches_; }
    std::size_t applications() const { return applications_; }

    /// z ~ inverse(approximation) r.
    Vector apply(const Vector& r) const
    {
        ++applications_;
        BicgstabOptions opt;
        opt.tolerance = inner_tol_;
        opt.max_iterations = 200;
        auto [z, rep] = bicgstab(LinearOperator{std::size_t(matrix_->rows()),
                                                [m = matrix_](const Vector& x) -> Vector { return *m * x; }, matrix_},
                                 r, opt);
        if (!rep.converged)
            throw convergence_error("preconditioner: BiCGSTAB did not converge", rep.history);
        return z;
    }

    VectorAction action() const
    {
        return [this](const Vector& r) { return apply(r); };
    }

    /// Columns of the patch operator for the seed face of p: rows run over
    /// the domain-boundary faces of the patch, columns over the seed face DoFs.
    static Eigen::MatrixXd patch_columns(const CondensedSystem& sys, const Patch& p, std::size_t dense_below)
    {
        const Eigen::Index fd = sys.face_dofs();
        const Subdomain sub(sys, p.cells, p.interior_faces, p.domain_faces, dense_below);
        const std::size_t seed = Patch::local_index(p.domain_faces, p.face);

        Eigen::MatrixXd cols(sub.trace_dofs(), fd);
        std::vector<Eigen::VectorXd> loads(p.cells.size());
        const Eigen::VectorXd zero_trace = Eigen::VectorXd::Zero(sub.trace_dofs());
        const Eigen::VectorXd zero_load = Eigen::VectorXd::Zero(sub.free_dofs() + sub.trace_dofs());
        for (Eigen::Index m = 0; m < fd; ++m) {
            Eigen::VectorXd trace = Eigen::VectorXd::Zero(sub.trace_dofs());
            trace(Eigen::Index(seed) * fd + m) = 1.0;
            const auto omega = sub.solve(zero_load, {}, trace);
            for (std::size_t c = 0; c < p.cells.size(); ++c)
                loads[c] = sys.local(p.cells[c]).stab_gram * sub.local_values(omega, c);
            const Eigen::VectorXd r = sub.condense(loads);
            const auto psi = sub.solve(r, loads, zero_trace);
            cols.col(m) = -sub.flux_moments(psi, r);
        }
        return cols;
    }

private:
    unsigned alpha_ = 0;
    double inner_tol_ = 1e-8;
    std::shared_ptr<const SparseMatrix> matrix_ = std::make_shared<const SparseMatrix>();
    std::vector<Patch> patches_;
    mutable std::size_t applications_ = 0;
};

/// Preconditioned solve with a patch preconditioner.
inline BiharmonicSolution solve(const SplitProblem& problem, const PatchPreconditioner& precond)
{
    return solve(problem, precond.action());
}

} // namespace hhosplit
