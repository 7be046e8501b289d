#pragma once

// Linear solvers: sparse Cholesky, flexible preconditioned conjugate
// gradients, and BiCGSTAB over matrix-free operators.

#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "errors.hpp"

namespace hhosplit {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using VectorAction = std::function<Vector(const Vector&)>;

/// A linear map known through its action on vectors.
struct LinearOperator
{
    std::size_t dim = 0;
    VectorAction action;
    std::shared_ptr<const SparseMatrix> matrix; ///< explicit form, when available

    Vector operator()(const Vector& x) const { return action(x); }

    static LinearOperator from_matrix(SparseMatrix a)
    {
        auto m = std::make_shared<const SparseMatrix>(std::move(a));
        return {std::size_t(m->rows()), [m](const Vector& x) -> Vector { return *m * x; }, m};
    }

    static LinearOperator from_dense(Eigen::MatrixXd a)
    {
        const auto n = std::size_t(a.rows());
        return {n, [a = std::move(a)](const Vector& x) -> Vector { return a * x; }, nullptr};
    }
};

struct SolveReport
{
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    std::vector<double> history; ///< relative residual, one entry per iteration plus the initial one
    bool converged = false;
    std::size_t preconditioner_failures = 0;
};

/// Sparse LL^T factorisation with fill-reducing ordering.
class SparseCholesky
{
public:
    SparseCholesky() = default;

    explicit SparseCholesky(const SparseMatrix& a) { factorize(a); }

    void factorize(const SparseMatrix& a)
    {
        if (a.rows() != a.cols())
            throw not_spd_error("sparse_cholesky: matrix is not square");
        dim_ = std::size_t(a.rows());
        if (dim_ == 0)
            return;
        const SparseMatrix diff = a - SparseMatrix(a.transpose());
        const double scale = std::max(a.norm(), 1.0);
        if (diff.norm() > 1e-12 * scale)
            throw not_spd_error("sparse_cholesky: matrix is not symmetric");
        auto llt = std::make_shared<Factor>(a);
        if (llt->info() != Eigen::Success)
            throw not_spd_error("sparse_cholesky: non-positive pivot");
        llt_ = std::move(llt);
    }

    std::size_t size() const { return dim_; }

    Vector solve(const Vector& b) const
    {
        if (dim_ == 0)
            return Vector(0);
        return llt_->solve(b);
    }

    Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const
    {
        if (dim_ == 0)
            return Eigen::MatrixXd(0, b.cols());
        return llt_->solve(b);
    }

private:
    using Factor = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;
    std::size_t dim_ = 0;
    std::shared_ptr<const Factor> llt_; // the factor is immutable once computed, so copies may share it
};

inline SparseCholesky sparse_cholesky(const SparseMatrix& a) { return SparseCholesky(a); }

/// SPD solver that factors small systems densely and large ones sparsely.
class SpdSolver
{
public:
    SpdSolver() = default;

    SpdSolver(const SparseMatrix& a, std::size_t dense_below)
    {
        if (std::size_t(a.rows()) < dense_below) {
            Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(a)};
            if (a.rows() > 0 && llt.info() != Eigen::Success)
                throw not_spd_error("dense cholesky: non-positive pivot");
            impl_ = std::move(llt);
        } else {
            impl_ = SparseCholesky(a);
        }
    }

    Vector solve(const Vector& b) const
    {
        if (b.size() == 0)
            return b;
        return std::visit([&](const auto& s) -> Vector { return s.solve(b); }, impl_);
    }

private:
    std::variant<SparseCholesky, Eigen::LLT<Eigen::MatrixXd>> impl_;
};

struct FcgOptions
{
    double tolerance = 1e-8;
    std::size_t max_iterations = 500;
    /// Called with the iterate after every update.
    std::function<void(const Vector&)> on_iterate;
};

/// Flexible conjugate gradients. The search direction uses the
/// Polak-Ribiere coefficient beta = (z_new, r_new - r_old) / (z_old, r_old),
/// which tolerates a preconditioner that is non-symmetric or varies between
/// iterations and reduces to PCG for a fixed SPD preconditioner.
///
/// A preconditioner that throws is replaced by the identity for that step.
inline std::pair<Vector, SolveReport> fcg(const LinearOperator& a, const Vector& b,
                                          const VectorAction& precond, const FcgOptions& opt = {})
{
    SolveReport rep;
    Vector x = Vector::Zero(b.size());
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        rep.history.push_back(0.0);
        rep.converged = true;
        return {x, rep};
    }

    Vector r = b, r_old, z, p, q;
    double zr_old = 0.0;
    rep.relative_residual = 1.0;
    rep.history.push_back(1.0);

    while (rep.relative_residual >= opt.tolerance && rep.iterations < opt.max_iterations) {
        if (precond) {
            try {
                z = precond(r);
            } catch (const error&) {
                ++rep.preconditioner_failures;
                z = r;
            }
        } else {
            z = r;
        }
        const double zr = z.dot(r);
        if (rep.iterations == 0) {
            p = z;
        } else {
            const double beta = z.dot(r - r_old) / zr_old;
            p = z + beta * p;
        }
        q = a(p);
        const double pq = p.dot(q);
        if (!(std::abs(pq) > 0.0) || !std::isfinite(pq))
            throw breakdown_error("fcg: vanishing curvature p.Ap");
        const double alpha = zr / pq;
        x += alpha * p;
        r_old = r;
        zr_old = zr;
        r -= alpha * q;
        ++rep.iterations;
        rep.relative_residual = r.norm() / bnorm;
        rep.history.push_back(rep.relative_residual);
        if (opt.on_iterate)
            opt.on_iterate(x);
    }
    rep.converged = rep.relative_residual < opt.tolerance;
    return {x, rep};
}

inline std::pair<Vector, SolveReport> fcg(const LinearOperator& a, const Vector& b, const FcgOptions& opt = {})
{
    return fcg(a, b, VectorAction{}, opt);
}

struct BicgstabOptions
{
    double tolerance = 1e-8;
    std::size_t max_iterations = 200;
};

/// Unpreconditioned BiCGSTAB. The right-hand side is normalised internally so
/// that the breakdown thresholds on rho and omega are scale-free.
inline std::pair<Vector, SolveReport> bicgstab(const LinearOperator& a, const Vector& b,
                                               const BicgstabOptions& opt = {})
{
    constexpr double breakdown = 1e-30;
    SolveReport rep;
    const double bnorm = b.norm();
    Vector x = Vector::Zero(b.size());
    if (bnorm == 0.0) {
        rep.history.push_back(0.0);
        rep.converged = true;
        return {x, rep};
    }

    const Vector bn = b / bnorm;
    Vector r = bn;
    const Vector rhat = r;
    Vector p = Vector::Zero(b.size()), v = Vector::Zero(b.size()), s, t;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    rep.relative_residual = 1.0;
    rep.history.push_back(1.0);

    while (rep.relative_residual >= opt.tolerance && rep.iterations < opt.max_iterations) {
        const double rho_new = rhat.dot(r);
        if (std::abs(rho_new) < breakdown)
            throw breakdown_error("bicgstab: rho breakdown");
        const double beta = (rho_new / rho) * (alpha / omega);
        p = r + beta * (p - omega * v);
        v = a(p);
        const double rv = rhat.dot(v);
        if (std::abs(rv) < breakdown || !std::isfinite(rv))
            throw breakdown_error("bicgstab: (r0, v) breakdown");
        alpha = rho_new / rv;
        s = r - alpha * v;
        ++rep.iterations;
        if (s.norm() < opt.tolerance) {
            x += alpha * p;
            r = s;
            rep.relative_residual = r.norm();
            rep.history.push_back(rep.relative_residual);
            break;
        }
        t = a(s);
        const double tt = t.dot(t);
        if (!(tt > 0.0))
            throw breakdown_error("bicgstab: omega breakdown");
        omega = t.dot(s) / tt;
        if (std::abs(omega) < breakdown)
            throw breakdown_error("bicgstab: omega breakdown");
        x += alpha * p + omega * s;
        r = s - omega * t;
        rho = rho_new;
        rep.relative_residual = r.norm();
        rep.history.push_back(rep.relative_residual);
    }
    rep.converged = rep.relative_residual < opt.tolerance;
    x *= bnorm;
    return {x, rep};
}

} // namespace hhosplit
