#pragma once

// Splitting scheme for the biharmonic problem
//
//   Lap^2 psi = f in Omega,  psi = gD and d_n psi = gN on the boundary,
//
// written as two Dirichlet Laplacians for omega = -Lap psi and psi coupled
// through the unknown trace lambda of omega. The trace solves
// l_h(lambda, mu) = <b, mu> for all boundary polynomials mu, where l_h is
// symmetric positive definite.

#include <iostream>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "hho.hpp"
#include "krylov.hpp"
#include "spaces.hpp"
#include "trace.hpp"

namespace hhosplit {

struct SplitProblem
{
    std::shared_ptr<const CondensedSystem> system;
    ScalarFunction f = [](const Point&) { return 0.0; };
    ScalarFunction gD = [](const Point&) { return 0.0; };
    ScalarFunction gN = [](const Point&) { return 0.0; };
    double eps = 1e-8;
    std::size_t max_iterations = 500;

    const CondensedSystem& sys() const
    {
        if (!system)
            throw config_error("split problem has no assembled system");
        return *system;
    }
    const Mesh& mesh() const { return sys().mesh(); }
    std::size_t trace_size() const { return mesh().num_boundary_faces() * face_basis_size(sys().k()); }
};

struct HybridPair
{
    HybridVector omega;
    HybridVector psi;
};

struct BiharmonicSolution
{
    TraceVector lambda;
    HybridVector omega;
    HybridVector psi;
    PiecewisePolynomial omega_h;
    PiecewisePolynomial psi_h;
    SolveReport report;
};

/// Boundary-stabilized inner product <<v, w>>.
inline double stab_inner_product(const HybridVector& v, const HybridVector& w, const CondensedSystem& sys)
{
    double s = 0.0;
    for (std::size_t t = 0; t < sys.mesh().num_cells(); ++t)
        s += sys.gather(v, t).dot(sys.local(t).stab_gram * sys.gather(w, t));
    return s;
}

namespace detail {

struct FluxSolve
{
    HybridVector u;
    Eigen::VectorXd moments;
};

// Dirichlet solve that also returns the boundary flux moments, sharing the
// condensed load between both.
inline FluxSolve solve_with_flux(const CondensedSystem& sys, const std::vector<Eigen::VectorXd>& loads,
                                 const Eigen::VectorXd& trace)
{
    const Subdomain& g = sys.global();
    const Eigen::VectorXd r = g.condense(loads);
    const auto field = g.solve(r, loads, trace);
    return {sys.to_hybrid(field), g.flux_moments(field, r)};
}

} // namespace detail

/// Homogeneous pair: a_h(w, v) = 0 with trace mu, then a_h(p, v) = <<w, v>>
/// with zero trace. Inhomogeneous pair: a_h(w, v) = (f, v_T) with trace mu,
/// then a_h(p, v) = (w_T, v_T) with trace pi gD.
inline HybridPair solve_pair(const TraceVector& mu, const SplitProblem& problem, bool homogeneous)
{
    const CondensedSystem& sys = problem.sys();
    HybridPair out;
    if (homogeneous) {
        out.omega = sys.solve({}, mu);
        out.psi = sys.solve(sys.stab_loads(out.omega), TraceVector(sys.mesh(), sys.k()));
    } else {
        out.omega = sys.solve(sys.source_loads(problem.f), mu);
        out.psi = sys.solve(sys.mass_loads(out.omega), sys.boundary_projection(problem.gD));
    }
    return out;
}

/// Moments l_h(mu, phi_i) against every boundary basis function: the action
/// of the symmetric Galerkin matrix of l_h on the coefficients of mu.
inline Eigen::VectorXd lh_moments(const Eigen::VectorXd& mu, const SplitProblem& problem)
{
    const CondensedSystem& sys = problem.sys();
    if (std::size_t(mu.size()) != problem.trace_size())
        throw index_error("trace vector has the wrong size");
    const HybridVector omega = sys.solve({}, TraceVector(sys.k(), mu));
    const auto psi = detail::solve_with_flux(sys, sys.stab_loads(omega), Eigen::VectorXd::Zero(mu.size()));
    return -psi.moments;
}

/// Coefficients of L_h mu.
inline Eigen::VectorXd apply_Lh(const Eigen::VectorXd& mu, const SplitProblem& problem)
{
    return problem.sys().moments_to_coefficients(lh_moments(mu, problem));
}

inline TraceVector apply_Lh(const TraceVector& mu, const SplitProblem& problem)
{
    return TraceVector(mu.k, apply_Lh(mu.values, problem));
}

/// The Galerkin matrix of l_h as a linear operator.
inline LinearOperator lh_operator(const SplitProblem& problem)
{
    return {problem.trace_size(), [&problem](const Vector& x) -> Vector { return lh_moments(x, problem); }, nullptr};
}

/// Dense Galerkin matrix (l_h(phi_j, phi_i))_ij. Meant for small meshes.
inline Eigen::MatrixXd lh_matrix(const SplitProblem& problem)
{
    const auto n = Eigen::Index(problem.trace_size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        m.col(j) = lh_moments(Eigen::VectorXd::Unit(n, j), problem);
    return m;
}

namespace detail {

// Moments of d_n^h(psi0) where (omega0, psi0) is the inhomogeneous pair with
// zero trace.
inline Eigen::VectorXd initial_flux_moments(const SplitProblem& problem)
{
    const CondensedSystem& sys = problem.sys();
    const HybridVector omega0 = sys.solve(sys.source_loads(problem.f), TraceVector(sys.mesh(), sys.k()));
    return solve_with_flux(sys, sys.mass_loads(omega0), sys.boundary_projection(problem.gD).values).moments;
}

} // namespace detail

/// Right-hand side b = d_n^h(psi0) - pi gN, in coefficients.
inline TraceVector rhs_b(const SplitProblem& problem)
{
    const CondensedSystem& sys = problem.sys();
    return TraceVector(sys.k(), sys.moments_to_coefficients(detail::initial_flux_moments(problem)) -
                                    sys.boundary_projection(problem.gN).values);
}

/// Right-hand side of the Galerkin system: moments of b.
inline Eigen::VectorXd galerkin_rhs(const SplitProblem& problem)
{
    return detail::initial_flux_moments(problem) - problem.sys().boundary_moments(problem.gN);
}

/// Solves the Galerkin system for lambda by flexible CG (preconditioned when
/// `precond` is set), then the final pair with trace lambda, and reconstructs
/// both fields. Residuals are measured on the Galerkin system.
inline BiharmonicSolution solve(const SplitProblem& problem, const VectorAction& precond = {})
{
    const CondensedSystem& sys = problem.sys();
    const Eigen::VectorXd b = galerkin_rhs(problem);

    FcgOptions opt;
    opt.tolerance = problem.eps;
    opt.max_iterations = problem.max_iterations;
    auto [lambda, report] = fcg(lh_operator(problem), b, precond, opt);
    if (report.preconditioner_failures > 0)
        std::clog << "hhosplit: preconditioner failed " << report.preconditioner_failures
                  << " time(s), identity used instead\n";
    if (!report.converged)
        throw convergence_error("flexible CG did not reach the tolerance in " + std::to_string(report.iterations) +
                                    " iterations",
                                report.history);

    BiharmonicSolution sol;
    sol.lambda = TraceVector(sys.k(), std::move(lambda));
    auto pair = solve_pair(sol.lambda, problem, false);
    sol.omega = std::move(pair.omega);
    sol.psi = std::move(pair.psi);
    sol.omega_h = reconstruct(sys, sol.omega);
    sol.psi_h = reconstruct(sys, sol.psi);
    sol.report = std::move(report);
    return sol;
}

} // namespace hhosplit
