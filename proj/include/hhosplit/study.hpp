#pragma once

// Error norms, convergence studies and preconditioner benchmarks, with CSV
// reports.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "biharmonic.hpp"
#include "cases.hpp"
#include "errors.hpp"
#include "hho.hpp"
#include "mesh.hpp"
#include "precond.hpp"
#include "quadrature.hpp"
#include "trace.hpp"

namespace hhosplit {

/// Relative L2 error of a piecewise polynomial against `exact`. When `exact`
/// vanishes the absolute error is returned and `zero_exact` is set.
inline double error_l2(const PiecewisePolynomial& field, const ScalarFunction& exact, const Mesh& mesh,
                       int order = -1, bool* zero_exact = nullptr)
{
    if (order < 0)
        order = error_quadrature_order(field.degree);
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < mesh.num_cells(); ++t)
        for (const auto& qp : cell_quadrature(mesh, t, order)) {
            const double u = exact(qp.point);
            const double d = u - field.eval(mesh, t, qp.point);
            num += qp.weight * d * d;
            den += qp.weight * u * u;
        }
    if (zero_exact)
        *zero_exact = den == 0.0;
    return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

/// Relative L2 distance between a piecewise polynomial and the cellwise L2
/// projection of `exact` onto polynomials of the same degree.
inline double projected_error_l2(const PiecewisePolynomial& field, const ScalarFunction& exact, const Mesh& mesh,
                                 int order = -1)
{
    if (order < 0)
        order = error_quadrature_order(field.degree);
    PiecewisePolynomial proj{field.degree, {}};
    proj.coefficients.reserve(mesh.num_cells());
    for (std::size_t t = 0; t < mesh.num_cells(); ++t)
        proj.coefficients.push_back(project_cell(exact, mesh, t, field.degree, order));
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < mesh.num_cells(); ++t)
        for (const auto& qp : cell_quadrature(mesh, t, order)) {
            const double u = exact(qp.point);
            const double d = proj.eval(mesh, t, qp.point) - field.eval(mesh, t, qp.point);
            num += qp.weight * d * d;
            den += qp.weight * u * u;
        }
    return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

/// "cartesian", "tri" or "file:PATH".
struct MeshSpec
{
    enum class Kind { cartesian, triangular, file };
    Kind kind = Kind::cartesian;
    std::string path;

    static MeshSpec parse(const std::string& s)
    {
        if (s == "cartesian")
            return {Kind::cartesian, {}};
        if (s == "tri")
            return {Kind::triangular, {}};
        if (s.rfind("file:", 0) == 0 && s.size() > 5)
            return {Kind::file, s.substr(5)};
        throw config_error("unknown mesh '" + s + "' (expected cartesian, tri or file:PATH)");
    }

    /// n is ignored for file meshes.
    std::shared_ptr<const Mesh> make(std::size_t n) const
    {
        switch (kind) {
        case Kind::cartesian: return std::make_shared<const Mesh>(generate_cartesian(n));
        case Kind::triangular: return std::make_shared<const Mesh>(generate_triangular(n));
        case Kind::file: return std::make_shared<const Mesh>(read_mesh(path));
        }
        throw config_error("bad mesh kind");
    }
};

inline constexpr double not_available = std::numeric_limits<double>::quiet_NaN();

struct StudyRow
{
    double h = 0.0;
    std::size_t n = 0;
    int k = 0;
    double err_psi = not_available;
    double err_omega = not_available;
    double order_psi = not_available;
    double order_omega = not_available;
    std::size_t iters = 0;
    double setup_s = 0.0;
    double iter_s = 0.0;
    std::optional<unsigned> alpha; ///< benchmarks only; 0 means unpreconditioned
};

inline double observed_order(double e0, double e1, double h0, double h1)
{
    return std::log(e0 / e1) / std::log(h0 / h1);
}

struct StudyReport
{
    std::vector<StudyRow> rows;
    /// Residual histories of a benchmark, one per row.
    std::vector<std::vector<double>> histories;

    static constexpr const char* header = "h,n,k,err_psi,err_omega,order_psi,order_omega,iters,setup_s,iter_s";

    /// Fills the order columns from consecutive rows with equal k.
    void compute_orders()
    {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            rows[i].order_psi = rows[i].order_omega = not_available;
            if (i == 0 || rows[i - 1].k != rows[i].k || rows[i - 1].alpha != rows[i].alpha)
                continue;
            const auto& a = rows[i - 1];
            auto& b = rows[i];
            b.order_psi = observed_order(a.err_psi, b.err_psi, a.h, b.h);
            b.order_omega = observed_order(a.err_omega, b.err_omega, a.h, b.h);
        }
    }

    bool has_alpha() const
    {
        for (const auto& r : rows)
            if (r.alpha)
                return true;
        return false;
    }

    void write_csv(std::ostream& os) const
    {
        const bool alpha = has_alpha();
        os << header << (alpha ? ",alpha" : "") << '\n';
        for (const auto& r : rows) {
            os << fmt(r.h) << ',' << r.n << ',' << r.k << ',' << fmt(r.err_psi) << ',' << fmt(r.err_omega) << ','
               << fmt(r.order_psi) << ',' << fmt(r.order_omega) << ',' << r.iters << ',' << fmt(r.setup_s) << ','
               << fmt(r.iter_s);
            if (alpha)
                os << ',' << (r.alpha ? std::to_string(*r.alpha) : "");
            os << '\n';
        }
    }

    static StudyReport read_csv(std::istream& is)
    {
        StudyReport rep;
        std::string line;
        if (!std::getline(is, line))
            throw parse_error("missing header", 1);
        const bool alpha = line == std::string(header) + ",alpha";
        if (!alpha && line != header)
            throw parse_error("unexpected header", 1);
        std::size_t lineno = 1;
        while (std::getline(is, line)) {
            ++lineno;
            if (line.empty())
                continue;
            std::vector<std::string> f;
            std::stringstream ss(line);
            for (std::string cell; std::getline(ss, cell, ',');)
                f.push_back(cell);
            if (alpha && line.back() == ',')
                f.emplace_back();
            if (f.size() != (alpha ? 11u : 10u))
                throw parse_error("wrong number of fields", lineno);
            try {
                StudyRow r;
                r.h = std::stod(f[0]);
                r.n = std::stoul(f[1]);
                r.k = std::stoi(f[2]);
                r.err_psi = std::stod(f[3]);
                r.err_omega = std::stod(f[4]);
                r.order_psi = std::stod(f[5]);
                r.order_omega = std::stod(f[6]);
                r.iters = std::stoul(f[7]);
                r.setup_s = std::stod(f[8]);
                r.iter_s = std::stod(f[9]);
                if (alpha && !f[10].empty())
                    r.alpha = unsigned(std::stoul(f[10]));
                rep.rows.push_back(r);
            } catch (const std::logic_error&) {
                throw parse_error("bad number", lineno);
            }
        }
        return rep;
    }

    /// Residual histories as columns Iter,No,P<alpha>,...; shorter columns
    /// are left empty.
    void write_history_csv(std::ostream& os) const
    {
        os << "Iter";
        std::size_t len = 0;
        for (std::size_t i = 0; i < rows.size() && i < histories.size(); ++i) {
            const unsigned a = rows[i].alpha.value_or(0);
            os << ',' << (a == 0 ? std::string("No") : "P" + std::to_string(a));
            len = std::max(len, histories[i].size());
        }
        os << '\n';
        for (std::size_t it = 0; it < len; ++it) {
            os << it;
            for (const auto& h : histories) {
                os << ',';
                if (it < h.size())
                    os << fmt(h[it]);
            }
            os << '\n';
        }
    }

    /// Fixed-width table for terminals.
    void write_summary(std::ostream& os) const
    {
        const bool alpha = has_alpha();
        char buf[256];
        std::snprintf(buf, sizeof buf, "%5s %3s %11s %11s %11s %7s %7s %6s %9s %9s\n", alpha ? "alpha" : "", "k", "h",
                      "err_psi", "err_omega", "ord_psi", "ord_om", "iters", "setup_s", "iter_s");
        os << buf;
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof buf, "%5s %3d %11.4e %11.4e %11.4e %7.2f %7.2f %6zu %9.3f %9.3f\n",
                          r.alpha ? std::to_string(*r.alpha).c_str() : "", r.k, r.h, r.err_psi, r.err_omega,
                          r.order_psi, r.order_omega, r.iters, r.setup_s, r.iter_s);
            os << buf;
        }
    }

    static std::string fmt(double v)
    {
        if (std::isnan(v))
            return "nan";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

} // namespace detail

struct StudyOptions
{
    MeshSpec mesh;
    std::vector<int> ks{0};
    std::vector<std::size_t> ns{16, 32};
    int l_offset = 0; ///< l = k + l_offset
    Stabilization stab = Stabilization::classic;
    double eps = 1e-8;
    unsigned alpha = 0; ///< 0: no preconditioner
};

/// Normal-derivative convergence for a Poisson case; err_psi holds the
/// boundary error of the discrete normal derivative.
inline StudyReport normal_derivative_study(const ManufacturedCase& c, const StudyOptions& opt)
{
    if (c.biharmonic)
        throw config_error("case '" + c.name + "' is not a Poisson case");
    StudyReport rep;
    for (int k : opt.ks)
        for (std::size_t n : opt.ns) {
            auto t0 = detail::Clock::now();
            auto mesh = opt.mesh.make(n);
            auto sys = assemble(mesh, k, k + opt.l_offset, opt.stab);
            StudyRow r;
            r.setup_s = detail::seconds_since(t0);
            t0 = detail::Clock::now();
            const HybridVector u = solve_poisson(*sys, c.f, c.gD());
            const TraceVector dn = normal_derivative(u, c.f, *sys);
            r.iter_s = detail::seconds_since(t0);
            r.h = mesh->h();
            r.n = n;
            r.k = k;
            r.err_psi = trace_error(*mesh, dn, c.gN(), error_quadrature_order(k));
            rep.rows.push_back(r);
        }
    rep.compute_orders();
    return rep;
}

struct BiharmonicRun
{
    std::shared_ptr<const CondensedSystem> system;
    BiharmonicSolution solution;
    double setup_s = 0.0;
    double iter_s = 0.0;
};

/// One full solve of a biharmonic case on the mesh built from `n`.
inline BiharmonicRun run_biharmonic(const ManufacturedCase& c, const StudyOptions& opt, int k, std::size_t n)
{
    if (!c.biharmonic)
        throw config_error("case '" + c.name + "' is not a biharmonic case");
    BiharmonicRun run;
    auto t0 = detail::Clock::now();
    run.system = assemble(opt.mesh.make(n), k, k + opt.l_offset, opt.stab);
    SplitProblem pb{run.system, c.f, c.gD(), c.gN(), opt.eps};
    PatchPreconditioner pc;
    if (opt.alpha > 0)
        pc = PatchPreconditioner::build(pb, opt.alpha);
    run.setup_s = detail::seconds_since(t0);
    t0 = detail::Clock::now();
    run.solution = opt.alpha > 0 ? solve(pb, pc) : solve(pb);
    run.iter_s = detail::seconds_since(t0);
    return run;
}

inline StudyReport biharmonic_study(const ManufacturedCase& c, const StudyOptions& opt)
{
    StudyReport rep;
    for (int k : opt.ks)
        for (std::size_t n : opt.ns) {
            const BiharmonicRun run = run_biharmonic(c, opt, k, n);
            const Mesh& mesh = run.system->mesh();
            StudyRow r;
            r.h = mesh.h();
            r.n = n;
            r.k = k;
            r.err_psi = error_l2(run.solution.psi_h, c.u, mesh);
            r.err_omega = error_l2(run.solution.omega_h, c.omega, mesh);
            r.iters = run.solution.report.iterations;
            r.setup_s = run.setup_s;
            r.iter_s = run.iter_s;
            rep.rows.push_back(r);
        }
    rep.compute_orders();
    return rep;
}

/// Unpreconditioned FCG followed by PFCG for each alpha, on one mesh and
/// degree. Errors are reported for every run; histories are kept.
inline StudyReport preconditioner_benchmark(const ManufacturedCase& c, const StudyOptions& opt,
                                            const std::vector<unsigned>& alphas)
{
    if (opt.ks.size() != 1 || opt.ns.size() != 1)
        throw config_error("the benchmark takes exactly one k and one n");
    StudyReport rep;
    std::vector<unsigned> all{0};
    all.insert(all.end(), alphas.begin(), alphas.end());
    for (unsigned a : all) {
        StudyOptions o = opt;
        o.alpha = a;
        const BiharmonicRun run = run_biharmonic(c, o, opt.ks[0], opt.ns[0]);
        const Mesh& mesh = run.system->mesh();
        StudyRow r;
        r.h = mesh.h();
        r.n = opt.ns[0];
        r.k = opt.ks[0];
        r.err_psi = error_l2(run.solution.psi_h, c.u, mesh);
        r.err_omega = error_l2(run.solution.omega_h, c.omega, mesh);
        r.iters = run.solution.report.iterations;
        r.setup_s = run.setup_s;
        r.iter_s = run.iter_s;
        r.alpha = a;
        rep.rows.push_back(r);
        rep.histories.push_back(run.solution.report.history);
    }
    return rep;
}

} // namespace hhosplit
