#include <cmath>
#include <memory>
#include <random>

#include <gtest/gtest.h>

#include "hhosplit/biharmonic.hpp"
#include "hhosplit/cases.hpp"
#include "hhosplit/study.hpp"
#include "oracle.hpp"

using namespace hhosplit;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SplitProblem make_problem(const Mesh& m, int k, int l = -1)
{
    SplitProblem pb;
    pb.system = assemble(std::make_shared<const Mesh>(m), k, l < 0 ? k : l);
    return pb;
}

TraceVector random_trace(const Mesh& m, int k, std::mt19937& rng)
{
    TraceVector v(m, k);
    v.values = oracle::random_vector(v.size(), rng);
    return v;
}

// Center value of the solution of -Lap u = 1, u = 0 on the unit square, by
// the double sine series.
double poisson_center_value()
{
    double s = 0.0;
    for (int i = 1; i < 400; i += 2)
        for (int j = 1; j < 400; j += 2)
            s += std::sin(i * M_PI / 2) * std::sin(j * M_PI / 2) / (double(i) * j * (double(i) * i + double(j) * j));
    return 16.0 / std::pow(M_PI, 4) * s;
}

} // namespace

TEST(StabInnerProduct, ConstantsGiveDomainArea)
{
    for (const Mesh& m : {generate_cartesian(3), generate_triangular(2)})
        for (int k = 0; k <= 2; ++k) {
            auto pb = make_problem(m, k);
            const HybridVector one = interpolate(m, k, k, [](const Point&) { return 1.0; });
            EXPECT_NEAR(stab_inner_product(one, one, pb.sys()), 1.0, 1e-12);
        }
}

TEST(StabInnerProduct, MatchesQuadratureOracle)
{
    std::mt19937 rng(51);
    for (const Mesh& m : {generate_cartesian(3), generate_triangular(2)})
        for (int k = 0; k <= 2; ++k)
            for (int l : {k, k + 1}) {
                auto pb = make_problem(m, k, l);
                const auto full = oracle::assemble(pb.sys());
                EXPECT_LT((full.g - full.g.transpose()).norm(), 1e-14 * full.g.norm());
                for (int trial = 0; trial < 5; ++trial) {
                    const VectorXd v = oracle::random_vector(full.n, rng), w = oracle::random_vector(full.n, rng);
                    const double ref = v.dot(full.g * w);
                    const double got =
                        stab_inner_product(oracle::unflatten(full, v), oracle::unflatten(full, w), pb.sys());
                    EXPECT_NEAR(got, ref, 1e-12 * std::max(1.0, std::abs(ref)));
                }
            }
}

TEST(StabInnerProduct, LocalStabilityOnBoundary)
{
    // The null space of the Gram matrix may only involve faces that belong to
    // no boundary cell.
    for (std::size_t n : {2, 4})
        for (const Mesh& m : {generate_cartesian(n), generate_triangular(n)})
            for (int k : {0, 1})
                for (int l : {k, k + 1}) {
                    auto pb = make_problem(m, k, l);
                    const auto full = oracle::assemble(pb.sys());
                    Eigen::SelfAdjointEigenSolver<MatrixXd> es(full.g);
                    const VectorXd ev = es.eigenvalues();
                    const double tol = 1e-12 * ev.maxCoeff();
                    Eigen::Index nullity = 0;
                    for (Eigen::Index i = 0; i < ev.size(); ++i) {
                        EXPECT_GT(ev(i), -tol);
                        if (ev(i) > tol)
                            continue;
                        ++nullity;
                        const VectorXd z = es.eigenvectors().col(i);
                        EXPECT_LT(z.head(full.cell_total).norm(), 1e-10);
                        for (std::size_t t = 0; t < m.num_cells(); ++t)
                            if (m.cell(t).on_boundary)
                                for (auto f : m.cell(t).faces)
                                    EXPECT_LT(z.segment(full.face_index(f), k + 1).norm(), 1e-10);
                    }
                    Eigen::Index free_faces = 0;
                    for (const Face& f : m.faces())
                        free_faces += !f.on_boundary && !m.cell(f.owners[0]).on_boundary &&
                                      !m.cell(f.owners[1]).on_boundary;
                    EXPECT_EQ(nullity, free_faces * (k + 1)) << "n=" << n << " k=" << k;
                }
}

TEST(SolvePair, ZeroInputsGiveZero)
{
    const Mesh m = generate_cartesian(3);
    auto pb = make_problem(m, 1);
    const auto hom = solve_pair(TraceVector(m, 1), pb, true);
    EXPECT_EQ(hom.omega.cells.norm() + hom.omega.faces.norm() + hom.psi.cells.norm() + hom.psi.faces.norm(), 0.0);
    const auto inh = solve_pair(TraceVector(m, 1), pb, false);
    EXPECT_EQ(inh.omega.cells.norm() + inh.psi.cells.norm() + inh.psi.faces.norm(), 0.0);
}

TEST(SolvePair, ConstantTraceGivesTorsionProblem)
{
    const Mesh m = generate_cartesian(32);
    auto pb = make_problem(m, 1);
    TraceVector one = pb.sys().boundary_projection([](const Point&) { return 1.0; });
    const auto pair = solve_pair(one, pb, true);
    const HybridVector ref = interpolate(m, 1, 1, [](const Point&) { return 1.0; });
    EXPECT_LT((pair.omega.cells - ref.cells).norm(), 1e-10 * ref.cells.norm());
    EXPECT_LT((pair.omega.faces - ref.faces).norm(), 1e-10 * ref.faces.norm());
    const PiecewisePolynomial psi = reconstruct(pb.sys(), pair.psi);
    // (0.5, 0.5) is a vertex, so average over the four adjacent cells
    double center = 0.0;
    for (std::size_t t : {15 * 32 + 15, 15 * 32 + 16, 16 * 32 + 15, 16 * 32 + 16})
        center += psi.eval(m, t, Point(0.5, 0.5)) / 4;
    EXPECT_NEAR(poisson_center_value(), 0.07367, 5e-5);
    EXPECT_NEAR(center, poisson_center_value(), 2e-3);
}

TEST(Lh, ZeroMapsToZero)
{
    const Mesh m = generate_cartesian(2);
    auto pb = make_problem(m, 0);
    EXPECT_EQ(apply_Lh(TraceVector(m, 0), pb).values.norm(), 0.0);
    EXPECT_THROW(lh_moments(VectorXd::Zero(3), pb), index_error);
}

TEST(Lh, ReformulationAgainstFullAssembly)
{
    std::mt19937 rng(53);
    for (const Mesh& m : {generate_cartesian(2), generate_cartesian(4), generate_triangular(2)})
        for (int k : {0, 1})
            for (int l : {k, k + 1}) {
                auto pb = make_problem(m, k, l);
                const auto full = oracle::assemble(pb.sys());
                const VectorXd zero = VectorXd::Zero(full.n);
                for (int trial = 0; trial < 20; ++trial) {
                    const TraceVector mu = random_trace(m, k, rng), eta = random_trace(m, k, rng);
                    const VectorXd wm = oracle::dirichlet_solve(full, zero, mu);
                    const VectorXd we = oracle::dirichlet_solve(full, zero, eta);
                    const double ref = wm.dot(full.g * we);
                    const double got = eta.values.dot(lh_moments(mu.values, pb));
                    EXPECT_NEAR(got, ref, 1e-10 * std::abs(ref));
                }
            }
}

TEST(Lh, DefinitionWithFullAssembly)
{
    // l_h(mu, eta) = -a_h(psi(mu), H eta) + <<omega(mu), H eta>> with H the
    // hybrid lift, everything from uncondensed matrices
    std::mt19937 rng(57);
    const Mesh m = generate_triangular(2);
    for (int k : {0, 1}) {
        auto pb = make_problem(m, k);
        const auto full = oracle::assemble(pb.sys());
        const TraceVector zero_trace(m, k);
        for (int trial = 0; trial < 10; ++trial) {
            const TraceVector mu = random_trace(m, k, rng), eta = random_trace(m, k, rng);
            const VectorXd omega = oracle::dirichlet_solve(full, VectorXd::Zero(full.n), mu);
            const VectorXd psi = oracle::dirichlet_solve(full, full.g * omega, zero_trace);
            const VectorXd h = oracle::lift(full, eta);
            const double ref = -psi.dot(full.a * h) + omega.dot(full.g * h);
            EXPECT_NEAR(eta.values.dot(lh_moments(mu.values, pb)), ref, 1e-10 * std::abs(ref));
        }
    }
}

TEST(Lh, SymmetricPositiveDefinite)
{
    for (std::size_t n : {2, 4})
        for (const Mesh& m : {generate_cartesian(n), generate_triangular(n)})
            for (int k : {0, 1}) {
                auto pb = make_problem(m, k);
                const MatrixXd l = lh_matrix(pb);
                EXPECT_LT((l - l.transpose()).norm(), 1e-10 * l.norm());
                EXPECT_GT(Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (l + l.transpose())).eigenvalues().minCoeff(),
                          0.0);
            }
}

TEST(Lh, CoefficientFormPairsThroughMass)
{
    std::mt19937 rng(59);
    const Mesh m = generate_cartesian(3);
    auto pb = make_problem(m, 1);
    const TraceVector mu = random_trace(m, 1, rng), eta = random_trace(m, 1, rng);
    const VectorXd lc = apply_Lh(mu, pb).values;
    EXPECT_NEAR(pb.sys().coefficients_to_moments(lc).dot(eta.values), lh_moments(mu.values, pb).dot(eta.values),
                1e-12 * lc.norm());
}

TEST(Rhs, ZeroDataGiveZero)
{
    auto pb = make_problem(generate_cartesian(3), 1);
    EXPECT_EQ(rhs_b(pb).values.norm(), 0.0);
    EXPECT_EQ(galerkin_rhs(pb).norm(), 0.0);
}

TEST(Rhs, AffineInNeumannData)
{
    auto pb = make_problem(generate_triangular(3), 1);
    pb.f = [](const Point& p) { return std::cos(p.x()); };
    pb.gD = [](const Point& p) { return p.x() * p.y(); };
    pb.gN = [](const Point& p) { return std::sin(3 * p.x() + p.y()); };
    const VectorXd b1 = rhs_b(pb).values;
    const ScalarFunction g = pb.gN;
    pb.gN = [g](const Point& p) { return 2 * g(p); };
    const VectorXd b2 = rhs_b(pb).values;
    EXPECT_LT((b1 - b2 - pb.sys().boundary_projection(g).values).norm(), 1e-12 * b1.norm());
    EXPECT_LT((pb.sys().coefficients_to_moments(b2) - galerkin_rhs(pb)).norm(), 1e-11 * b2.norm());
}

TEST(Rhs, ClampedPolynomialIsNonzero)
{
    const ManufacturedCase c = cases::polynomial();
    auto pb = make_problem(generate_cartesian(4), 0);
    pb.f = c.f;
    pb.gD = c.gD();
    pb.gN = c.gN();
    EXPECT_GT(rhs_b(pb).values.norm(), 0.0);
    EXPECT_EQ(pb.sys().boundary_projection(pb.gN).values.norm(), 0.0);
}

TEST(Solve, ZeroDataNeedNoIterations)
{
    auto pb = make_problem(generate_cartesian(4), 1);
    const BiharmonicSolution sol = solve(pb);
    EXPECT_EQ(sol.report.iterations, 0u);
    EXPECT_EQ(sol.lambda.values.norm(), 0.0);
    EXPECT_EQ(sol.psi.cells.norm() + sol.omega.cells.norm(), 0.0);
}

TEST(Solve, SolutionInvariants)
{
    const ManufacturedCase c = cases::exponential();
    auto pb = make_problem(generate_cartesian(8), 1);
    pb.f = c.f;
    pb.gD = c.gD();
    pb.gN = c.gN();
    pb.eps = 1e-12;
    const BiharmonicSolution sol = solve(pb);
    const Mesh& m = pb.mesh();
    const TraceVector gd = pb.sys().boundary_projection(pb.gD);
    const auto& bf = m.boundary_faces();
    for (std::size_t i = 0; i < bf.size(); ++i) {
        EXPECT_LT((sol.psi.face_block(bf[i]) - gd.block(i)).norm(), 1e-13);
        EXPECT_LT((sol.omega.face_block(bf[i]) - sol.lambda.block(i)).norm(), 1e-13);
    }
    EXPECT_EQ(sol.report.history.size(), sol.report.iterations + 1);

    // omega splits into the zero-trace part and the homogeneous part of lambda
    const CondensedSystem& sys = pb.sys();
    const HybridVector omega0 = sys.solve(sys.source_loads(pb.f), TraceVector(m, 1));
    const HybridPair hom = solve_pair(sol.lambda, pb, true);
    EXPECT_LT((sol.omega.cells - omega0.cells - hom.omega.cells).norm(), 1e-11 * sol.omega.cells.norm());

    // discrete Neumann condition: d_n psi0 + d_n psi(lambda) = pi gN, in moments
    const HybridVector psi0 = sys.solve(sys.mass_loads(omega0), sys.boundary_projection(pb.gD));
    const VectorXd lhs =
        sys.flux_moments(psi0, sys.mass_loads(omega0)) + sys.flux_moments(hom.psi, sys.stab_loads(hom.omega));
    const VectorXd gn = sys.boundary_moments(pb.gN);
    EXPECT_LT((lhs - gn).norm(), 1e-10 * gn.norm());
}

TEST(Solve, IterationCapRaises)
{
    const ManufacturedCase c = cases::exponential();
    auto pb = make_problem(generate_cartesian(8), 0);
    pb.f = c.f;
    pb.gD = c.gD();
    pb.gN = c.gN();
    pb.max_iterations = 2;
    try {
        solve(pb);
        FAIL() << "expected a convergence error";
    } catch (const convergence_error& e) {
        EXPECT_EQ(e.history().size(), 3u);
    }
}

TEST(Solve, ExponentialCaseFirstPoint)
{
    const ManufacturedCase c = cases::exponential();
    StudyOptions opt;
    opt.ks = {0};
    opt.ns = {16};
    const StudyReport rep = biharmonic_study(c, opt);
    ASSERT_EQ(rep.rows.size(), 1u);
    EXPECT_GT(rep.rows[0].err_psi, 1.10e-2 / 1.5);
    EXPECT_LT(rep.rows[0].err_psi, 1.10e-2 * 1.5);
    EXPECT_GT(rep.rows[0].err_omega, 6.38e-2 / 1.5);
    EXPECT_LT(rep.rows[0].err_omega, 6.38e-2 * 1.5);
}

TEST(Solve, UnpreconditionedIterationsOnCoarseMesh)
{
    const ManufacturedCase c = cases::exponential();
    StudyOptions opt;
    opt.ks = {0};
    opt.ns = {32};
    const StudyReport rep = biharmonic_study(c, opt);
    EXPECT_NEAR(double(rep.rows[0].iters), 19.0, 3.0);
}
