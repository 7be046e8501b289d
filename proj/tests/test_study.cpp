#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "hhosplit/cases.hpp"
#include "hhosplit/study.hpp"

using namespace hhosplit;

namespace {

double laplacian_fd(const ScalarFunction& u, const Point& p, double e = 1e-3)
{
    // fourth-order five-point stencils in each direction
    const auto d2 = [&](const Point& dir) {
        return (-u(p + 2 * e * dir) + 16 * u(p + e * dir) - 30 * u(p) + 16 * u(p - e * dir) - u(p - 2 * e * dir)) /
               (12 * e * e);
    };
    return d2(Point(1, 0)) + d2(Point(0, 1));
}

Point gradient_fd(const ScalarFunction& u, const Point& p, double e = 1e-5)
{
    return Point((u(p + Point(e, 0)) - u(p - Point(e, 0))) / (2 * e),
                 (u(p + Point(0, e)) - u(p - Point(0, e))) / (2 * e));
}

const Point samples[] = {{0.3, 0.7}, {0.55, 0.2}, {0.81, 0.43}, {0.12, 0.9}};

} // namespace

TEST(Cases, PoissonCaseConsistent)
{
    const ManufacturedCase c = cases::sine();
    EXPECT_FALSE(c.biharmonic);
    for (const Point& p : samples) {
        EXPECT_NEAR(c.f(p), -laplacian_fd(c.u, p), 1e-5 * std::abs(c.f(p)) + 1e-4);
        EXPECT_LT((c.grad(p) - gradient_fd(c.u, p)).norm(), 1e-6);
    }
}

TEST(Cases, BiharmonicCasesConsistent)
{
    for (const ManufacturedCase& c : {cases::exponential(), cases::polynomial()}) {
        EXPECT_TRUE(c.biharmonic);
        for (const Point& p : samples) {
            EXPECT_NEAR(c.omega(p), -laplacian_fd(c.u, p), 1e-7) << c.name;
            EXPECT_NEAR(c.f(p), -laplacian_fd(c.omega, p), 1e-5) << c.name;
            EXPECT_LT((c.grad(p) - gradient_fd(c.u, p)).norm(), 1e-8) << c.name;
        }
    }
}

TEST(Cases, ClampedPolynomialBoundaryData)
{
    const ManufacturedCase c = cases::polynomial();
    for (double s : {0.0, 0.25, 0.6, 1.0})
        for (const Point& p : {Point(s, 0), Point(s, 1), Point(0, s), Point(1, s)}) {
            EXPECT_EQ(c.gD()(p), 0.0);
            EXPECT_EQ(c.gN()(p), 0.0);
        }
}

TEST(Cases, NeumannDataUsesOutwardNormal)
{
    const ManufacturedCase c = cases::exponential();
    const Point p(1.0, 0.3);
    EXPECT_DOUBLE_EQ(c.gN()(p), c.grad(p).x());
    const Point q(0.4, 0.0);
    EXPECT_DOUBLE_EQ(c.gN()(q), -c.grad(q).y());
}

TEST(Cases, LookupByName)
{
    for (const auto& n : cases::names())
        EXPECT_EQ(cases::by_name(n).name, n);
    EXPECT_THROW(cases::by_name("nope"), config_error);
}

TEST(ErrorL2, ExactAndConstantOffset)
{
    const Mesh m = generate_cartesian(3);
    PiecewisePolynomial p{0, std::vector<Eigen::VectorXd>(m.num_cells(), Eigen::VectorXd::Constant(1, 2.0))};
    EXPECT_NEAR(error_l2(p, [](const Point&) { return 2.0; }, m), 0.0, 1e-15);
    EXPECT_NEAR(error_l2(p, [](const Point&) { return 1.0; }, m), 1.0, 1e-14);
    bool zero = false;
    EXPECT_NEAR(error_l2(p, [](const Point&) { return 0.0; }, m, -1, &zero), 2.0, 1e-14);
    EXPECT_TRUE(zero);
}

TEST(ErrorL2, ProjectedErrorIsBelowTrueError)
{
    const Mesh m = generate_triangular(4);
    const ScalarFunction u = [](const Point& p) { return std::exp(p.x()) * std::sin(2 * p.y()); };
    PiecewisePolynomial proj{1, {}};
    for (std::size_t t = 0; t < m.num_cells(); ++t)
        proj.coefficients.push_back(project_cell(u, m, t, 1, 10));
    EXPECT_LT(projected_error_l2(proj, u, m, 10), 1e-14);
    EXPECT_GT(error_l2(proj, u, m), 1e-4);
}

TEST(Orders, Formula)
{
    EXPECT_NEAR(observed_order(4e-2, 1e-2, 0.2, 0.1), 2.0, 1e-14);
    StudyReport rep;
    rep.rows = {{0.2, 5, 0, 4e-2, 1e-1}, {0.1, 10, 0, 1e-2, 5e-2}, {0.2, 5, 1, 1e-3, 1e-3}};
    rep.compute_orders();
    EXPECT_TRUE(std::isnan(rep.rows[0].order_psi));
    EXPECT_NEAR(rep.rows[1].order_psi, 2.0, 1e-14);
    EXPECT_NEAR(rep.rows[1].order_omega, 1.0, 1e-14);
    EXPECT_TRUE(std::isnan(rep.rows[2].order_omega));
}

TEST(Csv, RoundTrip)
{
    StudyReport rep;
    rep.rows = {{0.1 / 3, 16, 2, 1.0 / 7, not_available, 2.0000001, not_available, 17, 0.5, 1e-3}};
    std::stringstream ss;
    rep.write_csv(ss);
    EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), StudyReport::header);
    const StudyReport back = StudyReport::read_csv(ss);
    ASSERT_EQ(back.rows.size(), 1u);
    const StudyRow &a = rep.rows[0], &b = back.rows[0];
    EXPECT_EQ(a.h, b.h);
    EXPECT_EQ(a.n, b.n);
    EXPECT_EQ(a.k, b.k);
    EXPECT_EQ(a.err_psi, b.err_psi);
    EXPECT_TRUE(std::isnan(b.err_omega));
    EXPECT_EQ(a.order_psi, b.order_psi);
    EXPECT_EQ(a.iters, b.iters);
    EXPECT_EQ(a.iter_s, b.iter_s);
    EXPECT_FALSE(b.alpha);
}

TEST(Csv, AlphaColumnRoundTrip)
{
    StudyReport rep;
    rep.rows = {{0.1, 8, 1, 1e-3, 1e-2}, {0.1, 8, 1, 1e-3, 1e-2}};
    rep.rows[0].alpha = 0;
    rep.rows[1].alpha = 4;
    std::stringstream ss;
    rep.write_csv(ss);
    const StudyReport back = StudyReport::read_csv(ss);
    ASSERT_EQ(back.rows.size(), 2u);
    EXPECT_EQ(back.rows[0].alpha, 0u);
    EXPECT_EQ(back.rows[1].alpha, 4u);
}

TEST(Csv, MalformedInputs)
{
    std::stringstream empty;
    EXPECT_THROW(StudyReport::read_csv(empty), parse_error);
    std::stringstream bad_header("a,b\n");
    EXPECT_THROW(StudyReport::read_csv(bad_header), parse_error);
    std::stringstream short_row(std::string(StudyReport::header) + "\n1,2,3\n");
    try {
        StudyReport::read_csv(short_row);
        FAIL();
    } catch (const parse_error& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    std::stringstream bad_number(std::string(StudyReport::header) + "\n1,2,3,x,5,6,7,8,9,10\n");
    EXPECT_THROW(StudyReport::read_csv(bad_number), parse_error);
}

TEST(Csv, HistoryColumns)
{
    StudyReport rep;
    rep.rows.resize(2);
    rep.rows[0].alpha = 0;
    rep.rows[1].alpha = 2;
    rep.histories = {{1.0, 0.5, 0.25}, {1.0, 0.125}};
    std::stringstream ss;
    rep.write_history_csv(ss);
    EXPECT_EQ(ss.str(), "Iter,No,P2\n0,1,1\n1,0.5,0.125\n2,0.25,\n");
}

TEST(MeshSpec, Parsing)
{
    EXPECT_EQ(MeshSpec::parse("cartesian").make(3)->num_cells(), 9u);
    EXPECT_EQ(MeshSpec::parse("tri").make(3)->num_cells(), 18u);
    EXPECT_THROW(MeshSpec::parse("hex"), config_error);
    EXPECT_THROW(MeshSpec::parse("file:"), config_error);

    const auto path = std::filesystem::temp_directory_path() / "hhosplit_meshspec_test.mesh";
    {
        std::ofstream os(path);
        write_mesh(os, generate_triangular(2));
    }
    EXPECT_EQ(MeshSpec::parse("file:" + path.string()).make(99)->num_cells(), 8u);
    std::filesystem::remove(path);
}

TEST(Studies, RejectWrongCaseKind)
{
    StudyOptions opt;
    EXPECT_THROW(normal_derivative_study(cases::exponential(), opt), config_error);
    EXPECT_THROW(biharmonic_study(cases::sine(), opt), config_error);
    opt.ks = {0, 1};
    EXPECT_THROW(preconditioner_benchmark(cases::exponential(), opt, {2}), config_error);
}

TEST(Studies, DeterministicReruns)
{
    StudyOptions opt;
    opt.ks = {1};
    opt.ns = {4, 8};
    const StudyReport a = biharmonic_study(cases::exponential(), opt);
    const StudyReport b = biharmonic_study(cases::exponential(), opt);
    ASSERT_EQ(a.rows.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(a.rows[i].err_psi, b.rows[i].err_psi);
        EXPECT_EQ(a.rows[i].err_omega, b.rows[i].err_omega);
        EXPECT_EQ(a.rows[i].iters, b.rows[i].iters);
    }
    EXPECT_FALSE(std::isnan(a.rows[1].order_psi));
}

TEST(Studies, BenchmarkRowsAndHistories)
{
    StudyOptions opt;
    opt.ks = {0};
    opt.ns = {8};
    const StudyReport rep = preconditioner_benchmark(cases::exponential(), opt, {1, 3});
    ASSERT_EQ(rep.rows.size(), 3u);
    ASSERT_EQ(rep.histories.size(), 3u);
    EXPECT_EQ(rep.rows[0].alpha, 0u);
    EXPECT_EQ(rep.rows[2].alpha, 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(rep.histories[i].size(), rep.rows[i].iters + 1);
        EXPECT_NEAR(rep.rows[i].err_psi, rep.rows[0].err_psi, 1e-6 * rep.rows[0].err_psi);
    }
}
