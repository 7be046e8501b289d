// Command-line harness: convergence studies, preconditioner benchmarks and
// mesh utilities.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hhosplit/study.hpp"

using namespace hhosplit;

namespace {

struct Common
{
    std::string mesh = "cartesian";
    std::vector<std::size_t> n;
    std::vector<int> k;
    std::string l = "k";
    std::string stab = "classic";
    double eps = 1e-8;
    std::string out;
    std::string case_name;
};

void add_common(CLI::App* cmd, Common& c, bool lists)
{
    cmd->add_option("--mesh", c.mesh, "cartesian, tri or file:PATH")->capture_default_str();
    if (lists) {
        cmd->add_option("--n", c.n, "mesh resolutions")->capture_default_str();
        cmd->add_option("--k", c.k, "face degrees")->capture_default_str();
    } else {
        cmd->add_option("--n", c.n, "mesh resolution")->expected(1)->capture_default_str();
        cmd->add_option("--k", c.k, "face degree")->expected(1)->capture_default_str();
    }
    cmd->add_option("--l", c.l, "cell degree: k or k+1")->check(CLI::IsMember({"k", "k+1"}))->capture_default_str();
    cmd->add_option("--stab", c.stab, "stabilization")
        ->check(CLI::IsMember({"classic", "simple"}))
        ->capture_default_str();
    cmd->add_option("--eps", c.eps, "outer relative tolerance")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--out", c.out, "CSV output path");
    cmd->add_option("--case", c.case_name, "manufactured case")->check(CLI::IsMember(cases::names()));
}

StudyOptions options(const Common& c)
{
    StudyOptions o;
    o.mesh = MeshSpec::parse(c.mesh);
    o.ns = c.n;
    o.ks = c.k;
    o.l_offset = c.l == "k+1" ? 1 : 0;
    o.stab = c.stab == "simple" ? Stabilization::simple : Stabilization::classic;
    o.eps = c.eps;
    return o;
}

void emit(const StudyReport& rep, const std::string& out)
{
    rep.write_summary(std::cout);
    if (out.empty())
        return;
    std::ofstream os(out);
    if (!os)
        throw config_error("cannot write '" + out + "'");
    rep.write_csv(os);
    std::cout << "wrote " << out << '\n';
}

std::string history_path(const std::string& out)
{
    const auto dot = out.rfind(".csv");
    return (dot != std::string::npos && dot + 4 == out.size() ? out.substr(0, dot) : out) + ".history.csv";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"HHO splitting solver for the biharmonic problem"};
    app.set_config("--config", "", "key=value file overriding defaults");
    app.require_subcommand(1);

    Common nd{.n = {16, 32, 64, 128}, .k = {0, 1, 2}, .case_name = "sine"};
    auto* c_nd = app.add_subcommand("normalder-conv", "convergence of the discrete normal derivative");
    add_common(c_nd, nd, true);

    Common bc{.n = {16, 32, 64}, .k = {0, 1, 2}, .case_name = "exp"};
    unsigned bc_alpha = 0;
    auto* c_bc = app.add_subcommand("biharm-conv", "convergence of the biharmonic solver");
    add_common(c_bc, bc, true);
    c_bc->add_option("--alpha", bc_alpha, "patch layers, 0 for no preconditioner")->capture_default_str();

    Common bs{.n = {32}, .k = {1}, .case_name = "exp"};
    unsigned bs_alpha = 0;
    auto* c_bs = app.add_subcommand("biharm-solve", "single biharmonic solve");
    add_common(c_bs, bs, false);
    c_bs->add_option("--alpha", bs_alpha, "patch layers, 0 for no preconditioner")->capture_default_str();

    Common pb{.n = {32}, .k = {0}, .case_name = "exp"};
    std::vector<unsigned> pb_alpha{2, 4, 6, 8};
    auto* c_pb = app.add_subcommand("precond-bench", "iteration counts with and without preconditioning");
    add_common(c_pb, pb, false);
    c_pb->add_option("--alpha", pb_alpha, "patch layer counts")->capture_default_str();

    std::string mg_mesh = "cartesian", mg_out;
    std::size_t mg_n = 4;
    auto* c_mg = app.add_subcommand("mesh-gen", "write a generated mesh");
    c_mg->add_option("--mesh", mg_mesh, "cartesian or tri")
        ->check(CLI::IsMember({"cartesian", "tri"}))
        ->capture_default_str();
    c_mg->add_option("--n", mg_n, "resolution")->check(CLI::PositiveNumber)->capture_default_str();
    c_mg->add_option("--out", mg_out, "mesh file")->required();

    std::string mi_mesh = "cartesian";
    std::size_t mi_n = 4;
    auto* c_mi = app.add_subcommand("mesh-info", "print mesh statistics");
    c_mi->add_option("--mesh", mi_mesh, "cartesian, tri or file:PATH")->capture_default_str();
    c_mi->add_option("--n", mi_n, "resolution")->check(CLI::PositiveNumber)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_nd->parsed()) {
            emit(normal_derivative_study(cases::by_name(nd.case_name), options(nd)), nd.out);
        } else if (c_bc->parsed()) {
            StudyOptions o = options(bc);
            o.alpha = bc_alpha;
            emit(biharmonic_study(cases::by_name(bc.case_name), o), bc.out);
        } else if (c_bs->parsed()) {
            StudyOptions o = options(bs);
            o.alpha = bs_alpha;
            const auto c = cases::by_name(bs.case_name);
            const BiharmonicRun run = run_biharmonic(c, o, bs.k.at(0), bs.n.at(0));
            const Mesh& mesh = run.system->mesh();
            StudyReport rep;
            StudyRow r;
            r.h = mesh.h();
            r.n = bs.n[0];
            r.k = bs.k[0];
            r.err_psi = error_l2(run.solution.psi_h, c.u, mesh);
            r.err_omega = error_l2(run.solution.omega_h, c.omega, mesh);
            r.iters = run.solution.report.iterations;
            r.setup_s = run.setup_s;
            r.iter_s = run.iter_s;
            rep.rows.push_back(r);
            std::printf("cells %zu, boundary DoFs %zu, relative residual %.3e\n", mesh.num_cells(),
                        std::size_t(run.solution.lambda.size()), run.solution.report.relative_residual);
            emit(rep, bs.out);
        } else if (c_pb->parsed()) {
            const StudyReport rep = preconditioner_benchmark(cases::by_name(pb.case_name), options(pb), pb_alpha);
            emit(rep, pb.out);
            if (!pb.out.empty()) {
                const std::string hp = history_path(pb.out);
                std::ofstream os(hp);
                if (!os)
                    throw config_error("cannot write '" + hp + "'");
                rep.write_history_csv(os);
                std::cout << "wrote " << hp << '\n';
            }
        } else if (c_mg->parsed()) {
            write_mesh(mg_out, *MeshSpec::parse(mg_mesh).make(mg_n));
        } else if (c_mi->parsed()) {
            const auto mesh = MeshSpec::parse(mi_mesh).make(mi_n);
            double area = 0.0;
            for (const auto& c : mesh->cells())
                area += c.measure;
            std::printf("vertices %zu\ncells %zu\nfaces %zu\nboundary faces %zu\nh %.6e\ntotal measure %.15g\n",
                        mesh->vertices().size(), mesh->num_cells(), mesh->num_faces(), mesh->num_boundary_faces(),
                        mesh->h(), area);
        }
    } catch (const convergence_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
