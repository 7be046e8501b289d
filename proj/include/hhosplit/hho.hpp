#pragma once

// Hybrid High-Order discretisation of the Dirichlet Laplacian: local
// reconstruction and stabilisation, cell recovery, static condensation and
// the condensed global solve.

#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "basis.hpp"
#include "errors.hpp"
#include "krylov.hpp"
#include "mesh.hpp"
#include "quadrature.hpp"
#include "spaces.hpp"

namespace hhosplit {

enum class Stabilization
{
    classic, ///< face-cell difference operators, any l
    simple,  ///< projected jump pi_F^k(v_T - v_F), l = k+1 only
};

/// Local DoFs of a cell are ordered [cell block | face 0 | face 1 | ...]
/// following Cell::faces.
struct LocalLayout
{
    Eigen::Index cell_dofs = 0;
    Eigen::Index face_dofs = 0;
    Eigen::Index num_faces = 0;

    LocalLayout() = default;
    LocalLayout(const Mesh& mesh, std::size_t t, int k, int l)
        : cell_dofs(Eigen::Index(cell_basis_size(l))), face_dofs(Eigen::Index(face_basis_size(k))),
          num_faces(Eigen::Index(mesh.cell(t).faces.size()))
    {}

    Eigen::Index total() const { return cell_dofs + num_faces * face_dofs; }
    Eigen::Index skeleton() const { return num_faces * face_dofs; }
    Eigen::Index face_offset(Eigen::Index i) const { return cell_dofs + i * face_dofs; }
};

namespace detail {

// Geometric data shared by the local operators of one cell.
struct CellContext
{
    const Mesh& mesh;
    std::size_t t;
    int k, l;
    LocalLayout layout;
    CellBasis rec_basis; // P^{k+1}(T); its first layout.cell_dofs functions span P^l(T)
    Quadrature quad;
    std::vector<FaceBasis> face_bases;
    std::vector<Quadrature> face_quads;

    CellContext(const Mesh& m, std::size_t t_, int k_, int l_)
        : mesh(m), t(t_), k(k_), l(l_), layout(m, t_, k_, l_), rec_basis(m, t_, k_ + 1),
          quad(cell_quadrature(m, t_, default_quadrature_order(k_)))
    {
        for (auto f : m.cell(t).faces) {
            face_bases.emplace_back(m, f, k);
            face_quads.push_back(face_quadrature(m, f, default_quadrature_order(k)));
        }
    }

    Eigen::MatrixXd cell_selector() const
    {
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(layout.cell_dofs, layout.total());
        e.leftCols(layout.cell_dofs).setIdentity();
        return e;
    }

    Eigen::MatrixXd face_selector(Eigen::Index i) const
    {
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(layout.face_dofs, layout.total());
        e.middleCols(layout.face_offset(i), layout.face_dofs).setIdentity();
        return e;
    }

    Eigen::MatrixXd face_mass(Eigen::Index i) const { return mass_matrix(face_bases[i], face_quads[i]); }

    // (chi_a, phi_b)_F for face basis chi and the first `n` reconstruction functions.
    Eigen::MatrixXd face_cell_mass(Eigen::Index i, Eigen::Index n) const
    {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(layout.face_dofs, n);
        for (const auto& qp : face_quads[i])
            m.noalias() += qp.weight * face_bases[i].eval(qp.point) * rec_basis.eval(qp.point).head(n).transpose();
        return m;
    }

    // pi_F^k(v_T) - v_F as a map from local DoFs to face coefficients.
    Eigen::MatrixXd projected_jump(Eigen::Index i) const
    {
        Eigen::LLT<Eigen::MatrixXd> mf(face_mass(i));
        return mf.solve(face_cell_mass(i, layout.cell_dofs)) * cell_selector() - face_selector(i);
    }
};

struct Reconstruction
{
    Eigen::MatrixXd operator_;  // dim P^{k+1} x total
    Eigen::MatrixXd consistency; // (grad p v, grad p w)_T
};

inline Reconstruction reconstruct_local(const CellContext& ctx)
{
    const auto& lay = ctx.layout;
    const Eigen::Index r = Eigen::Index(ctx.rec_basis.size());
    const Eigen::Index nc = lay.cell_dofs;

    Eigen::MatrixXd stiff = Eigen::MatrixXd::Zero(r, r);
    Eigen::VectorXd means = Eigen::VectorXd::Zero(r);
    for (const auto& qp : ctx.quad) {
        const Eigen::MatrixX2d g = ctx.rec_basis.grad(qp.point);
        stiff.noalias() += qp.weight * g * g.transpose();
        means += qp.weight * ctx.rec_basis.eval(qp.point);
    }

    // Right-hand side of the gradient equation, integrated by parts on the
    // cell term: (grad v_T, grad q)_T - <v_T, grad q.n>_dT + <v_F, grad q.n>_dT.
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(r, lay.total());
    rhs.leftCols(nc) = stiff.leftCols(nc);
    const auto& faces = ctx.mesh.cell(ctx.t).faces;
    for (Eigen::Index i = 0; i < lay.num_faces; ++i) {
        const Point n = ctx.mesh.outward_normal(ctx.t, faces[std::size_t(i)]);
        for (const auto& qp : ctx.face_quads[std::size_t(i)]) {
            const Eigen::VectorXd gn = ctx.rec_basis.grad(qp.point) * n;
            const Eigen::VectorXd phi = ctx.rec_basis.eval(qp.point).head(nc);
            const Eigen::VectorXd chi = ctx.face_bases[std::size_t(i)].eval(qp.point);
            rhs.leftCols(nc).noalias() -= qp.weight * gn * phi.transpose();
            rhs.middleCols(lay.face_offset(i), lay.face_dofs).noalias() += qp.weight * gn * chi.transpose();
        }
    }

    // Gradient system on the non-constant functions, then fix the mean.
    const Eigen::MatrixXd k11 = stiff.bottomRightCorner(r - 1, r - 1);
    Eigen::LLT<Eigen::MatrixXd> llt(k11);
    if (llt.info() != Eigen::Success)
        throw conditioning_error("reconstruction stiffness matrix is singular on cell " + std::to_string(ctx.t));
    const Eigen::MatrixXd grad_part = llt.solve(rhs.bottomRows(r - 1));

    Reconstruction out;
    out.operator_.resize(r, lay.total());
    out.operator_.bottomRows(r - 1) = grad_part;
    Eigen::RowVectorXd row0 = Eigen::RowVectorXd::Zero(lay.total());
    row0.head(nc) = means.head(nc).transpose();
    row0 -= means.tail(r - 1).transpose() * grad_part;
    out.operator_.row(0) = row0 / means(0);
    out.consistency = grad_part.transpose() * k11 * grad_part;
    return out;
}

inline Eigen::MatrixXd stabilization_classic(const CellContext& ctx, const Eigen::MatrixXd& rec)
{
    const auto& lay = ctx.layout;
    const Eigen::Index r = Eigen::Index(ctx.rec_basis.size());
    const Eigen::Index nc = lay.cell_dofs;
    const Eigen::MatrixXd mass = mass_matrix(ctx.rec_basis, ctx.quad);

    // delta_T = pi_T^l(p v - v_T), in P^l coefficients.
    Eigen::LLT<Eigen::MatrixXd> mll(mass.topLeftCorner(nc, nc));
    const Eigen::MatrixXd delta_t = mll.solve(mass.topRows(nc) * rec) - ctx.cell_selector();

    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(lay.total(), lay.total());
    const auto& faces = ctx.mesh.cell(ctx.t).faces;
    for (Eigen::Index i = 0; i < lay.num_faces; ++i) {
        Eigen::LLT<Eigen::MatrixXd> mf(ctx.face_mass(i));
        const Eigen::MatrixXd delta_tf = mf.solve(ctx.face_cell_mass(i, r) * rec) - ctx.face_selector(i);
        const double hf = ctx.mesh.face(faces[std::size_t(i)]).diameter();
        for (const auto& qp : ctx.face_quads[std::size_t(i)]) {
            const Eigen::RowVectorXd d = ctx.face_bases[std::size_t(i)].eval(qp.point).transpose() * delta_tf -
                                         ctx.rec_basis.eval(qp.point).head(nc).transpose() * delta_t;
            s.noalias() += (qp.weight / hf) * d.transpose() * d;
        }
    }
    return s;
}

inline Eigen::MatrixXd stabilization_simple(const CellContext& ctx)
{
    if (ctx.l != ctx.k + 1)
        throw config_error("the simple stabilization requires l = k + 1");
    const auto& lay = ctx.layout;
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(lay.total(), lay.total());
    const auto& faces = ctx.mesh.cell(ctx.t).faces;
    for (Eigen::Index i = 0; i < lay.num_faces; ++i) {
        const Eigen::MatrixXd d = ctx.projected_jump(i);
        const double hf = ctx.mesh.face(faces[std::size_t(i)]).diameter();
        s.noalias() += (1.0 / hf) * d.transpose() * ctx.face_mass(i) * d;
    }
    return s;
}

inline void check_degrees(int k, int l)
{
    if (k < 0 || (l != k && l != k + 1))
        throw config_error("invalid degrees: need k >= 0 and l in {k, k+1}");
}

} // namespace detail

/// Reconstruction matrix: local hybrid DoFs to P^{k+1}(T) coefficients.
inline Eigen::MatrixXd local_reconstruction(const Mesh& mesh, std::size_t t, int k, int l)
{
    detail::check_degrees(k, l);
    return detail::reconstruct_local(detail::CellContext(mesh, t, k, l)).operator_;
}

inline Eigen::MatrixXd local_stab(const Mesh& mesh, std::size_t t, int k, int l)
{
    detail::check_degrees(k, l);
    const detail::CellContext ctx(mesh, t, k, l);
    return detail::stabilization_classic(ctx, detail::reconstruct_local(ctx).operator_);
}

inline Eigen::MatrixXd local_stab_simple(const Mesh& mesh, std::size_t t, int k, int l)
{
    detail::check_degrees(k, l);
    return detail::stabilization_simple(detail::CellContext(mesh, t, k, l));
}

/// Local matrices of one cell.
struct LocalOperators
{
    LocalLayout layout;
    Eigen::MatrixXd reconstruction; ///< local DoFs -> P^{k+1}(T)
    Eigen::MatrixXd a;              ///< consistency + stabilization
    Eigen::LLT<Eigen::MatrixXd> cell_block; ///< factor of the cell-cell block of a
    Eigen::MatrixXd recovery;       ///< face DoFs -> cell DoFs
    Eigen::MatrixXd schur;          ///< condensed block on face DoFs
    Eigen::MatrixXd cell_mass;      ///< Gram matrix of P^l(T)
    Eigen::MatrixXd stab_gram;      ///< local matrix of the boundary-stabilized inner product

    /// [recovery; I]: face DoFs -> full local DoFs.
    Eigen::MatrixXd theta() const
    {
        Eigen::MatrixXd th(layout.total(), layout.skeleton());
        th.topRows(layout.cell_dofs) = recovery;
        th.bottomRows(layout.skeleton()).setIdentity();
        return th;
    }
};

inline LocalOperators make_local_operators(const Mesh& mesh, std::size_t t, int k, int l, Stabilization stab)
{
    detail::check_degrees(k, l);
    const detail::CellContext ctx(mesh, t, k, l);
    const auto& lay = ctx.layout;
    const Eigen::Index nc = lay.cell_dofs, ns = lay.skeleton();

    LocalOperators op;
    op.layout = lay;
    auto rec = detail::reconstruct_local(ctx);
    op.reconstruction = std::move(rec.operator_);
    op.a = rec.consistency + (stab == Stabilization::simple ? detail::stabilization_simple(ctx)
                                                            : detail::stabilization_classic(ctx, op.reconstruction));
    op.a = 0.5 * (op.a + op.a.transpose()).eval();

    op.cell_block.compute(op.a.topLeftCorner(nc, nc));
    if (op.cell_block.info() != Eigen::Success)
        throw conditioning_error("cell block of the local matrix is not SPD on cell " + std::to_string(t));
    op.recovery = -op.cell_block.solve(op.a.topRightCorner(nc, ns));
    op.schur = op.a.bottomRightCorner(ns, ns) + op.a.bottomLeftCorner(ns, nc) * op.recovery;
    op.schur = 0.5 * (op.schur + op.schur.transpose()).eval();

    const Eigen::MatrixXd mass = mass_matrix(ctx.rec_basis, ctx.quad);
    op.cell_mass = mass.topLeftCorner(nc, nc);

    op.stab_gram = Eigen::MatrixXd::Zero(lay.total(), lay.total());
    op.stab_gram.topLeftCorner(nc, nc) = op.cell_mass;
    if (mesh.cell(t).on_boundary) {
        const auto& faces = mesh.cell(t).faces;
        for (Eigen::Index i = 0; i < lay.num_faces; ++i) {
            const Eigen::MatrixXd d = ctx.projected_jump(i);
            const double hf = mesh.face(faces[std::size_t(i)]).diameter();
            op.stab_gram.noalias() += hf * d.transpose() * ctx.face_mass(i) * d;
        }
    }
    return op;
}

class CondensedSystem;

/// Condensed Dirichlet problem on a set of cells.
///
/// Faces of the cells are split into free faces (unknowns), trace faces
/// (prescribed values, where normal derivatives are evaluated) and the
/// remaining faces, which are held at zero. Local face numbering puts the
/// free faces first, then the trace faces.
class Subdomain
{
public:
    /// Values of a discrete field on the subdomain.
    struct Field
    {
        Eigen::VectorXd cells; ///< cell blocks in subdomain cell order
        Eigen::VectorXd faces; ///< face blocks in local face order
    };

    Subdomain(const CondensedSystem& sys, std::vector<std::size_t> cells, std::vector<std::size_t> free_faces,
              std::vector<std::size_t> trace_faces, std::size_t dense_below);

    const std::vector<std::size_t>& cells() const { return cells_; }
    const std::vector<std::size_t>& free_faces() const { return free_faces_; }
    const std::vector<std::size_t>& trace_faces() const { return trace_faces_; }
    Eigen::Index free_dofs() const { return Eigen::Index(free_faces_.size()) * fd_; }
    Eigen::Index trace_dofs() const { return Eigen::Index(trace_faces_.size()) * fd_; }

    /// Condensed load: sum over cells of theta_T^T l_T, over free+trace DoFs.
    /// An empty `loads` means zero load.
    Eigen::VectorXd condense(const std::vector<Eigen::VectorXd>& loads) const;

    Field solve(const Eigen::VectorXd& condensed, const std::vector<Eigen::VectorXd>& loads,
                const Eigen::VectorXd& trace) const;

    /// Moments (K u - r) on the trace DoFs.
    Eigen::VectorXd flux_moments(const Field& u, const Eigen::VectorXd& condensed) const;

    /// Full local DoF vector of the i-th subdomain cell.
    Eigen::VectorXd local_values(const Field& u, std::size_t i) const;

    const SparseMatrix& free_matrix() const { return k_ff_; }

private:
    const CondensedSystem& sys_;
    Eigen::Index fd_;
    std::vector<std::size_t> cells_, free_faces_, trace_faces_;
    std::vector<std::vector<std::size_t>> cell_faces_; // local face index or no_owner
    SparseMatrix k_ff_, k_ft_, k_tf_, k_tt_;
    SpdSolver solver_;
};

/// All local operators of a mesh plus the factorised condensed system with
/// Dirichlet conditions on every boundary face.
class CondensedSystem
{
public:
    CondensedSystem(std::shared_ptr<const Mesh> mesh, int k, int l, Stabilization stab = Stabilization::classic)
        : mesh_(std::move(mesh)), k_(k), l_(l), stab_(stab)
    {
        detail::check_degrees(k, l);
        if (stab == Stabilization::simple && l != k + 1)
            throw config_error("the simple stabilization requires l = k + 1");
        locals_.reserve(mesh_->num_cells());
        for (std::size_t t = 0; t < mesh_->num_cells(); ++t)
            locals_.push_back(make_local_operators(*mesh_, t, k, l, stab));
        for (auto f : mesh_->boundary_faces()) {
            const FaceBasis b(*mesh_, f, k);
            boundary_mass_.push_back(mass_matrix(b, face_quadrature(*mesh_, f, default_quadrature_order(k))));
            boundary_mass_llt_.emplace_back(boundary_mass_.back());
        }

        std::vector<std::size_t> all(mesh_->num_cells()), interior;
        for (std::size_t t = 0; t < all.size(); ++t)
            all[t] = t;
        for (std::size_t f = 0; f < mesh_->num_faces(); ++f)
            if (!mesh_->face(f).on_boundary)
                interior.push_back(f);
        global_ = std::make_unique<Subdomain>(*this, std::move(all), std::move(interior), mesh_->boundary_faces(), 0);
    }

    CondensedSystem(const CondensedSystem&) = delete;
    CondensedSystem& operator=(const CondensedSystem&) = delete;

    const Mesh& mesh() const { return *mesh_; }
    std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
    int k() const { return k_; }
    int l() const { return l_; }
    Stabilization stabilization() const { return stab_; }
    Eigen::Index face_dofs() const { return Eigen::Index(face_basis_size(k_)); }
    Eigen::Index cell_dofs() const { return Eigen::Index(cell_basis_size(l_)); }

    const LocalOperators& local(std::size_t t) const { return locals_[t]; }
    const Subdomain& global() const { return *global_; }

    /// Mass matrix of boundary face i (boundary numbering) and its factor.
    const Eigen::MatrixXd& boundary_mass(std::size_t i) const { return boundary_mass_[i]; }
    const Eigen::LLT<Eigen::MatrixXd>& boundary_mass_factor(std::size_t i) const { return boundary_mass_llt_[i]; }

    /// Local DoF vector of cell t extracted from a global hybrid vector.
    Eigen::VectorXd gather(const HybridVector& v, std::size_t t) const
    {
        const auto& lay = locals_[t].layout;
        Eigen::VectorXd x(lay.total());
        x.head(lay.cell_dofs) = v.cell_block(t);
        const auto& faces = mesh_->cell(t).faces;
        for (std::size_t i = 0; i < faces.size(); ++i)
            x.segment(lay.face_offset(Eigen::Index(i)), lay.face_dofs) = v.face_block(faces[i]);
        return x;
    }

    /// Full (uncondensed) local loads for a cell source term: ((f, phi)_T, 0).
    std::vector<Eigen::VectorXd> source_loads(const ScalarFunction& f) const
    {
        std::vector<Eigen::VectorXd> loads(mesh_->num_cells());
        for (std::size_t t = 0; t < loads.size(); ++t) {
            const auto& lay = locals_[t].layout;
            loads[t] = Eigen::VectorXd::Zero(lay.total());
            const CellBasis basis(*mesh_, t, l_);
            loads[t].head(lay.cell_dofs) =
                load_vector(basis, cell_quadrature(*mesh_, t, default_quadrature_order(k_)), f);
        }
        return loads;
    }

    /// Loads for the L2 product with the cell part of w: ((w_T, phi)_T, 0).
    std::vector<Eigen::VectorXd> mass_loads(const HybridVector& w) const
    {
        std::vector<Eigen::VectorXd> loads(mesh_->num_cells());
        for (std::size_t t = 0; t < loads.size(); ++t) {
            const auto& lay = locals_[t].layout;
            loads[t] = Eigen::VectorXd::Zero(lay.total());
            loads[t].head(lay.cell_dofs) = locals_[t].cell_mass * w.cell_block(t);
        }
        return loads;
    }

    /// Loads for the boundary-stabilized inner product with w.
    std::vector<Eigen::VectorXd> stab_loads(const HybridVector& w) const
    {
        std::vector<Eigen::VectorXd> loads(mesh_->num_cells());
        for (std::size_t t = 0; t < loads.size(); ++t)
            loads[t] = locals_[t].stab_gram * gather(w, t);
        return loads;
    }

    /// Face-wise L2 projection of g on the boundary faces.
    TraceVector boundary_projection(const ScalarFunction& g) const
    {
        TraceVector tv(*mesh_, k_);
        const auto& bf = mesh_->boundary_faces();
        for (std::size_t i = 0; i < bf.size(); ++i)
            tv.block(i) = project_face(g, *mesh_, bf[i], k_, default_quadrature_order(k_));
        return tv;
    }

    /// Solves a_h(u, v) = sum_T l_T(v_T) for all v vanishing on the boundary,
    /// with boundary face values given by `trace`.
    HybridVector solve(const std::vector<Eigen::VectorXd>& loads, const TraceVector& trace) const
    {
        const Eigen::VectorXd r = global_->condense(loads);
        return to_hybrid(global_->solve(r, loads, trace.values));
    }

    /// Moments of the discrete normal derivative of u for the given loads, in
    /// boundary-face order: (K u_F - r) restricted to boundary DoFs.
    Eigen::VectorXd flux_moments(const HybridVector& u, const std::vector<Eigen::VectorXd>& loads) const
    {
        return global_->flux_moments(to_field(u), global_->condense(loads));
    }

    /// Applies the inverse boundary mass matrix block by block.
    Eigen::VectorXd moments_to_coefficients(const Eigen::VectorXd& moments) const
    {
        Eigen::VectorXd c(moments.size());
        const Eigen::Index fd = face_dofs();
        for (std::size_t i = 0; i < boundary_mass_.size(); ++i)
            c.segment(Eigen::Index(i) * fd, fd) = boundary_mass_llt_[i].solve(moments.segment(Eigen::Index(i) * fd, fd));
        return c;
    }

    Eigen::VectorXd coefficients_to_moments(const Eigen::VectorXd& coefficients) const
    {
        Eigen::VectorXd m(coefficients.size());
        const Eigen::Index fd = face_dofs();
        for (std::size_t i = 0; i < boundary_mass_.size(); ++i)
            m.segment(Eigen::Index(i) * fd, fd) = boundary_mass_[i] * coefficients.segment(Eigen::Index(i) * fd, fd);
        return m;
    }

    /// Moments (g, phi) of g against every boundary face basis function.
    Eigen::VectorXd boundary_moments(const ScalarFunction& g) const
    {
        const Eigen::Index fd = face_dofs();
        const auto& bf = mesh_->boundary_faces();
        Eigen::VectorXd m(Eigen::Index(bf.size()) * fd);
        for (std::size_t i = 0; i < bf.size(); ++i)
            m.segment(Eigen::Index(i) * fd, fd) = load_vector(
                FaceBasis(*mesh_, bf[i], k_), face_quadrature(*mesh_, bf[i], default_quadrature_order(k_)), g);
        return m;
    }

    HybridVector to_hybrid(const Subdomain::Field& u) const
    {
        HybridVector h(*mesh_, k_, l_);
        h.cells = u.cells;
        const Eigen::Index fd = face_dofs();
        const auto& fr = global_->free_faces();
        const auto& tr = global_->trace_faces();
        for (std::size_t i = 0; i < fr.size(); ++i)
            h.face_block(fr[i]) = u.faces.segment(Eigen::Index(i) * fd, fd);
        for (std::size_t i = 0; i < tr.size(); ++i)
            h.face_block(tr[i]) = u.faces.segment(Eigen::Index(fr.size() + i) * fd, fd);
        return h;
    }

    Subdomain::Field to_field(const HybridVector& h) const
    {
        Subdomain::Field u;
        u.cells = h.cells;
        const Eigen::Index fd = face_dofs();
        const auto& fr = global_->free_faces();
        const auto& tr = global_->trace_faces();
        u.faces.resize(Eigen::Index(fr.size() + tr.size()) * fd);
        for (std::size_t i = 0; i < fr.size(); ++i)
            u.faces.segment(Eigen::Index(i) * fd, fd) = h.face_block(fr[i]);
        for (std::size_t i = 0; i < tr.size(); ++i)
            u.faces.segment(Eigen::Index(fr.size() + i) * fd, fd) = h.face_block(tr[i]);
        return u;
    }

    /// Condensed matrix over all face DoFs in global face order.
    SparseMatrix condensed_matrix() const
    {
        const Eigen::Index fd = face_dofs();
        std::vector<Eigen::Triplet<double>> trip;
        for (std::size_t t = 0; t < mesh_->num_cells(); ++t) {
            const auto& faces = mesh_->cell(t).faces;
            const auto& s = locals_[t].schur;
            for (std::size_t i = 0; i < faces.size(); ++i)
                for (std::size_t j = 0; j < faces.size(); ++j)
                    for (Eigen::Index a = 0; a < fd; ++a)
                        for (Eigen::Index b = 0; b < fd; ++b)
                            trip.emplace_back(Eigen::Index(faces[i]) * fd + a, Eigen::Index(faces[j]) * fd + b,
                                              s(Eigen::Index(i) * fd + a, Eigen::Index(j) * fd + b));
        }
        const Eigen::Index n = Eigen::Index(mesh_->num_faces()) * fd;
        SparseMatrix m(n, n);
        m.setFromTriplets(trip.begin(), trip.end());
        return m;
    }

private:
    std::shared_ptr<const Mesh> mesh_;
    int k_, l_;
    Stabilization stab_;
    std::vector<LocalOperators> locals_;
    std::vector<Eigen::MatrixXd> boundary_mass_;
    std::vector<Eigen::LLT<Eigen::MatrixXd>> boundary_mass_llt_;
    std::unique_ptr<Subdomain> global_;
};

inline Subdomain::Subdomain(const CondensedSystem& sys, std::vector<std::size_t> cells,
                            std::vector<std::size_t> free_faces, std::vector<std::size_t> trace_faces,
                            std::size_t dense_below)
    : sys_(sys), fd_(sys.face_dofs()), cells_(std::move(cells)), free_faces_(std::move(free_faces)),
      trace_faces_(std::move(trace_faces))
{
    const Mesh& mesh = sys.mesh();
    // Sorted (global face, local face) pairs for lookup.
    std::vector<std::pair<std::size_t, std::size_t>> lookup;
    lookup.reserve(free_faces_.size() + trace_faces_.size());
    for (std::size_t i = 0; i < free_faces_.size(); ++i)
        lookup.emplace_back(free_faces_[i], i);
    for (std::size_t i = 0; i < trace_faces_.size(); ++i)
        lookup.emplace_back(trace_faces_[i], free_faces_.size() + i);
    std::sort(lookup.begin(), lookup.end());
    auto find = [&](std::size_t f) {
        auto it = std::lower_bound(lookup.begin(), lookup.end(), std::make_pair(f, std::size_t(0)));
        return (it != lookup.end() && it->first == f) ? it->second : no_owner;
    };

    const Eigen::Index nfree = free_dofs();
    std::vector<Eigen::Triplet<double>> ff, ft, tt;
    cell_faces_.resize(cells_.size());
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        const auto& faces = mesh.cell(cells_[c]).faces;
        auto& lf = cell_faces_[c];
        lf.resize(faces.size());
        for (std::size_t i = 0; i < faces.size(); ++i)
            lf[i] = find(faces[i]);
        const auto& s = sys.local(cells_[c]).schur;
        for (std::size_t i = 0; i < faces.size(); ++i) {
            if (lf[i] == no_owner)
                continue;
            for (std::size_t j = 0; j < faces.size(); ++j) {
                if (lf[j] == no_owner)
                    continue;
                for (Eigen::Index a = 0; a < fd_; ++a)
                    for (Eigen::Index b = 0; b < fd_; ++b) {
                        const double v = s(Eigen::Index(i) * fd_ + a, Eigen::Index(j) * fd_ + b);
                        const Eigen::Index row = Eigen::Index(lf[i]) * fd_ + a;
                        const Eigen::Index col = Eigen::Index(lf[j]) * fd_ + b;
                        if (row < nfree && col < nfree)
                            ff.emplace_back(row, col, v);
                        else if (row < nfree)
                            ft.emplace_back(row, col - nfree, v);
                        else if (col >= nfree)
                            tt.emplace_back(row - nfree, col - nfree, v);
                    }
            }
        }
    }
    const Eigen::Index ntrace = trace_dofs();
    k_ff_.resize(nfree, nfree);
    k_ff_.setFromTriplets(ff.begin(), ff.end());
    k_ft_.resize(nfree, ntrace);
    k_ft_.setFromTriplets(ft.begin(), ft.end());
    k_tf_ = k_ft_.transpose();
    k_tt_.resize(ntrace, ntrace);
    k_tt_.setFromTriplets(tt.begin(), tt.end());
    try {
        solver_ = SpdSolver(k_ff_, dense_below);
    } catch (const not_spd_error& e) {
        throw not_spd_error(std::string("condensed system assembly: ") + e.what());
    }
}

inline Eigen::VectorXd Subdomain::condense(const std::vector<Eigen::VectorXd>& loads) const
{
    Eigen::VectorXd r = Eigen::VectorXd::Zero(free_dofs() + trace_dofs());
    if (loads.empty())
        return r;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        const auto& op = sys_.local(cells_[c]);
        const auto& lay = op.layout;
        const Eigen::VectorXd& l = loads[c];
        // theta^T l = recovery^T l_T + l_F
        const Eigen::VectorXd local = op.recovery.transpose() * l.head(lay.cell_dofs) + l.tail(lay.skeleton());
        for (std::size_t i = 0; i < cell_faces_[c].size(); ++i)
            if (cell_faces_[c][i] != no_owner)
                r.segment(Eigen::Index(cell_faces_[c][i]) * fd_, fd_) += local.segment(Eigen::Index(i) * fd_, fd_);
    }
    return r;
}

inline Subdomain::Field Subdomain::solve(const Eigen::VectorXd& condensed, const std::vector<Eigen::VectorXd>& loads,
                                         const Eigen::VectorXd& trace) const
{
    const Eigen::Index nfree = free_dofs();
    Field u;
    u.faces.resize(nfree + trace_dofs());
    u.faces.tail(trace_dofs()) = trace;
    u.faces.head(nfree) = solver_.solve(condensed.head(nfree) - k_ft_ * trace);

    const Eigen::Index nc = sys_.cell_dofs();
    u.cells.resize(Eigen::Index(cells_.size()) * nc);
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        const auto& op = sys_.local(cells_[c]);
        Eigen::VectorXd cell = op.recovery * local_values(u, c).tail(op.layout.skeleton());
        if (!loads.empty())
            cell += op.cell_block.solve(loads[c].head(nc));
        u.cells.segment(Eigen::Index(c) * nc, nc) = cell;
    }
    return u;
}

inline Eigen::VectorXd Subdomain::flux_moments(const Field& u, const Eigen::VectorXd& condensed) const
{
    const Eigen::Index nfree = free_dofs();
    return k_tf_ * u.faces.head(nfree) + k_tt_ * u.faces.tail(trace_dofs()) - condensed.tail(trace_dofs());
}

inline Eigen::VectorXd Subdomain::local_values(const Field& u, std::size_t c) const
{
    const auto& lay = sys_.local(cells_[c]).layout;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(lay.total());
    if (u.cells.size() > 0)
        x.head(lay.cell_dofs) = u.cells.segment(Eigen::Index(c) * lay.cell_dofs, lay.cell_dofs);
    for (std::size_t i = 0; i < cell_faces_[c].size(); ++i)
        if (cell_faces_[c][i] != no_owner)
            x.segment(lay.face_offset(Eigen::Index(i)), fd_) = u.faces.segment(Eigen::Index(cell_faces_[c][i]) * fd_, fd_);
    return x;
}

/// Assembles all local operators and factors the condensed system.
inline std::shared_ptr<const CondensedSystem> assemble(std::shared_ptr<const Mesh> mesh, int k, int l,
                                                       Stabilization stab = Stabilization::classic)
{
    return std::make_shared<const CondensedSystem>(std::move(mesh), k, l, stab);
}

/// Dirichlet Poisson problem -Lap u = f, u = gD.
inline HybridVector solve_poisson(const CondensedSystem& sys, const ScalarFunction& f, const ScalarFunction& gD)
{
    return sys.solve(sys.source_loads(f), sys.boundary_projection(gD));
}

/// Post-processed potential p_h^{k+1} u.
inline PiecewisePolynomial reconstruct(const CondensedSystem& sys, const HybridVector& u)
{
    PiecewisePolynomial p;
    p.degree = sys.k() + 1;
    p.coefficients.resize(sys.mesh().num_cells());
    for (std::size_t t = 0; t < p.coefficients.size(); ++t)
        p.coefficients[t] = sys.local(t).reconstruction * sys.gather(u, t);
    return p;
}

/// Local interpolant (pi_T^l w, pi_F^k w).
inline HybridVector interpolate(const Mesh& mesh, int k, int l, const ScalarFunction& w)
{
    HybridVector v(mesh, k, l);
    for (std::size_t t = 0; t < mesh.num_cells(); ++t)
        v.cell_block(t) = project_cell(w, mesh, t, l, default_quadrature_order(k));
    for (std::size_t f = 0; f < mesh.num_faces(); ++f)
        v.face_block(f) = project_face(w, mesh, f, k, default_quadrature_order(k));
    return v;
}

} // namespace hhosplit
