#pragma once

#include "mrhomog/meshgen.hpp"
#include "mrhomog/solver.hpp"
#include "mrhomog/uzawa.hpp"

namespace mrhomog {

//////////////////////////////////////////////////////////////////////////////
// Periodic cell problems on Y = (0,1)^D.
//
// Stokes family: for each constant strain E^ij = sym(e_i (x) e_j), find a
// periodic zero-mean velocity fluctuation w^ij and a fluid pressure pi^ij
// with
//     int_Y D(w^ij) : D(v) + int_{Y_f} pi^ij div v = int_Y E^ij : D(v)
// for all periodic v that are rigid on the inclusion, where w^ij carries the
// inhomogeneous constraint w^ij = E^ij y + (rigid motion) on the solid.
// The interface force and torque balances are natural conditions of this
// reduced form. For i = j the rigid drive pumps net flux |Y_s| through the
// interface, so the divergence constraint is only consistent with
//     div w = c_ij := -|Y_s| delta_ij / |Y_f|   in the fluid
// (a zero-mean pressure multiplier would absorb exactly this constant); the
// compatible value is imposed through the pressure-row targets.
//
// Magnetostatic family (3D): for each drive s e^j find a periodic vector
// correction T^j with (T^j + s e^j).n = 0 on the interface and
//     int_{Y_s} curl T . curl G + int_Y div T div G
//         + gamma_curl int_{Y_f} curl T . curl G = -s int_{Y_s} e^j . curl G
// for all periodic G with G.n = 0 on the interface. The curl-free-in-fluid
// restriction of the test class is realized by the penalty term.
//////////////////////////////////////////////////////////////////////////////

template <int D>
Mat<D> strain_basis(int i, int j) {
    Mat<D> E = Mat<D>::Zero();
    E(i, j) += 0.5;
    E(j, i) += 0.5;
    return E;
}

template <int D>
struct StokesCellSet {
    const Mesh<D>* mesh = nullptr;
    FESpace<D> usp; // order-2 vector Lagrange
    FESpace<D> psp; // order-1 pressure
    std::array<std::array<VectorXd, D>, D> omega;
    std::array<std::array<VectorXd, D>, D> pi;

    // residual records (manifest material)
    double max_solve_residual = 0;
    double max_div_residual = 0;          // weak divergence vs pressure space
    double max_rigid_strain_residual = 0; // |D(U-w) - E| on solid quadrature points
    double max_mean_abs = 0;              // gauge check
    double max_pressure_mean_abs = 0;

    Field<D> omega_field(int i, int j) const { return Field<D>{&usp, omega[i][j]}; }
    Field<D> pi_field(int i, int j) const { return Field<D>{&psp, pi[i][j]}; }
};

/// Solve all d^2 Stokes cell problems (d(d+1)/2 distinct by symmetry of the
/// drive; the mirrored entries reuse the same solution vector).
template <int D>
StokesCellSet<D> solve_stokes_cells(const Mesh<D>& mesh) {
    StokesCellSet<D> out;
    out.mesh = &mesh;
    out.usp = FESpace<D>(mesh, 2, D);
    out.psp = FESpace<D>(mesh, 1, 1);
    const int nu = out.usp.num_dofs(), np = out.psp.num_dofs();

    typename UzawaStokesSolver::Blocks blk;
    blk.nu_full = nu;
    blk.np_full = np;
    assemble_symgrad(out.usp, 0, 1.0, Region::All, blk.A);
    assemble_div_pressure(out.usp, 0, out.psp, 0, 1.0, Region::Fluid, false, blk.B);
    blk.p_lumped_mass = VectorXd::Zero(np);
    assemble_rhs<D>(out.psp, 0, 1.0, Region::All,
                    [](const Vec<D>&) { return VectorXd::Ones(1); }, blk.p_lumped_mass);
    // solid-only pressure dofs carry no mass from the fluid form; give the
    // lumped weights their full-mesh values so the diagonal stays positive
    for (int i = 0; i < np; ++i)
        if (blk.p_lumped_mass[i] <= 0) blk.p_lumped_mass[i] = 1.0;

    auto build_u_constraints = [&](int i, int j) {
        Constraints C(nu);
        apply_periodic(C, out.usp, 0);
        Mat<D> E = strain_basis<D>(i, j);
        apply_rigid_inclusions<D>(C, out.usp, 0, [&](const Vec<D>& x) {
            VectorXd v(D);
            Vec<D> Ex = E * x;
            for (int c = 0; c < D; ++c) v[c] = Ex[c];
            return v;
        });
        for (int c = 0; c < D; ++c) pin_first_free(C, out.usp, 0, c);
        return C;
    };
    Constraints Cp(np);
    apply_periodic(Cp, out.psp, 0);
    apply_zero_on_solid_only(Cp, out.psp, 0);
    pin_first_free(Cp, out.psp, 0, 0);

    // pressure gauge data: kernel = kept dofs, weights = global mean
    VectorXd p_kernel = VectorXd::Zero(np);
    {
        Constraints Cref(np);
        apply_zero_on_solid_only(Cref, out.psp, 0);
        for (int nd = 0; nd < out.psp.num_scalar_nodes(); ++nd)
            if (!Cref.is_constrained(out.psp.dof(nd, 0))) p_kernel[out.psp.dof(nd, 0)] = 1.0;
    }
    VectorXd p_weights = VectorXd::Zero(np);
    assemble_rhs<D>(out.psp, 0, 1.0, Region::All,
                    [](const Vec<D>&) { return VectorXd::Ones(1); }, p_weights);

    UzawaStokesSolver solver(blk, build_u_constraints(0, 0).build(), Cp.build());

    // weak-divergence operator for the residual record
    SparseMat Bop(np, nu);
    {
        std::vector<Triplet> tb;
        assemble_div_pressure(out.usp, 0, out.psp, 0, 1.0, Region::Fluid, false, tb);
        Bop.setFromTriplets(tb.begin(), tb.end());
    }

    const double vol_s = mesh.measure_solid();
    const double vol_f = mesh.measure_fluid();
    const double volY = mesh.measure_all();

    for (int i = 0; i < D; ++i)
        for (int j = i; j < D; ++j) {
            auto Ru = build_u_constraints(i, j).build();
            VectorXd f = VectorXd::Zero(nu);
            assemble_rhs_strain<D>(out.usp, 0, strain_basis<D>(i, j), 1.0, Region::All, f);
            const double c_ij = (i == j) ? -vol_s / vol_f : 0.0;
            VectorXd g = c_ij * p_weights; // zero except for the diagonal drives
            auto res = solver.solve(f, g, &Ru.offset, nullptr);
            out.max_solve_residual = std::max(out.max_solve_residual, res.saddle_residual);

            // gauges: zero mean velocity per component, zero pressure mean
            for (int c = 0; c < D; ++c) {
                double mean = 0;
                Field<D> uf{&out.usp, res.u_full};
                mean = integrate_field<D>(uf, Region::All, 0,
                    [&](const Vec<D>&, const VectorXd& v, const MatrixXd&) { return v[c]; });
                for (int nd = 0; nd < out.usp.num_scalar_nodes(); ++nd)
                    res.u_full[out.usp.dof(nd, c)] -= mean / volY;
            }
            {
                double pm = p_weights.dot(res.p_full);
                double kw = p_weights.dot(p_kernel);
                res.p_full -= (pm / kw) * p_kernel;
            }

            out.omega[i][j] = res.u_full;
            out.pi[i][j] = res.p_full;
            if (j != i) {
                out.omega[j][i] = out.omega[i][j];
                out.pi[j][i] = out.pi[i][j];
            }

            // weak divergence residual of the enforced rows (reduced test
            // space; slave rows fold into their masters)
            VectorXd divres_red = solver.pressure_reducer().T.transpose() *
                                  VectorXd(Bop * res.u_full - g);
            double scale = std::max(1.0, res.u_full.norm());
            out.max_div_residual = std::max(out.max_div_residual, divres_red.norm() / scale);

            Field<D> om = out.omega_field(i, j);
            Mat<D> E = strain_basis<D>(i, j);
            double rig = integrate_field<D>(om, Region::Solid, 0,
                [&](const Vec<D>&, const VectorXd&, const MatrixXd& G) {
                    Mat<D> Dw = Mat<D>::Zero();
                    for (int a = 0; a < D; ++a)
                        for (int b = 0; b < D; ++b) Dw(a, b) = 0.5 * (G(a, b) + G(b, a));
                    return (Dw - E).squaredNorm();
                });
            out.max_rigid_strain_residual =
                std::max(out.max_rigid_strain_residual, std::sqrt(std::max(0.0, rig)));

            for (int c = 0; c < D; ++c) {
                double mc = integrate_field<D>(om, Region::All, 0,
                    [&](const Vec<D>&, const VectorXd& v, const MatrixXd&) { return v[c]; });
                out.max_mean_abs = std::max(out.max_mean_abs, std::abs(mc));
            }
            double pmean = integrate_field<D>(out.pi_field(i, j), Region::All, 0,
                [](const Vec<D>&, const VectorXd& v, const MatrixXd&) { return v[0]; });
            out.max_pressure_mean_abs = std::max(out.max_pressure_mean_abs, std::abs(pmean));
        }
    return out;
}

// ---------------------------------------------------------------------------
// Magnetostatic cell problems (3D only; the strict in-plane 2D reduction is
// degenerate and handled by the closed form in effective.hpp).
// ---------------------------------------------------------------------------

struct MagCellSet {
    const Mesh<3>* mesh = nullptr;
    FESpace<3> sp;
    double drive_scale = 1.0; // s in (T + s e^j).n = 0
    std::array<VectorXd, 3> field;

    double max_solve_residual = 0;
    double max_fluid_curl_l2 = 0;   // penalty residual
    double max_interface_trace = 0; // nodal (T + s e).n residual
    double max_div_l2 = 0;
    double max_mean_abs = 0;

    Field<3> comp(int j) const { return Field<3>{&sp, field[j]}; }
};

inline constexpr double default_gamma_curl_cell = 1e6;

/// Solve the three magnetostatic cell problems with drive scale s (s=1 gives
/// the reluctivity correctors, s=Rm the conductivity ones).
inline MagCellSet solve_mag_cells(const Mesh<3>& mesh, double drive_scale,
                                  double gamma_curl = default_gamma_curl_cell, int order = 1) {
    MagCellSet out;
    out.mesh = &mesh;
    out.sp = FESpace<3>(mesh, order, 3);
    out.drive_scale = drive_scale;
    const int n = out.sp.num_dofs();
    const bool has_solid = mesh.num_inclusions() > 0;

    std::vector<Triplet> trips;
    assemble_curlcurl(out.sp, 0, 1.0, Region::Solid, trips);
    assemble_divdiv(out.sp, 0, 1.0, Region::All, trips);
    assemble_curlcurl(out.sp, 0, gamma_curl, Region::Fluid, trips);

    auto build_constraints = [&](int j) {
        Constraints C(n);
        apply_periodic(C, out.sp, 0);
        if (has_solid) {
            Vec<3> ej = Vec<3>::Zero();
            ej[j] = 1;
            apply_interface_normal_value<3>(
                C, out.sp, 0,
                [&](const Vec<3>&, const Vec<3>& nrm) { return -drive_scale * ej.dot(nrm); });
        } else {
            // no interface pins the constants; gauge by zero mean per component
            for (int c = 0; c < 3; ++c) pin_first_free(C, out.sp, 0, c);
        }
        return C;
    };

    std::vector<GaugeConstraint> gauges;
    if (!has_solid) {
        for (int c = 0; c < 3; ++c) {
            GaugeConstraint g;
            g.weights = VectorXd::Zero(n);
            VectorXd ec = VectorXd::Zero(3);
            ec[c] = 1;
            assemble_rhs<3>(out.sp, 0, 1.0, Region::All,
                            [&](const Vec<3>&) { return ec; }, g.weights);
            g.kernel = VectorXd::Zero(n);
            for (int nd = 0; nd < out.sp.num_scalar_nodes(); ++nd)
                g.kernel[out.sp.dof(nd, c)] = 1.0;
            g.label = "mean-" + std::to_string(c);
            gauges.push_back(std::move(g));
        }
    }

    ReducedSolver solver(n, build_constraints(0).build(), gauges,
                         ReducedSolver::Backend::SpdChol);
    solver.factor(trips);

    for (int j = 0; j < 3; ++j) {
        auto R = build_constraints(j).build();
        Vec<3> ej = Vec<3>::Zero();
        ej[j] = 1;
        VectorXd rhs = VectorXd::Zero(n);
        assemble_rhs_curl_drive(out.sp, 0, ej, -drive_scale, Region::Solid, rhs);
        SolveStats st;
        out.field[j] = solver.solve(rhs, &st, &R.offset);
        out.max_solve_residual = std::max(out.max_solve_residual, st.rel_residual);

        Field<3> T = out.comp(j);
        double cfl = integrate_field<3>(T, Region::Fluid, 0,
            [](const Vec<3>&, const VectorXd&, const MatrixXd& G) {
                return curl3(G).squaredNorm();
            });
        out.max_fluid_curl_l2 = std::max(out.max_fluid_curl_l2, std::sqrt(std::max(0.0, cfl)));
        double dv = integrate_field<3>(T, Region::All, 0,
            [](const Vec<3>&, const VectorXd&, const MatrixXd& G) {
                double d = G(0, 0) + G(1, 1) + G(2, 2);
                return d * d;
            });
        out.max_div_l2 = std::max(out.max_div_l2, std::sqrt(std::max(0.0, dv)));
        for (int c = 0; c < 3; ++c) {
            double mc = integrate_field<3>(T, Region::All, 0,
                [&](const Vec<3>&, const VectorXd& v, const MatrixXd&) { return v[c]; });
            out.max_mean_abs = std::max(out.max_mean_abs, std::abs(mc));
        }
        // nodal interface trace residual against the analytic normal
        if (has_solid) {
            std::vector<char> seen(out.sp.num_scalar_nodes(), 0);
            for (const auto& f : mesh.interface_facets) {
                auto nodes_of = [&](int a, int b) {
                    std::array<int, 2> key{std::min(a, b), std::max(a, b)};
                    return mesh.num_vertices() + mesh.edge_index.at(key);
                };
                std::vector<int> nds(f.verts.begin(), f.verts.end());
                if (out.sp.order == 2)
                    for (int a = 0; a < 3; ++a)
                        for (int b = a + 1; b < 3; ++b)
                            nds.push_back(nodes_of(f.verts[a], f.verts[b]));
                for (int nd : nds) {
                    if (seen[nd]) continue;
                    seen[nd] = 1;
                    Vec<3> x = out.sp.node_position(nd);
                    Vec<3> nrm = mesh.inclusion_geoms[f.inclusion].normal(x);
                    Vec<3> val;
                    for (int c = 0; c < 3; ++c) val[c] = out.field[j][out.sp.dof(nd, c)];
                    out.max_interface_trace = std::max(
                        out.max_interface_trace, std::abs((val + drive_scale * ej).dot(nrm)));
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Corrector reconstruction
// ---------------------------------------------------------------------------

/// u1(y) = -[D]_ij w^ij(y); exact linear combination of the cell solutions.
template <int D>
Field<D> reconstruct_u1(const Mat<D>& D_u0, const StokesCellSet<D>& cells) {
    for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j)
            require(cells.omega[i][j].size() > 0, "reconstruct_u1: incomplete cell set");
    VectorXd c = VectorXd::Zero(cells.usp.num_dofs());
    for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) c -= D_u0(i, j) * cells.omega[i][j];
    return Field<D>{&cells.usp, std::move(c)};
}

/// B1(y) = eps_ijk dB0_i/dx_k Theta^j(y) - eps_ikj u0_i B0_k Psi^j(y).
inline Field<3> reconstruct_B1(const Mat<3>& gradB0, const Vec<3>& u0, const Vec<3>& B0,
                               const MagCellSet& theta, const MagCellSet& psi) {
    require(theta.field[0].size() > 0 && psi.field[0].size() > 0,
            "reconstruct_B1: incomplete cell set");
    require(theta.sp.num_dofs() == psi.sp.num_dofs(), "reconstruct_B1: space mismatch");
    VectorXd c = VectorXd::Zero(theta.sp.num_dofs());
    for (int j = 0; j < 3; ++j) {
        double cj = 0, dj = 0;
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) {
                // gradB0(i,k) = dB0_i/dx_k
                cj += levi_civita(i + 1, j + 1, k + 1) * gradB0(i, k);
                dj += levi_civita(i + 1, k + 1, j + 1) * u0[i] * B0[k];
            }
        c += cj * theta.field[j];
        c -= dj * psi.field[j];
    }
    return Field<3>{&theta.sp, std::move(c)};
}

} // namespace mrhomog
