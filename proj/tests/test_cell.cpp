#include <catch2/catch_amalgamated.hpp>

#include "mrhomog/cell.hpp"
#include "mrhomog/effective.hpp"

using namespace mrhomog;

namespace {

Mesh<2> disk_mesh(double r, double h) {
    CellGeometry<2> g;
    g.semiaxes.setConstant(r);
    return build_cell_mesh(g, h);
}

} // namespace

TEST_CASE("empty inclusion: fluctuations and pressures vanish") {
    auto m = disk_mesh(0.0, 0.125);
    auto cells = solve_stokes_cells(m);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            CHECK(cells.omega[i][j].cwiseAbs().maxCoeff() < 1e-12);
            CHECK(cells.pi[i][j].cwiseAbs().maxCoeff() < 1e-10);
        }
}

TEST_CASE("stokes cell residual records meet their contracts") {
    auto m = disk_mesh(0.25, 0.1);
    auto cells = solve_stokes_cells(m);
    CHECK(cells.max_solve_residual < 1e-10);
    CHECK(cells.max_div_residual < 1e-9);
    CHECK(cells.max_rigid_strain_residual < 1e-8);
    CHECK(cells.max_mean_abs < 1e-10);
    CHECK(cells.max_pressure_mean_abs < 1e-12);
}

TEST_CASE("drive symmetry: swapping (i,j) yields the identical solution") {
    auto m = disk_mesh(0.25, 0.1);
    auto cells = solve_stokes_cells(m);
    CHECK((cells.omega[0][1] - cells.omega[1][0]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((cells.pi[0][1] - cells.pi[1][0]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cell solves are deterministic and order independent") {
    auto m = disk_mesh(0.25, 0.125);
    auto a = solve_stokes_cells(m);
    auto b = solve_stokes_cells(m);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK((a.omega[i][j] - b.omega[i][j]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gauge independence: constant shifts do not change the tensor") {
    auto m = disk_mesh(0.25, 0.125);
    auto cells = solve_stokes_cells(m);
    auto N0 = effective_viscosity(cells);
    auto shifted = cells;
    for (int nd = 0; nd < shifted.usp.num_scalar_nodes(); ++nd)
        shifted.omega[0][1][shifted.usp.dof(nd, 0)] += 0.37;
    shifted.omega[1][0] = shifted.omega[0][1];
    auto N1 = effective_viscosity(shifted);
    double dev = 0;
    for (std::size_t k = 0; k < N0.flux.a.size(); ++k)
        dev = std::max(dev, std::abs(N0.flux.a[k] - N1.flux.a[k]));
    for (std::size_t k = 0; k < N0.energy.a.size(); ++k)
        dev = std::max(dev, std::abs(N0.energy.a[k] - N1.energy.a[k]));
    CHECK(dev < 1e-12);
}

TEST_CASE("reconstruct_u1 is the stated linear combination") {
    auto m = disk_mesh(0.25, 0.125);
    auto cells = solve_stokes_cells(m);

    Mat<2> Z = Mat<2>::Zero();
    CHECK(reconstruct_u1(Z, cells).coeffs.cwiseAbs().maxCoeff() == 0.0);

    Mat<2> I = Mat<2>::Identity();
    VectorXd expect = -(cells.omega[0][0] + cells.omega[1][1]);
    CHECK((reconstruct_u1(I, cells).coeffs - expect).cwiseAbs().maxCoeff() == 0.0);

    Rng rng(5);
    Mat<2> S;
    S << rng.symm(), 0, 0, rng.symm();
    S(0, 1) = S(1, 0) = rng.symm();
    VectorXd manual = VectorXd::Zero(cells.usp.num_dofs());
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) manual -= S(i, j) * cells.omega[i][j];
    CHECK((reconstruct_u1(S, cells).coeffs - manual).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("magnetostatic cells: empty inclusion gives zero") {
    CellGeometry<3> g;
    g.semiaxes.setConstant(0.0);
    auto m = build_cell_mesh(g, 0.25);
    auto mag = solve_mag_cells(m, 1.0, default_gamma_curl_cell, 1);
    for (int j = 0; j < 3; ++j) CHECK(mag.field[j].cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("magnetostatic cells on a sphere: residuals, symmetry, linearity") {
    CellGeometry<3> g;
    g.semiaxes.setConstant(0.25);
    auto m = build_cell_mesh(g, 0.125);
    auto theta = solve_mag_cells(m, 1.0, default_gamma_curl_cell, 1);
    CHECK(theta.max_solve_residual < 1e-9);
    CHECK(theta.max_interface_trace < 1e-8);
    CHECK(theta.max_fluid_curl_l2 < 1e-4);

    // axis permutation symmetry: values of theta^0 at x match the rotated
    // values of theta^1 at the rotated point on the symmetric mesh
    Field<3> t0 = theta.comp(0), t1 = theta.comp(1);
    Rng rng(31);
    double dev = 0, scale = 0;
    for (int t = 0; t < 40; ++t) {
        Vec<3> x(rng.uniform(), rng.uniform(), rng.uniform());
        if (std::abs((x - g.center).norm() - 0.25) < 0.1) continue;
        Vec<3> xr(x[2], x[0], x[1]);
        VectorXd a = t0.value_at(x);
        VectorXd b = t1.value_at(xr);
        Vec<3> a3(a[0], a[1], a[2]);
        Vec<3> b3(b[1], b[2], b[0]);
        dev = std::max(dev, (a3 - b3).norm());
        scale = std::max(scale, a3.norm());
    }
    CHECK(dev <= 1e-9 * std::max(1.0, scale) + 1e-9);

    auto psi2 = solve_mag_cells(m, 2.0, default_gamma_curl_cell, 1);
    for (int j = 0; j < 3; ++j) {
        double rel = (psi2.field[j] - 2.0 * theta.field[j]).cwiseAbs().maxCoeff() /
                     std::max(1e-300, theta.field[j].cwiseAbs().maxCoeff() * 2);
        CHECK(rel < 1e-9);
    }
}

TEST_CASE("reconstruct_B1 coefficient structure") {
    CellGeometry<3> g;
    g.semiaxes.setConstant(0.25);
    auto m = build_cell_mesh(g, 0.125);
    auto theta = solve_mag_cells(m, 1.0, default_gamma_curl_cell, 1);
    auto psi = solve_mag_cells(m, 1.0, default_gamma_curl_cell, 1);

    Mat<3> Z = Mat<3>::Zero();
    CHECK(reconstruct_B1(Z, Vec<3>::Zero(), Vec<3>::Zero(), theta, psi)
              .coeffs.cwiseAbs()
              .maxCoeff() == 0.0);

    // gradB0 with dB0_2/dx_1 = 1 gives curl B0 = e3: only Theta^3 contributes
    Mat<3> G = Mat<3>::Zero();
    G(1, 0) = 1.0;
    auto B1 = reconstruct_B1(G, Vec<3>::Zero(), Vec<3>::Zero(), theta, psi);
    CHECK((B1.coeffs - theta.field[2]).cwiseAbs().maxCoeff() < 1e-14);

    // pure u x B drive activates only the psi family
    Vec<3> u0(1, 0, 0), B0(0, 1, 0); // u x B = e3
    auto B1b = reconstruct_B1(Z, u0, B0, theta, psi);
    CHECK((B1b.coeffs + psi.field[2]).cwiseAbs().maxCoeff() < 1e-14);
}
