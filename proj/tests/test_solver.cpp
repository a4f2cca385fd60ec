#include <catch2/catch_amalgamated.hpp>

#include "mrhomog/assemble.hpp"
#include "mrhomog/meshgen.hpp"
#include "mrhomog/solver.hpp"

using namespace mrhomog;

namespace {

struct StokesSetup {
    Mesh<2> mesh;
    FESpace<2> usp, psp;
    int uoff = 0, poff = 0, n = 0;
};

StokesSetup make_stokes(double h) {
    StokesSetup s;
    CellGeometry<2> g;
    g.semiaxes.setConstant(0.0);
    s.mesh = build_cell_mesh(g, h);
    s.usp = FESpace<2>(s.mesh, 2, 2);
    s.psp = FESpace<2>(s.mesh, 1, 1);
    s.uoff = 0;
    s.poff = s.usp.num_dofs();
    s.n = s.usp.num_dofs() + s.psp.num_dofs();
    return s;
}

GaugeConstraint pressure_mean_gauge(const StokesSetup& s) {
    GaugeConstraint g;
    g.weights = VectorXd::Zero(s.n);
    assemble_rhs<2>(s.psp, s.poff, 1.0, Region::All,
                    [](const Vec<2>&) { return VectorXd::Ones(1); }, g.weights);
    g.kernel = VectorXd::Zero(s.n);
    for (int nd = 0; nd < s.psp.num_scalar_nodes(); ++nd)
        g.kernel[s.poff + s.psp.dof(nd, 0)] = 1.0;
    g.label = "p-mean";
    return g;
}

} // namespace

TEST_CASE("identity block system returns the rhs") {
    Constraints C(5);
    auto R = C.build();
    std::vector<Triplet> t;
    for (int i = 0; i < 5; ++i) t.emplace_back(i, i, 1.0);
    ReducedSolver solver(5, R);
    solver.factor(t);
    VectorXd b(5);
    b << 1, 2, 3, 4, 5;
    SolveStats st;
    VectorXd x = solver.solve(b, &st);
    CHECK((x - b).norm() < 1e-14);
    CHECK(st.rel_residual < 1e-14);
}

TEST_CASE("singular system raises a diagnostic error") {
    // Stokes without the zero-mean pressure constraint is singular
    auto s = make_stokes(0.25);
    Constraints C(s.n);
    apply_dirichlet_boundary(C, s.usp, s.uoff);
    auto R = C.build();
    std::vector<Triplet> t;
    assemble_symgrad(s.usp, s.uoff, 2.0, Region::All, t);
    assemble_div_pressure(s.usp, s.uoff, s.psp, s.poff, 1.0, Region::Fluid, true, t);
    ReducedSolver solver(s.n, R);
    CHECK_THROWS_AS(solver.factor(t), NumericalError);
}

TEST_CASE("manufactured Stokes solution in the FE space is reproduced to 1e-9") {
    // u = (y^2, x^2) (P2-exact), p = x + y - 1 (P1-exact, zero mean).
    // With the +int p div v convention the body force is f = -lap u - grad p.
    auto s = make_stokes(0.1);
    auto uex = [](const Vec<2>& x) {
        VectorXd v(2);
        v << x[1] * x[1], x[0] * x[0];
        return v;
    };
    Constraints C(s.n);
    apply_dirichlet_boundary(C, s.usp, s.uoff, uex);
    pin_first_free(C, s.psp, s.poff, 0);
    auto R = C.build();

    std::vector<Triplet> t;
    assemble_symgrad(s.usp, s.uoff, 2.0, Region::All, t);
    assemble_div_pressure(s.usp, s.uoff, s.psp, s.poff, 1.0, Region::Fluid, true, t);

    VectorXd rhs = VectorXd::Zero(s.n);
    assemble_rhs<2>(s.usp, s.uoff, 1.0, Region::All,
                    [](const Vec<2>&) { return VectorXd::Constant(2, -3.0); }, rhs);

    ReducedSolver solver(s.n, R, {pressure_mean_gauge(s)});
    solver.factor(t);
    SolveStats st;
    VectorXd x = solver.solve(rhs, &st);
    CHECK(st.rel_residual < 1e-10);

    Field<2> uh{&s.usp, x.head(s.usp.num_dofs())};
    Field<2> uref{&s.usp, s.usp.interpolate(uex)};
    Field<2> du{&s.usp, uh.coeffs - uref.coeffs};
    CHECK(norm_L2<2>(du) < 1e-9);

    Field<2> ph{&s.psp, x.segment(s.poff, s.psp.num_dofs())};
    Field<2> pref{&s.psp, s.psp.interpolate([](const Vec<2>& x) {
                      VectorXd v(1);
                      v << x[0] + x[1] - 1.0;
                      return v;
                  })};
    Field<2> dp{&s.psp, ph.coeffs - pref.coeffs};
    CHECK(norm_L2<2>(dp) < 1e-8);
}

TEST_CASE("lid-driven cavity solution is discretely divergence free") {
    auto s = make_stokes(0.1);
    auto lid = [](const Vec<2>& x) {
        VectorXd v = VectorXd::Zero(2);
        if (std::abs(x[1] - 1.0) < 1e-12) v[0] = 1.0;
        return v;
    };
    Constraints C(s.n);
    apply_dirichlet_boundary(C, s.usp, s.uoff, lid);
    pin_first_free(C, s.psp, s.poff, 0);
    auto R = C.build();

    std::vector<Triplet> t;
    assemble_symgrad(s.usp, s.uoff, 2.0, Region::All, t);
    assemble_div_pressure(s.usp, s.uoff, s.psp, s.poff, 1.0, Region::Fluid, true, t);
    ReducedSolver solver(s.n, R, {pressure_mean_gauge(s)});
    solver.factor(t);
    VectorXd x = solver.solve(VectorXd::Zero(s.n));

    // discrete divergence residual: pressure-row application in M_p^-1 norm
    std::vector<Triplet> tb, tm;
    assemble_div_pressure(s.usp, s.uoff, s.psp, s.poff, 1.0, Region::Fluid, false, tb);
    SparseMat Bmat(s.n, s.n);
    Bmat.setFromTriplets(tb.begin(), tb.end());
    VectorXd divres_full = Bmat * x;
    VectorXd divres = divres_full.segment(s.poff, s.psp.num_dofs());

    assemble_mass(s.psp, 0, 1.0, Region::All, tm);
    SparseMat Mp(s.psp.num_dofs(), s.psp.num_dofs());
    Mp.setFromTriplets(tm.begin(), tm.end());
    Eigen::SimplicialLDLT<SparseMat> chol(Mp);
    // the zero-mean multiplier makes the constraint rows exact only up to the
    // multiplier direction; project it out before measuring
    VectorXd ones = VectorXd::Ones(s.psp.num_dofs());
    VectorXd Mo = Mp * ones;
    divres -= Mo * (ones.dot(divres) / ones.dot(Mo));
    double nrm = std::sqrt(std::abs(divres.dot(chol.solve(divres))));
    CHECK(nrm < 1e-10);
}

TEST_CASE("picard: zero data converges in one iteration to zero") {
    VectorXd state = VectorXd::Constant(10, 0.7);
    auto hist = picard_solve(
        [&](const VectorXd&) { return VectorXd::Zero(10); },
        [](const VectorXd& v) { return v.norm(); }, state, 1e-9, 20);
    CHECK(hist.converged);
    CHECK(hist.iterations <= 2);
    CHECK(state.norm() == 0.0);
}

TEST_CASE("picard: linear problems converge in one step") {
    // solve Ax = b where the 'linearization' ignores the current state
    Eigen::Matrix2d A;
    A << 2, 1, 1, 3;
    Eigen::Vector2d b(1, 2);
    Eigen::Vector2d xstar = A.colPivHouseholderQr().solve(b);
    VectorXd state = VectorXd::Zero(2);
    auto hist = picard_solve(
        [&](const VectorXd&) {
            VectorXd r(2);
            r = A.colPivHouseholderQr().solve(b);
            return r;
        },
        [](const VectorXd& v) { return v.norm(); }, state, 1e-12, 20);
    CHECK(hist.converged);
    CHECK(hist.iterations <= 2);
    CHECK((state - VectorXd(xstar)).norm() < 1e-12);
}

TEST_CASE("pencil eigenvalue: diagonal case") {
    std::vector<Triplet> ta, tm;
    for (int i = 0; i < 6; ++i) {
        ta.emplace_back(i, i, 2.0 + i);
        tm.emplace_back(i, i, 1.0);
    }
    SparseMat A(6, 6), M(6, 6);
    A.setFromTriplets(ta.begin(), ta.end());
    M.setFromTriplets(tm.begin(), tm.end());
    CHECK(smallest_pencil_eigenvalue(A, M) == Catch::Approx(2.0).epsilon(1e-8));
}
