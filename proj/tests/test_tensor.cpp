#include <catch2/catch_amalgamated.hpp>

#include "mrhomog/tensor.hpp"

using namespace mrhomog;

TEST_CASE("levi_civita basic values") {
    CHECK(levi_civita(1, 2, 3) == 1);
    CHECK(levi_civita(2, 1, 3) == -1);
    CHECK(levi_civita(1, 1, 2) == 0);
    CHECK_THROWS_AS(levi_civita(0, 1, 2), ArgumentError);
    CHECK_THROWS_AS(levi_civita(1, 2, 4), ArgumentError);
}

TEST_CASE("levi_civita total antisymmetry over all 27 triples") {
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j)
            for (int k = 1; k <= 3; ++k) {
                CHECK(levi_civita(i, j, k) == -levi_civita(j, i, k));
                CHECK(levi_civita(i, j, k) == -levi_civita(i, k, j));
                CHECK(levi_civita(i, j, k) == -levi_civita(k, j, i));
            }
}

TEST_CASE("cross products") {
    Vec<3> ex(1, 0, 0), ey(0, 1, 0);
    CHECK((cross(ex, ey) - Vec<3>(0, 0, 1)).norm() == 0.0);

    Vec<3> a(2, 3, 4);
    CHECK(cross(a, a).norm() == 0.0);

    // frozen from the brute-force expansion of eps_ijk a_j b_k
    Vec<3> b(5, 6, 7);
    CHECK((cross(a, b) - Vec<3>(-3, 6, -3)).norm() == 0.0);
}

TEST_CASE("cross orthogonality for random vectors") {
    Rng rng(7);
    for (int t = 0; t < 50; ++t) {
        Vec<3> a(rng.symm(), rng.symm(), rng.symm());
        Vec<3> b(rng.symm(), rng.symm(), rng.symm());
        Vec<3> c = cross(a, b);
        double scale = 1e-12 * a.norm() * (a.norm() + b.norm()) * (a.norm() + b.norm());
        CHECK(std::abs(c.dot(a)) <= scale + 1e-15);
        CHECK(std::abs(c.dot(b)) <= scale + 1e-15);
    }
}

TEST_CASE("2d conventions embed consistently into 3d") {
    Rng rng(11);
    for (int t = 0; t < 20; ++t) {
        Vec<2> a(rng.symm(), rng.symm()), b(rng.symm(), rng.symm());
        Vec<3> a3(a[0], a[1], 0), b3(b[0], b[1], 0);
        CHECK(cross2(a, b) == Catch::Approx(cross(a3, b3)[2]).margin(1e-15));
        // scalar c crossed with in-plane B equals (0,0,c) x (B,0)
        double c = rng.symm();
        Vec<3> sc = cross(Vec<3>(0, 0, c), b3);
        Vec<2> s2 = scalar_cross2(c, b);
        CHECK(sc[0] == Catch::Approx(s2[0]).margin(1e-15));
        CHECK(sc[1] == Catch::Approx(s2[1]).margin(1e-15));
    }
}

TEST_CASE("tensor4_apply identity and zero") {
    auto I = Tensor4<2>::sym_identity();
    Mat<2> S;
    S << 1.5, -0.25, -0.25, 2.0;
    Mat<2> R = tensor4_apply(I, S);
    CHECK((R - S).cwiseAbs().maxCoeff() < 1e-15);

    auto Z = Tensor4<2>::zero();
    CHECK(tensor4_apply(Z, S).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tensor4_apply matches brute-force quadruple loop") {
    Rng rng(3);
    Tensor4<2> N;
    for (auto& x : N.a) x = rng.symm();
    Mat<2> S;
    S << rng.symm(), rng.symm(), rng.symm(), rng.symm();
    S = sym<2>(S);
    Mat<2> R = tensor4_apply(N, S);
    for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 2; ++n) {
            double v = 0;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) v += N(i, j, m, n) * S(i, j);
            CHECK(R(m, n) == Catch::Approx(v).margin(1e-15));
        }
}

TEST_CASE("tensor4_apply of a minor+major symmetric tensor yields symmetric output") {
    Rng rng(5);
    Tensor4<3> N{};
    // build a fully symmetric tensor from random seeds
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j)
            for (int m = 0; m < 3; ++m)
                for (int n = m; n < 3; ++n) {
                    double v = rng.symm();
                    N(i, j, m, n) = N(j, i, m, n) = N(i, j, n, m) = N(j, i, n, m) = v;
                }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int m = 0; m < 3; ++m)
                for (int n = 0; n < 3; ++n) {
                    double v = 0.5 * (N(i, j, m, n) + N(m, n, i, j));
                    N(i, j, m, n) = v;
                    N(m, n, i, j) = v;
                }
    Mat<3> S;
    S << 1, 2, 3, 2, -1, 0.5, 3, 0.5, 2;
    Mat<3> R = tensor4_apply(N, S);
    CHECK((R - R.transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("ellipticity report of symmetric identity tensor") {
    auto rep = ellipticity_report(Tensor4<2>::sym_identity());
    CHECK(rep.min_eigenvalue == Catch::Approx(1.0).margin(1e-12));
    CHECK(rep.major_symmetric);

    auto rep3 = ellipticity_report(Tensor4<3>::sym_identity());
    CHECK(rep3.min_eigenvalue == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("ellipticity report of a diagonal matrix") {
    Mat<2> S = Mat<2>::Zero();
    S(0, 0) = 2;
    S(1, 1) = 3;
    auto rep = ellipticity_report(S);
    CHECK(rep.min_eigenvalue == Catch::Approx(2.0).margin(1e-14));
    CHECK(rep.major_symmetric);
}

TEST_CASE("voigt eigenvalues match Rayleigh quotient sampling") {
    // random major-symmetric tensor; the Voigt matrix eigenvalues must bound
    // and attain the Rayleigh quotient N:S:S / S:S over symmetric S
    Rng rng(17);
    Tensor4<2> N{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int m = 0; m < 2; ++m)
                for (int n = 0; n < 2; ++n) N(i, j, m, n) = rng.symm();
    // symmetrize fully (minor + major)
    Tensor4<2> Ns{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int m = 0; m < 2; ++m)
                for (int n = 0; n < 2; ++n)
                    Ns(i, j, m, n) = 0.125 * (N(i, j, m, n) + N(j, i, m, n) + N(i, j, n, m) +
                                              N(j, i, n, m) + N(m, n, i, j) + N(n, m, i, j) +
                                              N(m, n, j, i) + N(n, m, j, i));
    auto rep = ellipticity_report(Ns);
    double lo = 1e300, hi = -1e300;
    for (int t = 0; t < 20000; ++t) {
        Mat<2> S;
        S << rng.symm(), 0, 0, rng.symm();
        S(0, 1) = S(1, 0) = rng.symm();
        double num = 0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int m = 0; m < 2; ++m)
                    for (int n = 0; n < 2; ++n) num += Ns(i, j, m, n) * S(i, j) * S(m, n);
        double den = S.squaredNorm();
        double q = num / den;
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    CHECK(lo >= rep.min_eigenvalue - 1e-8);
    CHECK(hi <= rep.max_eigenvalue + 1e-8);
    // random sampling should come close to the extremes
    CHECK(lo <= rep.min_eigenvalue + 0.05 * (rep.max_eigenvalue - rep.min_eigenvalue));
    CHECK(hi >= rep.max_eigenvalue - 0.05 * (rep.max_eigenvalue - rep.min_eigenvalue));
}
