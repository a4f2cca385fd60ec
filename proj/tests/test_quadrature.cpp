#include <catch2/catch_amalgamated.hpp>

#include "mrhomog/quadrature.hpp"

using namespace mrhomog;

namespace {

// exact integral of x^a y^b over the unit triangle: a! b! / (a+b+2)!
double tri_monomial(int a, int b) {
    auto fact = [](int n) {
        double f = 1;
        for (int i = 2; i <= n; ++i) f *= i;
        return f;
    };
    return fact(a) * fact(b) / fact(a + b + 2);
}

// exact integral of x^a y^b z^c over the unit tetrahedron: a! b! c! / (a+b+c+3)!
double tet_monomial(int a, int b, int c) {
    auto fact = [](int n) {
        double f = 1;
        for (int i = 2; i <= n; ++i) f *= i;
        return f;
    };
    return fact(a) * fact(b) * fact(c) / fact(a + b + c + 3);
}

} // namespace

TEST_CASE("triangle rules integrate monomials exactly up to their degree") {
    for (int deg : {1, 3, 5, 7, 9}) {
        const auto& rule = simplex_rule<2>(deg);
        for (int a = 0; a + 0 <= deg; ++a)
            for (int b = 0; a + b <= deg; ++b) {
                double s = 0;
                for (int q = 0; q < rule.size(); ++q)
                    s += rule.weights[q] * std::pow(rule.points[q][0], a) *
                         std::pow(rule.points[q][1], b);
                INFO("deg=" << deg << " monomial x^" << a << " y^" << b);
                CHECK(s == Catch::Approx(tri_monomial(a, b)).epsilon(1e-12).margin(1e-14));
            }
    }
}

TEST_CASE("tet rules integrate monomials exactly up to their degree") {
    for (int deg : {1, 3, 5, 7}) {
        const auto& rule = simplex_rule<3>(deg);
        for (int a = 0; a <= deg; ++a)
            for (int b = 0; a + b <= deg; ++b)
                for (int c = 0; a + b + c <= deg; ++c) {
                    double s = 0;
                    for (int q = 0; q < rule.size(); ++q)
                        s += rule.weights[q] * std::pow(rule.points[q][0], a) *
                             std::pow(rule.points[q][1], b) * std::pow(rule.points[q][2], c);
                    INFO("deg=" << deg << " monomial " << a << "," << b << "," << c);
                    CHECK(s == Catch::Approx(tet_monomial(a, b, c)).epsilon(1e-12).margin(1e-14));
                }
    }
}

TEST_CASE("weights sum to reference simplex volume") {
    for (int deg : {1, 3, 5, 7}) {
        double s2 = 0;
        for (double w : simplex_rule<2>(deg).weights) s2 += w;
        CHECK(s2 == Catch::Approx(0.5).epsilon(1e-13));
        double s3 = 0;
        for (double w : simplex_rule<3>(deg).weights) s3 += w;
        CHECK(s3 == Catch::Approx(1.0 / 6.0).epsilon(1e-13));
    }
}

TEST_CASE("requested degree is honored by the cache") {
    CHECK(simplex_rule<2>(4).degree >= 4);
    CHECK(simplex_rule<2>(6).degree >= 6);
    CHECK(simplex_rule<3>(2).degree >= 2);
}
