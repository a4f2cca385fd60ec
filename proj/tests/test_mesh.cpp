#include <catch2/catch_amalgamated.hpp>

#include "mrhomog/meshgen.hpp"
#include "mrhomog/tensor.hpp"

#include <set>

using namespace mrhomog;

namespace {

// Independent area oracle: shoelace over the interface polygon of one
// inclusion (2D). Facet endpoints sit on the analytic curve, so this gives
// the polygonal inclusion area without touching simplex volumes.
double shoelace_area(const Mesh<2>& m, int incl) {
    double s = 0;
    for (const auto& f : m.interface_facets) {
        if (f.inclusion != incl) continue;
        Vec<2> a = m.vertices[f.verts[0]], b = m.vertices[f.verts[1]];
        // orient the segment so the solid side is on the left: the solid
        // cell centroid lies left of (a->b) iff cross(b-a, c-a) > 0
        Vec<2> c = m.centroid(f.cell_in);
        double orient = cross2(Vec<2>(b - a), Vec<2>(c - a));
        if (orient < 0) std::swap(a, b);
        s += 0.5 * cross2(a, b);
    }
    return s;
}

// divergence-theorem volume oracle in 3D: V = (1/3) sum over boundary
// triangles of centroid . n * area, with n outward from the solid
double divergence_volume(const Mesh<3>& m, int incl) {
    double s = 0;
    for (const auto& f : m.interface_facets) {
        if (f.inclusion != incl) continue;
        Vec<3> a = m.vertices[f.verts[0]], b = m.vertices[f.verts[1]], c = m.vertices[f.verts[2]];
        Vec<3> n2 = (b - a).cross(c - a); // 2*area*normal
        Vec<3> inward = m.centroid(f.cell_in) - (a + b + c) / 3.0;
        if (n2.dot(inward) > 0) n2 = -n2; // make it outward from the solid
        s += (a + b + c).dot(n2) / 18.0;
    }
    return s;
}

} // namespace

TEST_CASE("cell mesh covers the unit square exactly") {
    CellGeometry<2> g;
    g.semiaxes.setConstant(0.25);
    auto m = build_cell_mesh(g, 0.1);
    CHECK(m.measure("all") == Catch::Approx(1.0).margin(1e-12));
    // every simplex positively oriented
    for (int c = 0; c < m.num_cells(); ++c) CHECK(m.signed_volume(c) > 0);
}

TEST_CASE("disk r=0.25 solid area approximates pi r^2") {
    CellGeometry<2> g;
    g.semiaxes.setConstant(0.25);
    auto m = build_cell_mesh(g, 0.05);
    double solid = m.measure("solid");
    CHECK(std::abs(solid - M_PI * 0.0625) < 2e-3); // 0.19634954
    CHECK(m.measure("fluid") == Catch::Approx(1.0 - solid).margin(1e-12));
    // independent shoelace oracle agrees with the simplex sum
    CHECK(shoelace_area(m, 0) == Catch::Approx(solid).margin(1e-12));
}

TEST_CASE("r=0 yields pure fluid") {
    CellGeometry<2> g;
    g.semiaxes.setConstant(0.0);
    auto m = build_cell_mesh(g, 0.1);
    CHECK(m.measure("solid") == 0.0);
    CHECK(m.interface_facets.empty());
    CHECK(m.num_inclusions() == 0);
}

TEST_CASE("too coarse a mesh raises a resolution error") {
    CellGeometry<2> g;
    g.semiaxes.setConstant(0.03);
    CHECK_THROWS_AS(build_cell_mesh(g, 0.25), NumericalError);
}

TEST_CASE("interface vertices sit on the analytic curve") {
    CellGeometry<2> g;
    g.semiaxes.setConstant(0.25);
    auto m = build_cell_mesh(g, 0.05);
    for (const auto& f : m.interface_facets)
        for (int v : f.verts)
            CHECK(std::abs((m.vertices[v] - g.center).norm() - 0.25) < 1e-10);
}

TEST_CASE("every interface facet separates fluid from solid") {
    CellGeometry<2> g;
    g.semiaxes.setConstant(0.25);
    auto m = build_cell_mesh(g, 0.05);
    CHECK(!m.interface_facets.empty());
    for (const auto& f : m.interface_facets) {
        CHECK(m.cell_is_solid(f.cell_in));
        CHECK(!m.cell_is_solid(f.cell_out));
    }
}

TEST_CASE("mirror symmetry of the cell mesh vertex set") {
    CellGeometry<2> g;
    g.semiaxes.setConstant(0.25);
    auto m = build_cell_mesh(g, 0.1);
    // reflect across the x = 0.5 midplane; vertex sets must match to 1e-12
    std::vector<Vec<2>> pts = m.vertices;
    auto key = [](const Vec<2>& p) {
        return std::pair<long long, long long>{llround(p[0] * 1e12), llround(p[1] * 1e12)};
    };
    std::set<std::pair<long long, long long>> orig;
    for (auto& p : pts) orig.insert(key(p));
    for (auto& p : pts) {
        Vec<2> q(1.0 - p[0], p[1]);
        CHECK(orig.count(key(q)) == 1);
    }
}

TEST_CASE("periodic pairing round-trips by translation") {
    CellGeometry<2> g;
    g.semiaxes.setConstant(0.25);
    auto m = build_cell_mesh(g, 0.1);
    int slaves = 0;
    for (int v = 0; v < m.num_vertices(); ++v) {
        int rep = m.periodic_rep(v);
        if (rep == v) continue;
        ++slaves;
        Vec<2> d = m.vertices[v] - m.vertices[rep];
        for (int ax = 0; ax < 2; ++ax) {
            double r = std::abs(d[ax]);
            CHECK((r < 1e-12 || std::abs(r - 1.0) < 1e-12));
        }
    }
    CHECK(slaves > 0);
}

TEST_CASE("3d cell mesh basics") {
    CellGeometry<3> g;
    g.semiaxes.setConstant(0.25);
    auto m = build_cell_mesh(g, 0.125);
    CHECK(m.measure("all") == Catch::Approx(1.0).margin(1e-12));
    double vol = m.measure("solid");
    // sphere volume 4/3 pi r^3 = 0.06545; chordal polyhedron slightly less
    CHECK(std::abs(vol - 4.0 / 3.0 * M_PI * 0.015625) < 4e-3);
    CHECK(divergence_volume(m, 0) == Catch::Approx(vol).margin(1e-12));
    for (int c = 0; c < m.num_cells(); ++c) CHECK(m.signed_volume(c) > 0);
    for (const auto& f : m.interface_facets)
        for (int v : f.verts)
            CHECK(std::abs((m.vertices[v] - g.center).norm() - 0.25) < 1e-10);
}

TEST_CASE("fine mesh lattice counts") {
    CellGeometry<2> g;
    g.semiaxes.setConstant(0.25);
    Vec<2> lo = Vec<2>::Zero(), hi = Vec<2>::Ones();

    auto m2 = build_fine_mesh(lo, hi, g, 0.5, 0.5 / 8);
    REQUIRE(m2.num_inclusions() == 4);
    std::set<std::pair<long long, long long>> centers;
    for (auto& c : m2.inclusion_centers)
        centers.insert({llround(c[0] * 1e9), llround(c[1] * 1e9)});
    CHECK(centers.count({250000000, 250000000}) == 1);
    CHECK(centers.count({750000000, 750000000}) == 1);

    auto m3 = build_fine_mesh(lo, hi, g, 1.0 / 3.0, 1.0 / 24.0);
    CHECK(m3.num_inclusions() == 9);
}

TEST_CASE("fine mesh solid volume matches lattice times cell volume") {
    CellGeometry<2> g;
    g.semiaxes.setConstant(0.25);
    Vec<2> lo = Vec<2>::Zero(), hi = Vec<2>::Ones();
    double eps = 0.5;
    auto m = build_fine_mesh(lo, hi, g, eps, eps / 32);
    double expect = 4 * eps * eps * M_PI * 0.0625;
    double got = m.measure("solid");
    CHECK(std::abs(got - expect) / expect < 2e-3);
    // per-inclusion shoelace oracle agrees
    double sh = 0;
    for (int q = 0; q < m.num_inclusions(); ++q) sh += shoelace_area(m, q);
    CHECK(sh == Catch::Approx(got).margin(1e-12));
}

TEST_CASE("epsilon too large leaves a pure-fluid mesh with a warning") {
    CellGeometry<2> g;
    g.semiaxes.setConstant(0.25);
    Vec<2> lo = Vec<2>::Zero();
    Vec<2> hi(0.4, 0.4);
    auto m = build_fine_mesh(lo, hi, g, 0.5, 0.05);
    CHECK(m.num_inclusions() == 0);
    CHECK(m.measure("solid") == 0.0);
    CHECK(!m.warnings.empty());
}

TEST_CASE("point location finds cells after snapping") {
    CellGeometry<2> g;
    g.semiaxes.setConstant(0.25);
    auto m = build_cell_mesh(g, 0.05);
    Rng rng(9);
    for (int t = 0; t < 200; ++t) {
        Vec<2> x(rng.uniform(), rng.uniform());
        auto loc = m.locate(x);
        REQUIRE(loc.has_value());
        // verify the barycentric reconstruction maps back to x
        const auto& K = m.cells[loc->cell];
        Vec<2> y = m.vertices[K[0]] * (1.0 - loc->bary_rest.sum());
        for (int i = 0; i < 2; ++i) y += m.vertices[K[i + 1]] * loc->bary_rest[i];
        CHECK((y - x).norm() < 1e-10);
    }
}
