#pragma once

#include "mrhomog/mesh.hpp"

#include <cmath>
#include <set>

namespace mrhomog {

namespace detail {

/// Structured symmetric triangulation of a box.
/// 2D: each grid square splits into 4 triangles around its center.
/// 3D: each grid cube splits into 24 tets around its center (6 faces x 4).
/// Both patterns are invariant under reflections across grid midplanes,
/// which downstream isotropy tests rely on.
template <int D>
struct StructuredGrid {
    Mesh<D> mesh;
    std::array<int, D> N{};
    Vec<D> lo, L;

    int corner(const std::array<int, D>& idx) const {
        int id = 0, stride = 1;
        for (int ax = 0; ax < D; ++ax) {
            id += idx[ax] * stride;
            stride *= N[ax] + 1;
        }
        return id;
    }

    Vec<D> coord(const std::array<int, D>& idx) const {
        Vec<D> x;
        for (int ax = 0; ax < D; ++ax) x[ax] = lo[ax] + (double(idx[ax]) / double(N[ax])) * L[ax];
        return x;
    }
};

inline StructuredGrid<2> make_grid2(const Vec<2>& lo, const Vec<2>& L, std::array<int, 2> N) {
    StructuredGrid<2> g;
    g.N = N;
    g.lo = lo;
    g.L = L;
    auto& m = g.mesh;
    m.box_lo = lo;
    m.box_hi = lo + L;
    for (int ax = 0; ax < 2; ++ax) {
        m.grid_dims[ax] = N[ax];
        m.grid_h[ax] = L[ax] / N[ax];
    }
    for (int j = 0; j <= N[1]; ++j)
        for (int i = 0; i <= N[0]; ++i)
            m.vertices.push_back(g.coord({i, j}));
    int centers0 = m.num_vertices();
    auto center_id = [&](int i, int j) { return centers0 + i + j * N[0]; };
    for (int j = 0; j < N[1]; ++j)
        for (int i = 0; i < N[0]; ++i) {
            Vec<2> c;
            c[0] = lo[0] + ((i + 0.5) / N[0]) * L[0];
            c[1] = lo[1] + ((j + 0.5) / N[1]) * L[1];
            m.vertices.push_back(c);
        }
    for (int j = 0; j < N[1]; ++j)
        for (int i = 0; i < N[0]; ++i) {
            int v00 = g.corner({i, j}), v10 = g.corner({i + 1, j});
            int v01 = g.corner({i, j + 1}), v11 = g.corner({i + 1, j + 1});
            int c = center_id(i, j);
            m.cells.push_back({c, v00, v10});
            m.cells.push_back({c, v10, v11});
            m.cells.push_back({c, v11, v01});
            m.cells.push_back({c, v01, v00});
        }
    // per-axis periodic pairing of boundary corners (hi face -> lo face)
    for (int ax = 0; ax < 2; ++ax) {
        auto& pp = m.periodic_axis_pair[ax];
        pp.assign(m.num_vertices(), -1);
        for (int j = 0; j <= N[1]; ++j)
            for (int i = 0; i <= N[0]; ++i) {
                std::array<int, 2> idx{i, j};
                if (idx[ax] == N[ax]) {
                    std::array<int, 2> mi = idx;
                    mi[ax] = 0;
                    pp[g.corner(idx)] = g.corner(mi);
                }
            }
    }
    return g;
}

inline StructuredGrid<3> make_grid3(const Vec<3>& lo, const Vec<3>& L, std::array<int, 3> N) {
    StructuredGrid<3> g;
    g.N = N;
    g.lo = lo;
    g.L = L;
    auto& m = g.mesh;
    m.box_lo = lo;
    m.box_hi = lo + L;
    for (int ax = 0; ax < 3; ++ax) {
        m.grid_dims[ax] = N[ax];
        m.grid_h[ax] = L[ax] / N[ax];
    }
    for (int k = 0; k <= N[2]; ++k)
        for (int j = 0; j <= N[1]; ++j)
            for (int i = 0; i <= N[0]; ++i)
                m.vertices.push_back(g.coord({i, j, k}));

    auto frac = [&](int ax, double t) { return lo[ax] + t / N[ax] * L[ax]; };

    // face centers per axis; fc[ax] maps (i,j,k) with index i along ax taking
    // values 0..N[ax] and the other two 0..N-1
    std::array<int, 3> fc0{};
    std::array<std::array<int, 3>, 3> fdim{};
    for (int ax = 0; ax < 3; ++ax) {
        fdim[ax] = {N[0], N[1], N[2]};
        fdim[ax][ax] += 1;
    }
    for (int ax = 0; ax < 3; ++ax) {
        fc0[ax] = g.mesh.num_vertices();
        for (int k = 0; k < fdim[ax][2]; ++k)
            for (int j = 0; j < fdim[ax][1]; ++j)
                for (int i = 0; i < fdim[ax][0]; ++i) {
                    std::array<int, 3> idx{i, j, k};
                    Vec<3> c;
                    for (int a2 = 0; a2 < 3; ++a2)
                        c[a2] = (a2 == ax) ? frac(a2, double(idx[a2]))
                                           : frac(a2, idx[a2] + 0.5);
                    g.mesh.vertices.push_back(c);
                }
    }
    auto face_id = [&](int ax, std::array<int, 3> idx) {
        return fc0[ax] + idx[0] + fdim[ax][0] * (idx[1] + fdim[ax][1] * idx[2]);
    };
    int cc0 = g.mesh.num_vertices();
    auto cube_id = [&](int i, int j, int k) { return cc0 + i + N[0] * (j + N[1] * k); };
    for (int k = 0; k < N[2]; ++k)
        for (int j = 0; j < N[1]; ++j)
            for (int i = 0; i < N[0]; ++i) {
                Vec<3> c;
                c[0] = frac(0, i + 0.5);
                c[1] = frac(1, j + 0.5);
                c[2] = frac(2, k + 0.5);
                g.mesh.vertices.push_back(c);
            }

    // 24 tets per cube: (cube center, face center, face edge)
    for (int k = 0; k < N[2]; ++k)
        for (int j = 0; j < N[1]; ++j)
            for (int i = 0; i < N[0]; ++i) {
                int C = cube_id(i, j, k);
                std::array<int, 3> base{i, j, k};
                for (int ax = 0; ax < 3; ++ax)
                    for (int side = 0; side <= 1; ++side) {
                        std::array<int, 3> fidx = base;
                        fidx[ax] += side;
                        int F = face_id(ax, fidx);
                        int a1 = (ax + 1) % 3, a2 = (ax + 2) % 3;
                        // four corners of that face
                        auto corner_at = [&](int d1, int d2) {
                            std::array<int, 3> ci = base;
                            ci[ax] += side;
                            ci[a1] += d1;
                            ci[a2] += d2;
                            return g.corner(ci);
                        };
                        int q00 = corner_at(0, 0), q10 = corner_at(1, 0);
                        int q11 = corner_at(1, 1), q01 = corner_at(0, 1);
                        g.mesh.cells.push_back({C, F, q00, q10});
                        g.mesh.cells.push_back({C, F, q10, q11});
                        g.mesh.cells.push_back({C, F, q11, q01});
                        g.mesh.cells.push_back({C, F, q01, q00});
                    }
            }

    for (int ax = 0; ax < 3; ++ax) {
        auto& pp = g.mesh.periodic_axis_pair[ax];
        pp.assign(g.mesh.num_vertices(), -1);
        // corners
        for (int k = 0; k <= N[2]; ++k)
            for (int j = 0; j <= N[1]; ++j)
                for (int i = 0; i <= N[0]; ++i) {
                    std::array<int, 3> idx{i, j, k};
                    if (idx[ax] == N[ax]) {
                        auto mi = idx;
                        mi[ax] = 0;
                        pp[g.corner(idx)] = g.corner(mi);
                    }
                }
        // face centers of faces orthogonal to ax sitting on the hi boundary
        for (int k = 0; k < fdim[ax][2]; ++k)
            for (int j = 0; j < fdim[ax][1]; ++j)
                for (int i = 0; i < fdim[ax][0]; ++i) {
                    std::array<int, 3> idx{i, j, k};
                    if (idx[ax] == N[ax]) {
                        auto mi = idx;
                        mi[ax] = 0;
                        pp[face_id(ax, idx)] = face_id(ax, mi);
                    }
                }
    }
    return g;
}

/// Edge-flip repair for triangles inverted by the snap. Inversions occur as
/// slivers whose three vertices all land on one circular arc; flipping the
/// chord edge against the inward neighbor restores an embedding. The flip
/// criterion is purely geometric, so mirror-symmetric meshes stay symmetric.
inline void repair_flipped_2d(Mesh<2>& m, const std::vector<double>& phi,
                              const std::vector<double>& orig_sign) {
    const double zero_band = 1e-12;
    for (int pass = 0; pass < 8; ++pass) {
        std::vector<int> flipped;
        for (int c = 0; c < m.num_cells(); ++c)
            if (m.signed_volume(c) * orig_sign[c] <= 1e-15) flipped.push_back(c);
        if (flipped.empty()) return;

        std::map<std::array<int, 2>, std::vector<int>> e2c;
        for (int c = 0; c < m.num_cells(); ++c)
            for (int i = 0; i < 3; ++i) {
                int a = m.cells[c][i], b = m.cells[c][(i + 1) % 3];
                e2c[{std::min(a, b), std::max(a, b)}].push_back(c);
            }

        bool changed = false;
        std::vector<char> touched(m.num_cells(), 0);
        for (int t : flipped) {
            if (touched[t]) continue;
            // candidate edges, longest first
            std::array<std::pair<double, int>, 3> order;
            for (int i = 0; i < 3; ++i) {
                int a = m.cells[t][i], b = m.cells[t][(i + 1) % 3];
                order[i] = {-(m.vertices[a] - m.vertices[b]).squaredNorm(), i};
            }
            std::sort(order.begin(), order.end());
            for (auto [negl, i] : order) {
                int a = m.cells[t][i], b = m.cells[t][(i + 1) % 3];
                int cthird = m.cells[t][(i + 2) % 3];
                auto& adj = e2c[{std::min(a, b), std::max(a, b)}];
                if (adj.size() != 2) continue;
                int s = adj[0] == t ? adj[1] : adj[0];
                if (touched[s]) continue;
                int d = -1;
                for (int k = 0; k < 3; ++k)
                    if (m.cells[s][k] != a && m.cells[s][k] != b) d = m.cells[s][k];
                // the new edge must not cross the interface
                if (phi[cthird] * phi[d] < 0 && std::abs(phi[cthird]) > zero_band &&
                    std::abs(phi[d]) > zero_band)
                    continue;
                auto area2 = [&](int p, int q, int r) {
                    Vec<2> u = m.vertices[q] - m.vertices[p];
                    Vec<2> v = m.vertices[r] - m.vertices[p];
                    return u[0] * v[1] - u[1] * v[0];
                };
                std::array<int, 3> n1{a, d, cthird}, n2{b, cthird, d};
                if (area2(n1[0], n1[1], n1[2]) <= 1e-15) std::swap(n1[1], n1[2]);
                if (area2(n2[0], n2[1], n2[2]) <= 1e-15) std::swap(n2[1], n2[2]);
                if (area2(n1[0], n1[1], n1[2]) <= 1e-15 || area2(n2[0], n2[1], n2[2]) <= 1e-15)
                    continue;
                m.cells[t] = n1;
                m.cells[s] = n2;
                touched[t] = touched[s] = 1;
                changed = true;
                break;
            }
        }
        if (!changed)
            throw NumericalError("mesh repair stalled with inverted triangles; adjust h");
    }
    for (int c = 0; c < m.num_cells(); ++c)
        if (m.signed_volume(c) * orig_sign[c] <= 1e-15)
            throw NumericalError("inverted triangles persist after repair; adjust h");
}

/// Snap near-interface vertices onto the analytic surfaces and tag cells.
template <int D>
void snap_and_tag(Mesh<D>& m, const std::vector<CellGeometry<D>>& inclusions,
                  bool forbid_boundary_motion = true) {
    const int V = m.num_vertices();
    std::vector<double> phi(V);
    std::vector<int> which(V, -1);
    auto eval_phi = [&](int v) {
        double best = 1e300;
        int w = -1;
        for (int q = 0; q < int(inclusions.size()); ++q) {
            double p = inclusions[q].level(m.vertices[v]);
            if (p < best) { best = p; w = q; }
        }
        phi[v] = best;
        which[v] = w;
    };
    for (int v = 0; v < V; ++v) eval_phi(v);

    // collect unique cell edges
    std::set<std::array<int, 2>> edges;
    for (const auto& K : m.cells)
        for (int a = 0; a <= D; ++a)
            for (int b = a + 1; b <= D; ++b)
                edges.insert({std::min(K[a], K[b]), std::max(K[a], K[b])});

    std::vector<double> orig_sign(m.num_cells());
    for (int c = 0; c < m.num_cells(); ++c)
        orig_sign[c] = m.signed_volume(c) > 0 ? 1.0 : -1.0;

    std::vector<char> mark(V, 0);
    const double zero_band = 1e-12;
    for (int v = 0; v < V; ++v)
        if (which[v] >= 0 && std::abs(phi[v]) < zero_band) mark[v] = 1;
    for (auto [a, b] : edges) {
        double pa = phi[a], pb = phi[b];
        if (pa * pb < 0 && std::abs(pa) > zero_band && std::abs(pb) > zero_band) {
            double t = pa / (pa - pb); // intersection parameter from a
            if (t < 0.5) mark[a] = 1;
            else if (t > 0.5) mark[b] = 1;
            else mark[pa < 0 ? a : b] = 1; // tie: the inside endpoint
        }
    }

    const double btol = 1e-12;
    for (int v = 0; v < V; ++v) {
        if (!mark[v]) continue;
        if (forbid_boundary_motion)
            for (int ax = 0; ax < D; ++ax)
                if (std::abs(m.vertices[v][ax] - m.box_lo[ax]) < btol ||
                    std::abs(m.vertices[v][ax] - m.box_hi[ax]) < btol)
                    throw NumericalError(
                        "interface reaches the domain boundary grid layer; refine h");
        m.vertices[v] = inclusions[which[v]].project(m.vertices[v]);
        phi[v] = 0.0;
    }

    // no strictly crossing edge may remain
    for (auto [a, b] : edges)
        require(!(phi[a] * phi[b] < 0 && std::abs(phi[a]) > zero_band &&
                  std::abs(phi[b]) > zero_band),
                "internal: crossing edge after interface snapping");

    // undo any orientation flips the projection caused
    bool any_flipped = false;
    for (int c = 0; c < m.num_cells(); ++c)
        if (m.signed_volume(c) * orig_sign[c] <= 1e-15) any_flipped = true;
    if (any_flipped) {
        if constexpr (D == 2) repair_flipped_2d(m, phi, orig_sign);
        else
            throw NumericalError(
                "interface snapping inverted tetrahedra at this resolution; adjust h");
    }

    m.cell_tags.assign(m.num_cells(), TAG_FLUID);
    for (int c = 0; c < m.num_cells(); ++c) {
        Vec<D> x = m.centroid(c);
        double best = 1e300;
        int w = -1;
        for (int q = 0; q < int(inclusions.size()); ++q) {
            double p = inclusions[q].level(x);
            if (p < best) { best = p; w = q; }
        }
        if (best < 0) m.cell_tags[c] = TAG_SOLID_BASE + w;
    }

}

template <int D>
void check_resolution(const Mesh<D>& m) {
    const int min_facets = (D == 2) ? 8 : 32;
    std::vector<int> count(m.num_inclusions(), 0);
    for (const auto& f : m.interface_facets) count[f.inclusion]++;
    for (int q = 0; q < m.num_inclusions(); ++q)
        if (count[q] < min_facets)
            throw NumericalError(
                "geometry-resolution error: inclusion " + std::to_string(q) + " meshed by " +
                std::to_string(count[q]) + " interface facets (need >= " +
                std::to_string(min_facets) + "); decrease h");
}

} // namespace detail

/// Mesh of the unit cell Y=(0,1)^D with one centered inclusion, fitted to
/// the interface, with per-axis periodic vertex pairing.
template <int D>
Mesh<D> build_cell_mesh(const CellGeometry<D>& geom, double h) {
    require(h > 0, "build_cell_mesh: h must be positive");
    geom.validate();
    int N = std::max(2, int(std::lround(1.0 / h)));
    std::array<int, D> Ns{};
    Ns.fill(N);
    Vec<D> lo = Vec<D>::Zero(), L = Vec<D>::Ones();
    Mesh<D> m;
    if constexpr (D == 2) m = detail::make_grid2(lo, L, Ns).mesh;
    else m = detail::make_grid3(lo, L, Ns).mesh;
    m.periodic = true;

    std::vector<CellGeometry<D>> incl;
    if (!geom.empty()) {
        incl.push_back(geom);
        m.inclusion_centers.push_back(geom.center);
        m.inclusion_geoms.push_back(geom);
    }
    detail::snap_and_tag(m, incl);
    m.finalize();
    if (!incl.empty()) detail::check_resolution(m);
    return m;
}

/// Mesh of an axis-aligned box with an epsilon-periodic array of inclusions.
/// Only lattice cells fully contained in the box carry an inclusion; cut
/// cells near the boundary stay pure fluid.
template <int D>
Mesh<D> build_fine_mesh(const Vec<D>& lo, const Vec<D>& hi, const CellGeometry<D>& geom,
                        double epsilon, double h) {
    require(epsilon > 0 && epsilon <= 1, "build_fine_mesh: epsilon must lie in (0,1]");
    require(h > 0, "build_fine_mesh: h must be positive");
    geom.validate();
    Vec<D> L = hi - lo;
    std::array<int, D> Ns{};
    for (int ax = 0; ax < D; ++ax) {
        Ns[ax] = std::max(1, int(std::lround(L[ax] / h)));
    }
    Mesh<D> m;
    if constexpr (D == 2) m = detail::make_grid2(lo, L, Ns).mesh;
    else m = detail::make_grid3(lo, L, Ns).mesh;
    m.periodic = false;

    std::vector<CellGeometry<D>> incl;
    if (!geom.empty()) {
        const double tol = 1e-12;
        std::array<int, D> ilo{}, ihi{};
        for (int ax = 0; ax < D; ++ax) {
            ilo[ax] = int(std::ceil(lo[ax] / epsilon - tol));
            ihi[ax] = int(std::floor(hi[ax] / epsilon + tol)) - 1;
        }
        std::array<int, D> it = ilo;
        bool any_range = true;
        for (int ax = 0; ax < D; ++ax) any_range = any_range && ilo[ax] <= ihi[ax];
        while (any_range) {
            bool inside = true;
            for (int ax = 0; ax < D; ++ax)
                inside = inside && (epsilon * it[ax] >= lo[ax] - tol) &&
                         (epsilon * (it[ax] + 1) <= hi[ax] + tol);
            if (inside) {
                CellGeometry<D> gi = geom;
                for (int ax = 0; ax < D; ++ax) {
                    gi.center[ax] = epsilon * (geom.center[ax] + it[ax]);
                    gi.semiaxes[ax] = epsilon * geom.semiaxes[ax];
                }
                incl.push_back(gi);
                m.inclusion_centers.push_back(gi.center);
                m.inclusion_geoms.push_back(gi);
            }
            int ax = 0;
            while (ax < D) {
                if (++it[ax] <= ihi[ax]) break;
                it[ax] = ilo[ax];
                ++ax;
            }
            if (ax == D) break;
        }
    }
    if (incl.empty() && !geom.empty())
        m.warnings.push_back("no lattice cell fits inside the domain; mesh is pure fluid");
    detail::snap_and_tag(m, incl);
    m.finalize();
    if (!incl.empty()) detail::check_resolution(m);
    return m;
}

} // namespace mrhomog
