#pragma once

#include "mrhomog/common.hpp"
#include "mrhomog/geometry.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <vector>

namespace mrhomog {

constexpr int TAG_FLUID = 0;
/// Solid cells carry TAG_SOLID_BASE + inclusion index.
constexpr int TAG_SOLID_BASE = 1;

enum class FacetKind { Interface, Outer, Periodic };

template <int D>
struct Facet {
    std::array<int, D> verts{}; // sorted vertex ids
    FacetKind kind = FacetKind::Outer;
    int inclusion = -1; // for Interface
    int axis = -1;      // for Periodic / Outer: box axis
    int side = -1;      // 0 = min face, 1 = max face
    int cell_in = -1;   // adjacent solid cell (Interface) or the only cell (boundary)
    int cell_out = -1;  // adjacent fluid cell (Interface)
};

/// Conforming simplicial mesh of a box with tagged phases, interface facets
/// and (for unit-cell meshes) periodic vertex pairing. Immutable once built.
template <int D>
class Mesh {
public:
    using Cell = std::array<int, D + 1>;

    std::vector<Vec<D>> vertices;
    std::vector<Cell> cells;
    std::vector<int> cell_tags; // TAG_FLUID or TAG_SOLID_BASE + i

    Vec<D> box_lo = Vec<D>::Zero();
    Vec<D> box_hi = Vec<D>::Ones();

    std::vector<Vec<D>> inclusion_centers;
    std::vector<CellGeometry<D>> inclusion_geoms; // scaled, absolute coordinates

    std::vector<Facet<D>> interface_facets;
    std::vector<Facet<D>> boundary_facets;

    /// Per-axis pairing: vertex on the hi face -> matching vertex on the lo
    /// face (-1 elsewhere). Full masters are the per-axis maps composed.
    std::array<std::vector<int>, D> periodic_axis_pair;
    bool periodic = false;

    /// Fully composed master of a vertex (identity when not a slave).
    int periodic_rep(int v) const {
        for (int guard = 0; guard < 2 * D + 2; ++guard) {
            int next = v;
            for (int ax = 0; ax < D; ++ax)
                if (!periodic_axis_pair[ax].empty() && periodic_axis_pair[ax][next] >= 0)
                    next = periodic_axis_pair[ax][next];
            if (next == v) return v;
            v = next;
        }
        return v;
    }

    std::vector<std::string> warnings;

    /// structured background grid (used for fast point location)
    std::array<int, D> grid_dims{};
    Vec<D> grid_h = Vec<D>::Ones();

    // ---- edges (built by finalize, used by quadratic spaces) ----
    std::vector<std::array<int, 2>> edges;          // sorted vertex pairs
    std::map<std::array<int, 2>, int> edge_index;

    int num_vertices() const { return int(vertices.size()); }
    int num_cells() const { return int(cells.size()); }
    int num_inclusions() const { return int(inclusion_centers.size()); }

    bool cell_is_solid(int c) const { return cell_tags[c] >= TAG_SOLID_BASE; }
    int cell_inclusion(int c) const { return cell_tags[c] - TAG_SOLID_BASE; }

    double signed_volume(int c) const {
        const auto& K = cells[c];
        Mat<D> J;
        for (int i = 0; i < D; ++i) J.col(i) = vertices[K[i + 1]] - vertices[K[0]];
        double det = J.determinant();
        return det / (D == 2 ? 2.0 : 6.0);
    }
    double volume(int c) const { return std::abs(signed_volume(c)); }

    Vec<D> centroid(int c) const {
        Vec<D> x = Vec<D>::Zero();
        for (int i = 0; i <= D; ++i) x += vertices[cells[c][i]];
        return x / double(D + 1);
    }

    /// Sum of simplex measures matching a tag predicate.
    template <class Pred>
    double measure_if(Pred&& keep) const {
        double v = 0;
        for (int c = 0; c < num_cells(); ++c)
            if (keep(cell_tags[c])) v += volume(c);
        return v;
    }
    double measure_all() const { return measure_if([](int) { return true; }); }
    double measure_fluid() const { return measure_if([](int t) { return t == TAG_FLUID; }); }
    double measure_solid() const { return measure_if([](int t) { return t >= TAG_SOLID_BASE; }); }
    /// Named-tag variant: "all", "fluid", "solid", "solid:<i>".
    double measure(const std::string& sel) const {
        if (sel == "all") return measure_all();
        if (sel == "fluid") return measure_fluid();
        if (sel == "solid") return measure_solid();
        if (sel.rfind("solid:", 0) == 0) {
            int i = std::stoi(sel.substr(6));
            return measure_if([&](int t) { return t == TAG_SOLID_BASE + i; });
        }
        throw ArgumentError("measure: unknown tag selector '" + sel + "'");
    }

    /// Orient cells positively, build edges, facets and the locate index.
    void finalize() {
        for (int c = 0; c < num_cells(); ++c)
            if (signed_volume(c) < 0) std::swap(cells[c][0], cells[c][1]);

        build_edges();
        build_facets();
        build_buckets();
    }

    // ---- point location ----

    struct Location {
        int cell = -1;
        Vec<D> bary_rest; // barycentric coords w.r.t. vertices 1..D (coord 0 implied)
    };

    /// Locate a point; tolerant to points marginally outside a cell.
    /// Returns the cell with the largest minimum barycentric coordinate.
    std::optional<Location> locate(const Vec<D>& x, double tol = 1e-10) const {
        double best = -1e300;
        Location bestL;
        auto consider = [&](int c) {
            Mat<D> J;
            const auto& K = cells[c];
            for (int i = 0; i < D; ++i) J.col(i) = vertices[K[i + 1]] - vertices[K[0]];
            Vec<D> b = J.partialPivLu().solve(x - vertices[K[0]]);
            double mn = 1.0 - b.sum();
            for (int i = 0; i < D; ++i) mn = std::min(mn, b[i]);
            if (mn > best) { best = mn; bestL = {c, b}; }
        };
        // candidate cells from the bucket of x, then its neighbors
        int b = bucket_of(x);
        if (b >= 0)
            for (int c : buckets_[b]) consider(c);
        if (best >= -tol) return bestL;
        for (int nb : bucket_neighbors(x))
            for (int c : buckets_[nb]) consider(c);
        if (best >= -tol) return bestL;
        return std::nullopt;
    }

private:
    std::vector<std::vector<int>> buckets_;

    void build_edges() {
        edges.clear();
        edge_index.clear();
        auto add = [&](int a, int b) {
            std::array<int, 2> e{std::min(a, b), std::max(a, b)};
            if (edge_index.emplace(e, int(edges.size())).second) edges.push_back(e);
        };
        for (const auto& K : cells)
            for (int i = 0; i <= D; ++i)
                for (int j = i + 1; j <= D; ++j) add(K[i], K[j]);
    }

    void build_facets() {
        interface_facets.clear();
        boundary_facets.clear();
        // facet -> (cell, opposite local vertex)
        std::map<std::array<int, D>, std::vector<int>> adj;
        for (int c = 0; c < num_cells(); ++c) {
            for (int skip = 0; skip <= D; ++skip) {
                std::array<int, D> f{};
                int k = 0;
                for (int i = 0; i <= D; ++i)
                    if (i != skip) f[k++] = cells[c][i];
                std::sort(f.begin(), f.end());
                adj[f].push_back(c);
            }
        }
        const double btol = 1e-12;
        for (auto& [f, cs] : adj) {
            if (cs.size() == 2) {
                int t0 = cell_tags[cs[0]], t1 = cell_tags[cs[1]];
                if ((t0 == TAG_FLUID) != (t1 == TAG_FLUID)) {
                    Facet<D> F;
                    F.verts = f;
                    F.kind = FacetKind::Interface;
                    int solid = (t0 >= TAG_SOLID_BASE) ? cs[0] : cs[1];
                    int fluid = (solid == cs[0]) ? cs[1] : cs[0];
                    F.cell_in = solid;
                    F.cell_out = fluid;
                    F.inclusion = cell_tags[solid] - TAG_SOLID_BASE;
                    interface_facets.push_back(F);
                }
            } else if (cs.size() == 1) {
                Facet<D> F;
                F.verts = f;
                F.kind = periodic ? FacetKind::Periodic : FacetKind::Outer;
                F.cell_in = cs[0];
                for (int ax = 0; ax < D; ++ax) {
                    bool lo = true, hi = true;
                    for (int v : f) {
                        lo = lo && std::abs(vertices[v][ax] - box_lo[ax]) < btol;
                        hi = hi && std::abs(vertices[v][ax] - box_hi[ax]) < btol;
                    }
                    if (lo) { F.axis = ax; F.side = 0; }
                    if (hi) { F.axis = ax; F.side = 1; }
                }
                boundary_facets.push_back(F);
            }
        }
    }

    int bucket_of(const Vec<D>& x) const {
        int idx = 0, stride = 1;
        for (int ax = 0; ax < D; ++ax) {
            int i = int(std::floor((x[ax] - box_lo[ax]) / grid_h[ax]));
            i = std::clamp(i, 0, grid_dims[ax] - 1);
            idx += i * stride;
            stride *= grid_dims[ax];
        }
        return idx;
    }

    std::vector<int> bucket_neighbors(const Vec<D>& x) const {
        std::array<int, D> base{};
        for (int ax = 0; ax < D; ++ax) {
            int i = int(std::floor((x[ax] - box_lo[ax]) / grid_h[ax]));
            base[ax] = std::clamp(i, 0, grid_dims[ax] - 1);
        }
        std::vector<int> out;
        std::array<int, D> it{};
        int count = 1;
        for (int ax = 0; ax < D; ++ax) count *= 3;
        for (int q = 0; q < count; ++q) {
            int t = q;
            bool ok = true;
            std::array<int, D> cur{};
            for (int ax = 0; ax < D; ++ax) {
                int off = t % 3 - 1;
                t /= 3;
                cur[ax] = base[ax] + off;
                if (cur[ax] < 0 || cur[ax] >= grid_dims[ax]) ok = false;
            }
            if (!ok) continue;
            int idx = 0, stride = 1;
            for (int ax = 0; ax < D; ++ax) {
                idx += cur[ax] * stride;
                stride *= grid_dims[ax];
            }
            out.push_back(idx);
        }
        (void)it;
        return out;
    }

    void build_buckets() {
        int nb = 1;
        for (int ax = 0; ax < D; ++ax) nb *= std::max(1, grid_dims[ax]);
        buckets_.assign(nb, {});
        for (int c = 0; c < num_cells(); ++c) {
            Vec<D> lo = vertices[cells[c][0]], hi = lo;
            for (int i = 1; i <= D; ++i) {
                lo = lo.cwiseMin(vertices[cells[c][i]]);
                hi = hi.cwiseMax(vertices[cells[c][i]]);
            }
            std::array<int, D> ilo{}, ihi{};
            for (int ax = 0; ax < D; ++ax) {
                ilo[ax] = std::clamp(int(std::floor((lo[ax] - box_lo[ax]) / grid_h[ax] - 1e-12)), 0, grid_dims[ax] - 1);
                ihi[ax] = std::clamp(int(std::floor((hi[ax] - box_lo[ax]) / grid_h[ax] + 1e-12)), 0, grid_dims[ax] - 1);
            }
            std::array<int, D> cur = ilo;
            while (true) {
                int idx = 0, stride = 1;
                for (int ax = 0; ax < D; ++ax) {
                    idx += cur[ax] * stride;
                    stride *= grid_dims[ax];
                }
                buckets_[idx].push_back(c);
                int ax = 0;
                while (ax < D) {
                    if (++cur[ax] <= ihi[ax]) break;
                    cur[ax] = ilo[ax];
                    ++ax;
                }
                if (ax == D) break;
            }
        }
    }
};

} // namespace mrhomog
