#pragma once

#include "mrhomog/fe.hpp"
#include "mrhomog/tensor.hpp"

#include <functional>

namespace mrhomog {

/// Linear-affine constraints over the concatenated dofs of a multi-field
/// system. Every full dof is either free, fixed to a value, aliased to
/// another full dof (periodicity), or an affine combination of auxiliary
/// unknowns (rigid-body parameters, rotated boundary frames).
///
/// build() produces x_full = T x_red + offset, where x_red stacks the
/// surviving free dofs and the auxiliary unknowns.
class Constraints {
public:
    explicit Constraints(int n_full) : n_full_(n_full), entries_(n_full) {}

    int add_aux(int count = 1) {
        int id = n_aux_;
        n_aux_ += count;
        return id;
    }

    void fix(int dof, double value) {
        auto& e = entry(dof, State::Fixed, "fix");
        e.offset = value;
    }

    /// dof := master dof (chains allowed; masters may themselves be slaves)
    void alias(int dof, int master) {
        auto& e = entry(dof, State::Aliased, "alias");
        e.terms = {{master, 1.0}};
    }

    /// dof := sum coeff * aux + offset
    void affine(int dof, std::vector<std::pair<int, double>> aux_terms, double offset = 0) {
        auto& e = entry(dof, State::Affine, "affine");
        e.terms = std::move(aux_terms);
        e.offset = offset;
    }

    bool is_constrained(int dof) const { return entries_[dof].st != State::Free; }
    int num_full() const { return n_full_; }
    int num_aux() const { return n_aux_; }

    struct Reducer {
        SparseMat T;       // n_full x n_red
        VectorXd offset;   // n_full
        int n_red = 0;
        int n_free = 0;    // free dofs precede aux unknowns in x_red
        std::vector<int> free_index; // full dof -> reduced index (-1 if constrained)
        int aux_base = 0;  // reduced index of aux unknown 0
    };

    Reducer build() const {
        Reducer R;
        R.free_index.assign(n_full_, -1);
        int nf = 0;
        for (int d = 0; d < n_full_; ++d)
            if (entries_[d].st == State::Free) R.free_index[d] = nf++;
        R.n_free = nf;
        R.aux_base = nf;
        R.n_red = nf + n_aux_;
        R.offset = VectorXd::Zero(n_full_);

        std::vector<Triplet> trips;
        trips.reserve(n_full_ * 2);
        for (int d = 0; d < n_full_; ++d) {
            const Entry& e = entries_[d];
            switch (e.st) {
            case State::Free:
                trips.emplace_back(d, R.free_index[d], 1.0);
                break;
            case State::Fixed:
                R.offset[d] = e.offset;
                break;
            case State::Affine:
                R.offset[d] = e.offset;
                for (auto [aux, c] : e.terms) trips.emplace_back(d, nf + aux, c);
                break;
            case State::Aliased: {
                // resolve chains down to a non-aliased representative
                int cur = d;
                double scale = 1.0;
                int guard = 0;
                while (entries_[cur].st == State::Aliased) {
                    require(entries_[cur].terms.size() == 1, "alias must have one master");
                    cur = entries_[cur].terms[0].first;
                    require(++guard < 64, "alias chain too long (cycle?)");
                }
                const Entry& m = entries_[cur];
                if (m.st == State::Free) {
                    trips.emplace_back(d, R.free_index[cur], scale);
                } else if (m.st == State::Fixed) {
                    R.offset[d] = m.offset;
                } else { // Affine master
                    R.offset[d] = m.offset;
                    for (auto [aux, c] : m.terms) trips.emplace_back(d, nf + aux, c);
                }
                break;
            }
            }
        }
        R.T.resize(n_full_, R.n_red);
        R.T.setFromTriplets(trips.begin(), trips.end());
        return R;
    }

private:
    enum class State { Free, Fixed, Aliased, Affine };
    struct Entry {
        State st = State::Free;
        double offset = 0;
        std::vector<std::pair<int, double>> terms;
    };

    Entry& entry(int dof, State st, const char* what) {
        require(dof >= 0 && dof < n_full_, std::string(what) + ": dof out of range");
        require(entries_[dof].st == State::Free,
                std::string(what) + ": dof constrained twice");
        entries_[dof].st = st;
        return entries_[dof];
    }

    int n_full_;
    int n_aux_ = 0;
    std::vector<Entry> entries_;
};

// ---------------------------------------------------------------------------
// Constraint builders for the spaces used throughout.
// ---------------------------------------------------------------------------

template <int D>
bool node_on_box_boundary(const FESpace<D>& sp, int node, int* axis = nullptr,
                          double tol = 1e-12) {
    Vec<D> x = sp.node_position(node);
    const auto& m = *sp.mesh;
    for (int ax = 0; ax < D; ++ax)
        if (std::abs(x[ax] - m.box_lo[ax]) < tol || std::abs(x[ax] - m.box_hi[ax]) < tol) {
            if (axis) *axis = ax;
            return true;
        }
    return false;
}

/// Fix all components of all boundary nodes (homogeneous or given values).
template <int D>
void apply_dirichlet_boundary(Constraints& C, const FESpace<D>& sp, int dof_offset,
                              const std::type_identity_t<std::function<VectorXd(const Vec<D>&)>>& g = nullptr) {
    for (int n = 0; n < sp.num_scalar_nodes(); ++n) {
        if (!node_on_box_boundary(sp, n)) continue;
        VectorXd v = g ? g(sp.node_position(n)) : VectorXd::Zero(sp.ncomp);
        for (int c = 0; c < sp.ncomp; ++c) C.fix(dof_offset + sp.dof(n, c), v[c]);
    }
}

/// Zero the normal component(s) on the box boundary; a node on several faces
/// gets each face-normal component zeroed.
template <int D>
void apply_normal_trace_zero(Constraints& C, const FESpace<D>& sp, int dof_offset,
                             double tol = 1e-12) {
    const auto& m = *sp.mesh;
    for (int n = 0; n < sp.num_scalar_nodes(); ++n) {
        Vec<D> x = sp.node_position(n);
        for (int ax = 0; ax < D; ++ax)
            if (std::abs(x[ax] - m.box_lo[ax]) < tol || std::abs(x[ax] - m.box_hi[ax]) < tol)
                C.fix(dof_offset + sp.dof(n, ax), 0.0);
    }
}

/// Periodic identification of slave nodes with their masters (all components).
/// Vertices pair through the mesh tables; P2 edge nodes pair through the
/// per-axis images of their endpoints.
template <int D>
void apply_periodic(Constraints& C, const FESpace<D>& sp, int dof_offset) {
    const auto& m = *sp.mesh;
    require(m.periodic, "apply_periodic: mesh has no periodic pairing");
    for (int v = 0; v < m.num_vertices(); ++v) {
        int rep = m.periodic_rep(v);
        if (rep != v)
            for (int c = 0; c < sp.ncomp; ++c)
                C.alias(dof_offset + sp.dof(v, c), dof_offset + sp.dof(rep, c));
    }
    if (sp.order == 2) {
        for (std::size_t e = 0; e < m.edges.size(); ++e) {
            auto [a, b] = m.edges[e];
            // pair along one axis at a time; chains resolve in build()
            for (int ax = 0; ax < D; ++ax) {
                const auto& pp = m.periodic_axis_pair[ax];
                if (pp.empty()) continue;
                int ma = pp[a], mb = pp[b];
                if (ma < 0 || mb < 0) continue; // edge not on the hi face of ax
                std::array<int, 2> key{std::min(ma, mb), std::max(ma, mb)};
                auto it = m.edge_index.find(key);
                require(it != m.edge_index.end(),
                        "apply_periodic: boundary triangulations do not match");
                int me = it->second;
                int node_s = m.num_vertices() + int(e);
                int node_m = m.num_vertices() + it->second;
                (void)me;
                for (int c = 0; c < sp.ncomp; ++c)
                    C.alias(dof_offset + sp.dof(node_s, c), dof_offset + sp.dof(node_m, c));
                break; // a slave edge lies on exactly one hi face per chain step
            }
        }
    }
}

/// Rigid-body constraint: on the closure of each inclusion the velocity is
/// a translation plus a rotation about the inclusion center; those motion
/// parameters become auxiliary unknowns. An optional per-node offset field
/// (e.g. the linear drive of a cell problem) is added on top.
/// Returns the auxiliary id of the first inclusion's parameters; each
/// inclusion takes D + (D==2 ? 1 : 3) consecutive aux slots.
template <int D>
int apply_rigid_inclusions(Constraints& C, const FESpace<D>& sp, int dof_offset,
                           const std::type_identity_t<std::function<VectorXd(const Vec<D>&)>>& offset_field = nullptr,
                           bool include_rotations = true) {
    const auto& m = *sp.mesh;
    const int nrot = include_rotations ? (D == 2 ? 1 : 3) : 0;
    const int per = D + nrot;
    int base = C.add_aux(per * m.num_inclusions());

    // nodes belonging to each inclusion's closed solid region
    std::vector<int> node_incl(sp.num_scalar_nodes(), -1);
    std::vector<int> nodes;
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!m.cell_is_solid(c)) continue;
        int q = m.cell_inclusion(c);
        sp.cell_nodes(c, nodes);
        for (int n : nodes) node_incl[n] = q;
    }
    for (int n = 0; n < sp.num_scalar_nodes(); ++n) {
        int q = node_incl[n];
        if (q < 0) continue;
        Vec<D> r = sp.node_position(n) - m.inclusion_centers[q];
        VectorXd off = offset_field ? offset_field(sp.node_position(n))
                                    : VectorXd::Zero(D);
        for (int c = 0; c < D; ++c) {
            std::vector<std::pair<int, double>> terms;
            terms.emplace_back(base + per * q + c, 1.0); // translation
            if (include_rotations) {
                if constexpr (D == 2) {
                    // omega * perp(r), perp(r) = (-r_y, r_x)
                    double coef = (c == 0) ? -r[1] : r[0];
                    terms.emplace_back(base + per * q + D, coef);
                } else {
                    // (Omega x r)_c = eps_{cjk} Omega_j r_k
                    for (int j = 0; j < 3; ++j) {
                        if (j == c) continue;
                        int k = 3 - c - j;
                        double coef = levi_civita(c + 1, j + 1, k + 1) * r[k];
                        if (coef != 0) terms.emplace_back(base + per * q + D + j, coef);
                    }
                }
            }
            C.affine(dof_offset + sp.dof(n, c), std::move(terms), off[c]);
        }
    }
    return base;
}

/// On interface nodes, rotate the dof frame to (normal, tangents), fix the
/// normal component to a given value and leave the tangential components as
/// auxiliary unknowns. Used by the magnetostatic cell problems, where the
/// trial satisfies (theta + e)·n = 0 on the interface.
template <int D>
void apply_interface_normal_value(Constraints& C, const FESpace<D>& sp, int dof_offset,
                                  const std::type_identity_t<std::function<double(const Vec<D>&, const Vec<D>&)>>& normal_value) {
    const auto& m = *sp.mesh;
    // collect interface nodes (vertices of interface facets, plus P2 edge
    // nodes whose endpoints both lie on the same facet set)
    std::vector<char> on_iface(m.num_vertices(), 0);
    std::vector<int> vert_incl(m.num_vertices(), -1);
    for (const auto& f : m.interface_facets)
        for (int v : f.verts) {
            on_iface[v] = 1;
            vert_incl[v] = f.inclusion;
        }
    auto constrain_node = [&](int node, int incl) {
        Vec<D> x = sp.node_position(node);
        const auto& geom = m.inclusion_geoms[incl];
        Vec<D> nrm = geom.normal(x);
        // orthonormal tangent frame
        std::array<Vec<D>, D - 1> tan;
        if constexpr (D == 2) {
            tan[0] = Vec<D>(-nrm[1], nrm[0]);
        } else {
            Vec<3> a = std::abs(nrm[0]) < 0.9 ? Vec<3>(1, 0, 0) : Vec<3>(0, 1, 0);
            tan[0] = nrm.cross(a).normalized();
            tan[1] = nrm.cross(tan[0]);
        }
        int aux = C.add_aux(D - 1);
        double nv = normal_value(x, nrm);
        for (int c = 0; c < D; ++c) {
            std::vector<std::pair<int, double>> terms;
            for (int t = 0; t < D - 1; ++t)
                if (tan[t][c] != 0) terms.emplace_back(aux + t, tan[t][c]);
            C.affine(dof_offset + sp.dof(node, c), std::move(terms), nv * nrm[c]);
        }
    };
    for (int v = 0; v < m.num_vertices(); ++v)
        if (on_iface[v]) constrain_node(v, vert_incl[v]);
    if (sp.order == 2) {
        for (const auto& f : m.interface_facets) {
            auto le = local_edges<D>();
            (void)le;
            // every edge of an interface facet is an interface edge
            for (int a = 0; a < D; ++a)
                for (int b = a + 1; b < D; ++b) {
                    std::array<int, 2> key{std::min(f.verts[a], f.verts[b]),
                                           std::max(f.verts[a], f.verts[b])};
                    int e = m.edge_index.at(key);
                    int node = m.num_vertices() + e;
                    if (!C.is_constrained(dof_offset + sp.dof(node, 0)))
                        constrain_node(node, f.inclusion);
                }
        }
    }
}

/// Fix pressure dofs whose nodal basis support lies entirely in solid cells.
template <int D>
void apply_zero_on_solid_only(Constraints& C, const FESpace<D>& sp, int dof_offset) {
    const auto& m = *sp.mesh;
    std::vector<char> touches_fluid(sp.num_scalar_nodes(), 0);
    std::vector<int> nodes;
    for (int c = 0; c < m.num_cells(); ++c) {
        if (m.cell_is_solid(c)) continue;
        sp.cell_nodes(c, nodes);
        for (int n : nodes) touches_fluid[n] = 1;
    }
    for (int n = 0; n < sp.num_scalar_nodes(); ++n)
        if (!touches_fluid[n])
            for (int c = 0; c < sp.ncomp; ++c) C.fix(dof_offset + sp.dof(n, c), 0.0);
}

} // namespace mrhomog
