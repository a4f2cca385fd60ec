#pragma once

#include "mrhomog/mesh.hpp"
#include "mrhomog/quadrature.hpp"

#include <functional>

namespace mrhomog {

/// Local edges of the reference simplex, matching the node order of P2.
template <int D>
constexpr auto local_edges() {
    if constexpr (D == 2)
        return std::array<std::array<int, 2>, 3>{{{0, 1}, {0, 2}, {1, 2}}};
    else
        return std::array<std::array<int, 2>, 6>{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
}

template <int D>
constexpr int local_nodes(int order) {
    return order == 1 ? D + 1 : (D + 1) + int(local_edges<D>().size());
}

/// Values and reference gradients of the P1/P2 Lagrange basis at a point.
template <int D>
void basis_eval(int order, const Vec<D>& x, std::vector<double>& val,
                std::vector<Vec<D>>& grad) {
    // barycentric coordinates and their constant gradients
    double lam[D + 2];
    Vec<D> glam[D + 2];
    lam[0] = 1.0;
    glam[0] = Vec<D>::Constant(-1.0);
    for (int i = 0; i < D; ++i) {
        lam[0] -= x[i];
        lam[i + 1] = x[i];
        glam[i + 1] = Vec<D>::Zero();
        glam[i + 1][i] = 1.0;
    }
    const int n = local_nodes<D>(order);
    val.resize(n);
    grad.resize(n);
    if (order == 1) {
        for (int i = 0; i <= D; ++i) {
            val[i] = lam[i];
            grad[i] = glam[i];
        }
        return;
    }
    for (int i = 0; i <= D; ++i) {
        val[i] = lam[i] * (2 * lam[i] - 1);
        grad[i] = (4 * lam[i] - 1) * glam[i];
    }
    auto le = local_edges<D>();
    for (std::size_t e = 0; e < le.size(); ++e) {
        int a = le[e][0], b = le[e][1];
        val[D + 1 + e] = 4 * lam[a] * lam[b];
        grad[D + 1 + e] = 4 * (lam[a] * glam[b] + lam[b] * glam[a]);
    }
}

/// Basis values/gradients tabulated at the points of a quadrature rule.
template <int D>
struct BasisTable {
    int order;
    int nloc;
    std::vector<std::vector<double>> val;   // [q][i]
    std::vector<std::vector<Vec<D>>> grad;  // [q][i] reference gradients
};

template <int D>
const BasisTable<D>& basis_table(int order, const QuadratureRule<D>& rule) {
    static std::map<std::pair<int, const void*>, BasisTable<D>> cache;
    auto key = std::make_pair(order, static_cast<const void*>(&rule));
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    BasisTable<D> t;
    t.order = order;
    t.nloc = local_nodes<D>(order);
    t.val.resize(rule.size());
    t.grad.resize(rule.size());
    for (int q = 0; q < rule.size(); ++q)
        basis_eval<D>(order, rule.points[q], t.val[q], t.grad[q]);
    return cache.emplace(key, std::move(t)).first->second;
}

/// Continuous Lagrange space (P1/P2, scalar or vector valued) on a Mesh.
/// Scalar nodes are vertices (P1) plus edge midpoints (P2); dofs interleave
/// components: dof = node * ncomp + comp.
template <int D>
class FESpace {
public:
    const Mesh<D>* mesh = nullptr;
    int order = 1;
    int ncomp = 1;

    FESpace() = default;
    FESpace(const Mesh<D>& m, int order_, int ncomp_) : mesh(&m), order(order_), ncomp(ncomp_) {
        require(order == 1 || order == 2, "FESpace: order must be 1 or 2");
        require(ncomp == 1 || ncomp == D, "FESpace: scalar or full-vector only");
    }

    int num_scalar_nodes() const {
        return mesh->num_vertices() + (order == 2 ? int(mesh->edges.size()) : 0);
    }
    int num_dofs() const { return num_scalar_nodes() * ncomp; }
    int dof(int node, int comp) const { return node * ncomp + comp; }

    bool node_is_vertex(int node) const { return node < mesh->num_vertices(); }
    int node_edge(int node) const { return node - mesh->num_vertices(); }

    Vec<D> node_position(int node) const {
        if (node_is_vertex(node)) return mesh->vertices[node];
        auto e = mesh->edges[node_edge(node)];
        return 0.5 * (mesh->vertices[e[0]] + mesh->vertices[e[1]]);
    }

    /// Scalar node ids of a cell in local order (vertices then edges).
    void cell_nodes(int c, std::vector<int>& out) const {
        const auto& K = mesh->cells[c];
        out.clear();
        for (int i = 0; i <= D; ++i) out.push_back(K[i]);
        if (order == 2) {
            auto le = local_edges<D>();
            for (auto [a, b] : le) {
                std::array<int, 2> key{std::min(K[a], K[b]), std::max(K[a], K[b])};
                out.push_back(mesh->num_vertices() + mesh->edge_index.at(key));
            }
        }
    }

    /// Nodal interpolation of an analytic function (returns coefficient vector).
    VectorXd interpolate(const std::function<VectorXd(const Vec<D>&)>& f) const {
        VectorXd u(num_dofs());
        for (int n = 0; n < num_scalar_nodes(); ++n) {
            VectorXd v = f(node_position(n));
            for (int c = 0; c < ncomp; ++c) u[dof(n, c)] = v[c];
        }
        return u;
    }
};

/// A coefficient vector bound to its space.
template <int D>
struct Field {
    const FESpace<D>* space = nullptr;
    VectorXd coeffs;

    /// Value at a reference point of a cell.
    VectorXd value(int cell, const Vec<D>& xref) const {
        std::vector<double> val;
        std::vector<Vec<D>> grad;
        basis_eval<D>(space->order, xref, val, grad);
        std::vector<int> nodes;
        space->cell_nodes(cell, nodes);
        VectorXd v = VectorXd::Zero(space->ncomp);
        for (std::size_t i = 0; i < nodes.size(); ++i)
            for (int c = 0; c < space->ncomp; ++c)
                v[c] += coeffs[space->dof(nodes[i], c)] * val[i];
        return v;
    }

    /// Physical gradient G(c, j) = d u_c / d x_j at a reference point.
    MatrixXd gradient(int cell, const Vec<D>& xref) const {
        std::vector<double> val;
        std::vector<Vec<D>> grad;
        basis_eval<D>(space->order, xref, val, grad);
        std::vector<int> nodes;
        space->cell_nodes(cell, nodes);
        const auto& m = *space->mesh;
        Mat<D> J;
        const auto& K = m.cells[cell];
        for (int i = 0; i < D; ++i) J.col(i) = m.vertices[K[i + 1]] - m.vertices[K[0]];
        Mat<D> Jit = J.inverse().transpose();
        MatrixXd G = MatrixXd::Zero(space->ncomp, D);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            Vec<D> g = Jit * grad[i];
            for (int c = 0; c < space->ncomp; ++c)
                G.row(c) += coeffs[space->dof(nodes[i], c)] * g.transpose();
        }
        return G;
    }

    /// Evaluate at a physical point (locates the cell first).
    VectorXd value_at(const Vec<D>& x) const {
        auto loc = space->mesh->locate(x);
        require(loc.has_value(), "Field::value_at: point outside mesh");
        return value(loc->cell, loc->bary_rest);
    }
    MatrixXd gradient_at(const Vec<D>& x) const {
        auto loc = space->mesh->locate(x);
        require(loc.has_value(), "Field::gradient_at: point outside mesh");
        return gradient(loc->cell, loc->bary_rest);
    }
};

/// curl of a 3-vector field from its gradient matrix G(i,j) = d u_i / d x_j.
inline Vec<3> curl3(const MatrixXd& G) {
    return Vec<3>(G(2, 1) - G(1, 2), G(0, 2) - G(2, 0), G(1, 0) - G(0, 1));
}
/// scalar in-plane curl d1 u2 - d2 u1
inline double curl2(const MatrixXd& G) { return G(1, 0) - G(0, 1); }

} // namespace mrhomog
