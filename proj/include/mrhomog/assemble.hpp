#pragma once

#include "mrhomog/constraints.hpp"
#include "mrhomog/tensor.hpp"

namespace mrhomog {

enum class Region { All, Fluid, Solid };

template <int D>
bool region_match(const Mesh<D>& m, int c, Region r) {
    switch (r) {
    case Region::All: return true;
    case Region::Fluid: return !m.cell_is_solid(c);
    case Region::Solid: return m.cell_is_solid(c);
    }
    return false;
}

namespace detail {

template <int D>
struct CellMap {
    Mat<D> J, Jit;
    double detA; // |det J|
    void set(const Mesh<D>& m, int c) {
        const auto& K = m.cells[c];
        for (int i = 0; i < D; ++i) J.col(i) = m.vertices[K[i + 1]] - m.vertices[K[0]];
        detA = std::abs(J.determinant());
        Jit = J.inverse().transpose();
    }
    Vec<D> map(const Mesh<D>& m, int c, const Vec<D>& xref) const {
        return m.vertices[m.cells[c][0]] + J * xref;
    }
};

/// physical gradients of all local basis functions at one quadrature point
template <int D>
void phys_grads(const CellMap<D>& cm, const std::vector<Vec<D>>& ref, std::vector<Vec<D>>& out) {
    out.resize(ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) out[i] = cm.Jit * ref[i];
}

} // namespace detail

// ---------------------------------------------------------------------------
// Bilinear kernels. All append (row, col, value) triplets at given dof
// offsets; "symmetrize" mirrors rectangular blocks for saddle systems.
// ---------------------------------------------------------------------------

/// coeff * int D(u):D(v)
template <int D>
void assemble_symgrad(const FESpace<D>& sp, int off, double coeff, Region reg,
                      std::vector<Triplet>& out) {
    const auto& m = *sp.mesh;
    const auto& rule = simplex_rule<D>(2 * sp.order + 1);
    const auto& bt = basis_table<D>(sp.order, rule);
    detail::CellMap<D> cm;
    std::vector<int> nodes;
    std::vector<Vec<D>> g;
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!region_match(m, c, reg)) continue;
        cm.set(m, c);
        sp.cell_nodes(c, nodes);
        const int n = bt.nloc;
        MatrixXd Ke = MatrixXd::Zero(n * D, n * D);
        for (int q = 0; q < rule.size(); ++q) {
            detail::phys_grads(cm, bt.grad[q], g);
            double w = rule.weights[q] * cm.detA * coeff;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double gg = g[i].dot(g[j]);
                    for (int a = 0; a < D; ++a)
                        for (int b = 0; b < D; ++b) {
                            double v = 0.5 * ((a == b ? gg : 0.0) + g[i][b] * g[j][a]);
                            Ke(i * D + a, j * D + b) += w * v;
                        }
                }
        }
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < D; ++a)
                for (int j = 0; j < n; ++j)
                    for (int b = 0; b < D; ++b)
                        out.emplace_back(off + sp.dof(nodes[i], a), off + sp.dof(nodes[j], b),
                                         Ke(i * D + a, j * D + b));
    }
}

/// coeff * int N_ijmn [D(u)]_ij [D(v)]_mn with a fourth-rank tensor N
template <int D>
void assemble_tensor_visc(const FESpace<D>& sp, int off, const Tensor4<D>& N, double coeff,
                          std::vector<Triplet>& out) {
    const auto& m = *sp.mesh;
    const auto& rule = simplex_rule<D>(2 * sp.order + 1);
    const auto& bt = basis_table<D>(sp.order, rule);
    auto Q = voigt_matrix(N); // symmetric part acts on symmetric matrices
    detail::CellMap<D> cm;
    std::vector<int> nodes;
    std::vector<Vec<D>> g;
    constexpr int V = voigt_dim(D);
    for (int c = 0; c < m.num_cells(); ++c) {
        cm.set(m, c);
        sp.cell_nodes(c, nodes);
        const int n = bt.nloc;
        MatrixXd Ke = MatrixXd::Zero(n * D, n * D);
        std::vector<Eigen::Matrix<double, V, 1>> dv(n * D);
        for (int q = 0; q < rule.size(); ++q) {
            detail::phys_grads(cm, bt.grad[q], g);
            for (int i = 0; i < n; ++i)
                for (int a = 0; a < D; ++a) {
                    Mat<D> S = Mat<D>::Zero();
                    for (int j = 0; j < D; ++j) {
                        S(a, j) += 0.5 * g[i][j];
                        S(j, a) += 0.5 * g[i][j];
                    }
                    dv[i * D + a] = to_voigt<D>(S);
                }
            double w = rule.weights[q] * cm.detA * coeff;
            for (int r = 0; r < n * D; ++r) {
                Eigen::Matrix<double, V, 1> Qd = Q * dv[r];
                for (int s = 0; s < n * D; ++s) Ke(s, r) += w * dv[s].dot(Qd);
            }
        }
        Ke = 0.5 * (Ke + MatrixXd(Ke.transpose())); // exact elementwise symmetry
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < D; ++a)
                for (int j = 0; j < n; ++j)
                    for (int b = 0; b < D; ++b)
                        out.emplace_back(off + sp.dof(nodes[i], a), off + sp.dof(nodes[j], b),
                                         Ke(i * D + a, j * D + b));
    }
}

/// coeff * int div(u) div(v)
template <int D>
void assemble_divdiv(const FESpace<D>& sp, int off, double coeff, Region reg,
                     std::vector<Triplet>& out) {
    const auto& m = *sp.mesh;
    const auto& rule = simplex_rule<D>(2 * sp.order + 1);
    const auto& bt = basis_table<D>(sp.order, rule);
    detail::CellMap<D> cm;
    std::vector<int> nodes;
    std::vector<Vec<D>> g;
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!region_match(m, c, reg)) continue;
        cm.set(m, c);
        sp.cell_nodes(c, nodes);
        const int n = bt.nloc;
        MatrixXd Ke = MatrixXd::Zero(n * D, n * D);
        for (int q = 0; q < rule.size(); ++q) {
            detail::phys_grads(cm, bt.grad[q], g);
            double w = rule.weights[q] * cm.detA * coeff;
            for (int i = 0; i < n; ++i)
                for (int a = 0; a < D; ++a)
                    for (int j = 0; j < n; ++j)
                        for (int b = 0; b < D; ++b)
                            Ke(i * D + a, j * D + b) += w * (g[i][a] * g[j][b]);
        }
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < D; ++a)
                for (int j = 0; j < n; ++j)
                    for (int b = 0; b < D; ++b)
                        out.emplace_back(off + sp.dof(nodes[i], a), off + sp.dof(nodes[j], b),
                                         Ke(i * D + a, j * D + b));
    }
}

/// coeff * int curl(u) . curl(v); 3D vector curl, 2D scalar in-plane curl
template <int D>
void assemble_curlcurl(const FESpace<D>& sp, int off, double coeff, Region reg,
                       std::vector<Triplet>& out) {
    const auto& m = *sp.mesh;
    const auto& rule = simplex_rule<D>(2 * sp.order + 1);
    const auto& bt = basis_table<D>(sp.order, rule);
    detail::CellMap<D> cm;
    std::vector<int> nodes;
    std::vector<Vec<D>> g;
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!region_match(m, c, reg)) continue;
        cm.set(m, c);
        sp.cell_nodes(c, nodes);
        const int n = bt.nloc;
        MatrixXd Ke = MatrixXd::Zero(n * D, n * D);
        for (int q = 0; q < rule.size(); ++q) {
            detail::phys_grads(cm, bt.grad[q], g);
            double w = rule.weights[q] * cm.detA * coeff;
            if constexpr (D == 2) {
                // curl(phi e_0) = -d2 phi, curl(phi e_1) = d1 phi
                for (int i = 0; i < n; ++i)
                    for (int a = 0; a < 2; ++a) {
                        double ci = (a == 0) ? -g[i][1] : g[i][0];
                        for (int j = 0; j < n; ++j)
                            for (int b = 0; b < 2; ++b) {
                                double cj = (b == 0) ? -g[j][1] : g[j][0];
                                Ke(i * 2 + a, j * 2 + b) += w * (ci * cj);
                            }
                    }
            } else {
                // curl(phi e_a) = grad(phi) x e_a
                for (int i = 0; i < n; ++i)
                    for (int a = 0; a < 3; ++a) {
                        Vec<3> ea = Vec<3>::Zero();
                        ea[a] = 1;
                        Vec<3> ci = g[i].cross(ea);
                        for (int j = 0; j < n; ++j)
                            for (int b = 0; b < 3; ++b) {
                                Vec<3> eb = Vec<3>::Zero();
                                eb[b] = 1;
                                Vec<3> cj = g[j].cross(eb);
                                Ke(i * 3 + a, j * 3 + b) += w * ci.dot(cj);
                            }
                    }
            }
        }
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < D; ++a)
                for (int j = 0; j < n; ++j)
                    for (int b = 0; b < D; ++b)
                        out.emplace_back(off + sp.dof(nodes[i], a), off + sp.dof(nodes[j], b),
                                         Ke(i * D + a, j * D + b));
    }
}

/// coeff * int u . v (vector or scalar mass)
template <int D>
void assemble_mass(const FESpace<D>& sp, int off, double coeff, Region reg,
                   std::vector<Triplet>& out) {
    const auto& m = *sp.mesh;
    const auto& rule = simplex_rule<D>(2 * sp.order + 1);
    const auto& bt = basis_table<D>(sp.order, rule);
    detail::CellMap<D> cm;
    std::vector<int> nodes;
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!region_match(m, c, reg)) continue;
        cm.set(m, c);
        sp.cell_nodes(c, nodes);
        const int n = bt.nloc;
        MatrixXd Ke = MatrixXd::Zero(n, n);
        for (int q = 0; q < rule.size(); ++q) {
            double w = rule.weights[q] * cm.detA * coeff;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) Ke(i, j) += w * (bt.val[q][i] * bt.val[q][j]);
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int a = 0; a < sp.ncomp; ++a)
                    out.emplace_back(off + sp.dof(nodes[i], a), off + sp.dof(nodes[j], a),
                                     Ke(i, j));
    }
}

/// coeff * int grad(u) : grad(v) (componentwise; H1 seminorm Gram)
template <int D>
void assemble_gradgrad(const FESpace<D>& sp, int off, double coeff, Region reg,
                       std::vector<Triplet>& out) {
    const auto& m = *sp.mesh;
    const auto& rule = simplex_rule<D>(2 * sp.order + 1);
    const auto& bt = basis_table<D>(sp.order, rule);
    detail::CellMap<D> cm;
    std::vector<int> nodes;
    std::vector<Vec<D>> g;
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!region_match(m, c, reg)) continue;
        cm.set(m, c);
        sp.cell_nodes(c, nodes);
        const int n = bt.nloc;
        MatrixXd Ke = MatrixXd::Zero(n, n);
        for (int q = 0; q < rule.size(); ++q) {
            detail::phys_grads(cm, bt.grad[q], g);
            double w = rule.weights[q] * cm.detA * coeff;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) Ke(i, j) += w * g[i].dot(g[j]);
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int a = 0; a < sp.ncomp; ++a)
                    out.emplace_back(off + sp.dof(nodes[i], a), off + sp.dof(nodes[j], a),
                                     Ke(i, j));
    }
}

/// Pressure-velocity coupling: rows q, cols v with int q div(v).
/// If symmetrize, the transposed block is emitted as well.
template <int D>
void assemble_div_pressure(const FESpace<D>& usp, int uoff, const FESpace<D>& psp, int poff,
                           double coeff, Region reg, bool symmetrize,
                           std::vector<Triplet>& out) {
    require(usp.mesh == psp.mesh, "assemble_div_pressure: spaces on different meshes");
    const auto& m = *usp.mesh;
    const auto& rule = simplex_rule<D>(usp.order + psp.order + 1);
    const auto& btu = basis_table<D>(usp.order, rule);
    const auto& btp = basis_table<D>(psp.order, rule);
    detail::CellMap<D> cm;
    std::vector<int> un, pn;
    std::vector<Vec<D>> g;
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!region_match(m, c, reg)) continue;
        cm.set(m, c);
        usp.cell_nodes(c, un);
        psp.cell_nodes(c, pn);
        MatrixXd Ke = MatrixXd::Zero(int(pn.size()), int(un.size()) * D);
        for (int q = 0; q < rule.size(); ++q) {
            detail::phys_grads(cm, btu.grad[q], g);
            double w = rule.weights[q] * cm.detA * coeff;
            for (std::size_t pi = 0; pi < pn.size(); ++pi) {
                double pv = btp.val[q][pi];
                for (std::size_t ui = 0; ui < un.size(); ++ui)
                    for (int a = 0; a < D; ++a)
                        Ke(pi, ui * D + a) += w * (pv * g[ui][a]);
            }
        }
        for (std::size_t pi = 0; pi < pn.size(); ++pi)
            for (std::size_t ui = 0; ui < un.size(); ++ui)
                for (int a = 0; a < D; ++a) {
                    int r = poff + psp.dof(pn[pi], 0);
                    int cc = uoff + usp.dof(un[ui], a);
                    double v = Ke(pi, ui * D + a);
                    out.emplace_back(r, cc, v);
                    if (symmetrize) out.emplace_back(cc, r, v);
                }
    }
}

/// Skew-symmetrized convection coeff/2 * [ (w.grad u, v) - (w.grad v, u) ]
/// with a frozen transport field w. For exactly divergence-free w this is
/// the plain convection form; the skew realization keeps the energy identity
/// C(w;v,v)=0 exact at the discrete level.
template <int D>
void assemble_convection_skew(const FESpace<D>& sp, int off, const Field<D>& w, double coeff,
                              std::vector<Triplet>& out) {
    const auto& m = *sp.mesh;
    const auto& rule = simplex_rule<D>(2 * sp.order + 2);
    const auto& bt = basis_table<D>(sp.order, rule);
    const auto& btw = basis_table<D>(w.space->order, rule);
    detail::CellMap<D> cm;
    std::vector<int> nodes, wnodes;
    std::vector<Vec<D>> g;
    for (int c = 0; c < m.num_cells(); ++c) {
        cm.set(m, c);
        sp.cell_nodes(c, nodes);
        w.space->cell_nodes(c, wnodes);
        const int n = bt.nloc;
        MatrixXd Ke = MatrixXd::Zero(n, n);
        for (int q = 0; q < rule.size(); ++q) {
            detail::phys_grads(cm, bt.grad[q], g);
            Vec<D> wq = Vec<D>::Zero();
            for (std::size_t i = 0; i < wnodes.size(); ++i)
                for (int a = 0; a < D; ++a)
                    wq[a] += w.coeffs[w.space->dof(wnodes[i], a)] * btw.val[q][i];
            double s = 0.5 * coeff * rule.weights[q] * cm.detA;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double adv_ij = wq.dot(g[j]) * bt.val[q][i]; // (w.grad phi_j, phi_i)
                    double adv_ji = wq.dot(g[i]) * bt.val[q][j];
                    Ke(i, j) += s * (adv_ij - adv_ji);
                }
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int a = 0; a < D; ++a)
                    out.emplace_back(off + sp.dof(nodes[i], a), off + sp.dof(nodes[j], a),
                                     Ke(i, j));
    }
}

/// Magnetic coupling blocks of the trilinear form with frozen first slot
/// (u1,C1) = (., Bk):  -coeff * int_solid [ (curl C2 x Bk).u3 + (u2 x Bk).curl C3 ].
/// Trial = (u2,C2), test = (u3,C3). 3D only.
inline void assemble_lorentz_coupling(const FESpace<3>& usp, int uoff, const FESpace<3>& Bsp,
                                      int Boff, const Field<3>& Bk, double coeff,
                                      std::vector<Triplet>& out) {
    require(usp.mesh == Bsp.mesh, "assemble_lorentz_coupling: mesh mismatch");
    const auto& m = *usp.mesh;
    const auto& rule = simplex_rule<3>(2 * std::max(usp.order, Bsp.order) + 2);
    const auto& btu = basis_table<3>(usp.order, rule);
    const auto& btB = basis_table<3>(Bsp.order, rule);
    const auto& btk = basis_table<3>(Bk.space->order, rule);
    detail::CellMap<3> cm;
    std::vector<int> un, Bn, kn;
    std::vector<Vec<3>> gB;
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!m.cell_is_solid(c)) continue;
        cm.set(m, c);
        usp.cell_nodes(c, un);
        Bsp.cell_nodes(c, Bn);
        Bk.space->cell_nodes(c, kn);
        MatrixXd KuB = MatrixXd::Zero(int(un.size()) * 3, int(Bn.size()) * 3);
        MatrixXd KBu = MatrixXd::Zero(int(Bn.size()) * 3, int(un.size()) * 3);
        for (int q = 0; q < rule.size(); ++q) {
            detail::phys_grads(cm, btB.grad[q], gB);
            Vec<3> Bq = Vec<3>::Zero();
            for (std::size_t i = 0; i < kn.size(); ++i)
                for (int a = 0; a < 3; ++a)
                    Bq[a] += Bk.coeffs[Bk.space->dof(kn[i], a)] * btk.val[q][i];
            double w = -coeff * rule.weights[q] * cm.detA;
            // (curl C2 x Bk) . u3 : rows u3 (i,a), cols C2 (j,b)
            for (std::size_t j = 0; j < Bn.size(); ++j)
                for (int b = 0; b < 3; ++b) {
                    Vec<3> eb = Vec<3>::Zero();
                    eb[b] = 1;
                    Vec<3> curl_jb = gB[j].cross(eb);
                    Vec<3> f = curl_jb.cross(Bq);
                    for (std::size_t i = 0; i < un.size(); ++i)
                        for (int a = 0; a < 3; ++a)
                            KuB(i * 3 + a, j * 3 + b) += w * btu.val[q][i] * f[a];
                }
            // (u2 x Bk) . curl C3 : rows C3 (i,a), cols u2 (j,b)
            for (std::size_t i = 0; i < Bn.size(); ++i)
                for (int a = 0; a < 3; ++a) {
                    Vec<3> ea = Vec<3>::Zero();
                    ea[a] = 1;
                    Vec<3> curl_ia = gB[i].cross(ea);
                    for (std::size_t j = 0; j < un.size(); ++j)
                        for (int b = 0; b < 3; ++b) {
                            Vec<3> ebv = Vec<3>::Zero();
                            ebv[b] = 1;
                            KBu(i * 3 + a, j * 3 + b) += w * btu.val[q][j] * (ebv.cross(Bq)).dot(curl_ia);
                        }
                }
        }
        for (std::size_t i = 0; i < un.size(); ++i)
            for (int a = 0; a < 3; ++a)
                for (std::size_t j = 0; j < Bn.size(); ++j)
                    for (int b = 0; b < 3; ++b)
                        out.emplace_back(uoff + usp.dof(un[i], a), Boff + Bsp.dof(Bn[j], b),
                                         KuB(i * 3 + a, j * 3 + b));
        for (std::size_t i = 0; i < Bn.size(); ++i)
            for (int a = 0; a < 3; ++a)
                for (std::size_t j = 0; j < un.size(); ++j)
                    for (int b = 0; b < 3; ++b)
                        out.emplace_back(Boff + Bsp.dof(Bn[i], a), uoff + usp.dof(un[j], b),
                                         KBu(i * 3 + a, j * 3 + b));
    }
}

/// rhs += coeff * int E : D(v) for a constant symmetric matrix E.
/// E : D(phi e_a) = sum_n E_an d_n phi.
template <int D>
void assemble_rhs_strain(const FESpace<D>& sp, int off, const Mat<D>& E, double coeff,
                         Region reg, VectorXd& rhs) {
    const auto& m = *sp.mesh;
    const auto& rule = simplex_rule<D>(2 * sp.order + 1);
    const auto& bt = basis_table<D>(sp.order, rule);
    detail::CellMap<D> cm;
    std::vector<int> nodes;
    std::vector<Vec<D>> g;
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!region_match(m, c, reg)) continue;
        cm.set(m, c);
        sp.cell_nodes(c, nodes);
        for (int q = 0; q < rule.size(); ++q) {
            detail::phys_grads(cm, bt.grad[q], g);
            double w = coeff * rule.weights[q] * cm.detA;
            for (std::size_t i = 0; i < nodes.size(); ++i)
                for (int a = 0; a < D; ++a) {
                    double v = 0;
                    for (int n = 0; n < D; ++n) v += E(a, n) * g[i][n];
                    rhs[off + sp.dof(nodes[i], a)] += w * v;
                }
        }
    }
}

/// rhs += coeff * int e . curl(v) for a constant vector e (3D).
inline void assemble_rhs_curl_drive(const FESpace<3>& sp, int off, const Vec<3>& e, double coeff,
                                    Region reg, VectorXd& rhs) {
    const auto& m = *sp.mesh;
    const auto& rule = simplex_rule<3>(2 * sp.order + 1);
    const auto& bt = basis_table<3>(sp.order, rule);
    detail::CellMap<3> cm;
    std::vector<int> nodes;
    std::vector<Vec<3>> g;
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!region_match(m, c, reg)) continue;
        cm.set(m, c);
        sp.cell_nodes(c, nodes);
        for (int q = 0; q < rule.size(); ++q) {
            detail::phys_grads(cm, bt.grad[q], g);
            double w = coeff * rule.weights[q] * cm.detA;
            for (std::size_t i = 0; i < nodes.size(); ++i)
                for (int a = 0; a < 3; ++a) {
                    Vec<3> ea = Vec<3>::Zero();
                    ea[a] = 1;
                    rhs[off + sp.dof(nodes[i], a)] += w * (g[i].cross(ea)).dot(e);
                }
        }
    }
}

/// rhs += coeff * int f(x) . v over a region
template <int D>
void assemble_rhs(const FESpace<D>& sp, int off, double coeff, Region reg,
                  const std::type_identity_t<std::function<VectorXd(const Vec<D>&)>>& f, VectorXd& rhs) {
    const auto& m = *sp.mesh;
    const auto& rule = simplex_rule<D>(2 * sp.order + 2);
    const auto& bt = basis_table<D>(sp.order, rule);
    detail::CellMap<D> cm;
    std::vector<int> nodes;
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!region_match(m, c, reg)) continue;
        cm.set(m, c);
        sp.cell_nodes(c, nodes);
        for (int q = 0; q < rule.size(); ++q) {
            Vec<D> x = cm.map(m, c, rule.points[q]);
            VectorXd fv = f(x);
            double w = coeff * rule.weights[q] * cm.detA;
            for (std::size_t i = 0; i < nodes.size(); ++i)
                for (int a = 0; a < sp.ncomp; ++a)
                    rhs[off + sp.dof(nodes[i], a)] += w * bt.val[q][i] * fv[a];
        }
    }
}

// ---------------------------------------------------------------------------
// Scalar integrals over meshes and fields (norms, form values, oracles).
// ---------------------------------------------------------------------------

/// Integrate an analytic callback over a tagged region with a rule of the
/// given polynomial exactness.
template <int D>
double integrate(const Mesh<D>& m, Region reg, int degree,
                 const std::type_identity_t<std::function<double(const Vec<D>&)>>& f) {
    const auto& rule = simplex_rule<D>(degree);
    detail::CellMap<D> cm;
    double s = 0;
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!region_match(m, c, reg)) continue;
        cm.set(m, c);
        for (int q = 0; q < rule.size(); ++q)
            s += rule.weights[q] * cm.detA * f(cm.map(m, c, rule.points[q]));
    }
    return s;
}

/// Integrate a callback of (x, value, gradient) of one FE field.
template <int D>
double integrate_field(const Field<D>& u, Region reg, int extra_degree,
                       const std::type_identity_t<std::function<double(const Vec<D>&, const VectorXd&, const MatrixXd&)>>& f) {
    const auto& sp = *u.space;
    const auto& m = *sp.mesh;
    const auto& rule = simplex_rule<D>(2 * sp.order + 1 + extra_degree);
    const auto& bt = basis_table<D>(sp.order, rule);
    detail::CellMap<D> cm;
    std::vector<int> nodes;
    std::vector<Vec<D>> g;
    double s = 0;
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!region_match(m, c, reg)) continue;
        cm.set(m, c);
        sp.cell_nodes(c, nodes);
        for (int q = 0; q < rule.size(); ++q) {
            detail::phys_grads(cm, bt.grad[q], g);
            VectorXd val = VectorXd::Zero(sp.ncomp);
            MatrixXd G = MatrixXd::Zero(sp.ncomp, D);
            for (std::size_t i = 0; i < nodes.size(); ++i)
                for (int a = 0; a < sp.ncomp; ++a) {
                    double cco = u.coeffs[sp.dof(nodes[i], a)];
                    val[a] += cco * bt.val[q][i];
                    G.row(a) += cco * g[i].transpose();
                }
            s += rule.weights[q] * cm.detA * f(cm.map(m, c, rule.points[q]), val, G);
        }
    }
    return s;
}

/// Integrate a callback of two fields' values/gradients (same mesh).
template <int D>
double integrate_fields(const Field<D>& u, const Field<D>& v, Region reg, int extra_degree,
                        const std::type_identity_t<std::function<double(const Vec<D>&, const VectorXd&, const MatrixXd&,
                                                   const VectorXd&, const MatrixXd&)>>& f) {
    const auto& spu = *u.space;
    const auto& spv = *v.space;
    require(spu.mesh == spv.mesh, "integrate_fields: mesh mismatch");
    const auto& m = *spu.mesh;
    const auto& rule = simplex_rule<D>(spu.order + spv.order + 2 + extra_degree);
    const auto& btu = basis_table<D>(spu.order, rule);
    const auto& btv = basis_table<D>(spv.order, rule);
    detail::CellMap<D> cm;
    std::vector<int> un, vn;
    std::vector<Vec<D>> gu, gv;
    double s = 0;
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!region_match(m, c, reg)) continue;
        cm.set(m, c);
        spu.cell_nodes(c, un);
        spv.cell_nodes(c, vn);
        for (int q = 0; q < rule.size(); ++q) {
            detail::phys_grads(cm, btu.grad[q], gu);
            detail::phys_grads(cm, btv.grad[q], gv);
            VectorXd uval = VectorXd::Zero(spu.ncomp), vval = VectorXd::Zero(spv.ncomp);
            MatrixXd Gu = MatrixXd::Zero(spu.ncomp, D), Gv = MatrixXd::Zero(spv.ncomp, D);
            for (std::size_t i = 0; i < un.size(); ++i)
                for (int a = 0; a < spu.ncomp; ++a) {
                    double cc = u.coeffs[spu.dof(un[i], a)];
                    uval[a] += cc * btu.val[q][i];
                    Gu.row(a) += cc * gu[i].transpose();
                }
            for (std::size_t i = 0; i < vn.size(); ++i)
                for (int a = 0; a < spv.ncomp; ++a) {
                    double cc = v.coeffs[spv.dof(vn[i], a)];
                    vval[a] += cc * btv.val[q][i];
                    Gv.row(a) += cc * gv[i].transpose();
                }
            s += rule.weights[q] * cm.detA * f(cm.map(m, c, rule.points[q]), uval, Gu, vval, Gv);
        }
    }
    return s;
}

template <int D>
double norm_L2(const Field<D>& u, Region reg = Region::All) {
    double s = integrate_field<D>(u, reg, 0, [](const Vec<D>&, const VectorXd& v, const MatrixXd&) {
        return v.squaredNorm();
    });
    return std::sqrt(std::max(0.0, s));
}

template <int D>
double seminorm_H1(const Field<D>& u, Region reg = Region::All) {
    double s = integrate_field<D>(u, reg, 0, [](const Vec<D>&, const VectorXd&, const MatrixXd& G) {
        return G.squaredNorm();
    });
    return std::sqrt(std::max(0.0, s));
}

template <int D>
double norm_L4(const Field<D>& u, Region reg = Region::All) {
    double s = integrate_field<D>(u, reg, 2 * u.space->order,
                                  [](const Vec<D>&, const VectorXd& v, const MatrixXd&) {
                                      double q = v.squaredNorm();
                                      return q * q;
                                  });
    return std::pow(std::max(0.0, s), 0.25);
}

/// Integrate a callback of three fields' values/gradients (same mesh).
template <int D>
double integrate_fields3(const Field<D>& w, const Field<D>& u, const Field<D>& v, Region reg,
                         int extra_degree,
                         const std::type_identity_t<std::function<double(const Vec<D>&, const VectorXd&, const MatrixXd&,
                                                    const VectorXd&, const MatrixXd&,
                                                    const VectorXd&, const MatrixXd&)>>& f) {
    const FESpace<D>* sps[3] = {w.space, u.space, v.space};
    require(sps[0]->mesh == sps[1]->mesh && sps[1]->mesh == sps[2]->mesh,
            "integrate_fields3: mesh mismatch");
    const Field<D>* flds[3] = {&w, &u, &v};
    const auto& m = *sps[0]->mesh;
    int deg = sps[0]->order + sps[1]->order + sps[2]->order + extra_degree;
    const auto& rule = simplex_rule<D>(deg);
    const BasisTable<D>* bts[3];
    for (int k = 0; k < 3; ++k) bts[k] = &basis_table<D>(sps[k]->order, rule);
    detail::CellMap<D> cm;
    std::vector<int> nd[3];
    std::vector<Vec<D>> gr;
    double s = 0;
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!region_match(m, c, reg)) continue;
        cm.set(m, c);
        for (int k = 0; k < 3; ++k) sps[k]->cell_nodes(c, nd[k]);
        for (int q = 0; q < rule.size(); ++q) {
            VectorXd val[3];
            MatrixXd G[3];
            for (int k = 0; k < 3; ++k) {
                detail::phys_grads(cm, bts[k]->grad[q], gr);
                val[k] = VectorXd::Zero(sps[k]->ncomp);
                G[k] = MatrixXd::Zero(sps[k]->ncomp, D);
                for (std::size_t i = 0; i < nd[k].size(); ++i)
                    for (int a = 0; a < sps[k]->ncomp; ++a) {
                        double cc = flds[k]->coeffs[sps[k]->dof(nd[k][i], a)];
                        val[k][a] += cc * bts[k]->val[q][i];
                        G[k].row(a) += cc * gr[i].transpose();
                    }
            }
            s += rule.weights[q] * cm.detA *
                 f(cm.map(m, c, rule.points[q]), val[0], G[0], val[1], G[1], val[2], G[2]);
        }
    }
    return s;
}

/// Plain trilinear convection value int (w.grad u).v (not skew-symmetrized).
template <int D>
double eval_convection_plain(const Field<D>& w, const Field<D>& u, const Field<D>& v) {
    return integrate_fields3<D>(w, u, v, Region::All, 2,
        [](const Vec<D>&, const VectorXd& wv, const MatrixXd&, const VectorXd&,
           const MatrixXd& Gu, const VectorXd& vval, const MatrixXd&) {
            double s = 0;
            for (int a = 0; a < D; ++a)
                for (int j = 0; j < D; ++j) s += wv[j] * Gu(a, j) * vval[a];
            return s;
        });
}

} // namespace mrhomog
