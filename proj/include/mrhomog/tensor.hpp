#pragma once

#include "mrhomog/common.hpp"

#include <array>
#include <cmath>

namespace mrhomog {

//////////////////////////////////////////////////////////////////////////////
// Dense small-tensor algebra: permutation symbols, cross products,
// fourth-rank tensors on symmetric matrices, symmetry/ellipticity checks.
//////////////////////////////////////////////////////////////////////////////

/// Levi-Civita permutation symbol, 1-based indices in {1,2,3}.
inline int levi_civita(int i, int j, int k) {
    require(i >= 1 && i <= 3 && j >= 1 && j <= 3 && k >= 1 && k <= 3,
            "levi_civita: indices must lie in {1,2,3}");
    if (i == j || j == k || i == k) return 0;
    // parity of (i,j,k) as a permutation of (1,2,3)
    int inv = (i > j) + (i > k) + (j > k);
    return (inv % 2 == 0) ? 1 : -1;
}

inline Vec<3> cross(const Vec<3>& a, const Vec<3>& b) {
    Vec<3> c = Vec<3>::Zero();
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j)
            for (int k = 1; k <= 3; ++k)
                c[i - 1] += levi_civita(i, j, k) * a[j - 1] * b[k - 1];
    return c;
}

// In-plane conventions used throughout the 2D code paths:
//   a x b           -> scalar, the e3 component
//   curl of field B -> scalar d1B2 - d2B1 (computed from a gradient elsewhere)
//   curl of scalar  -> ( d2 c, -d1 c )
//   c x B           -> ( -c B2, c B1 )
inline double cross2(const Vec<2>& a, const Vec<2>& b) { return a[0] * b[1] - a[1] * b[0]; }
inline Vec<2> curl_of_scalar2(const Vec<2>& grad_c) { return Vec<2>(grad_c[1], -grad_c[0]); }
inline Vec<2> scalar_cross2(double c, const Vec<2>& B) { return Vec<2>(-c * B[1], c * B[0]); }

template <int D>
Mat<D> sym(const Mat<D>& G) { return 0.5 * (G + G.transpose()); }

/// Fourth-rank tensor with d^4 entries, d in {2,3}.
template <int D>
struct Tensor4 {
    std::array<double, std::size_t(D* D* D* D)> a{};

    double& operator()(int i, int j, int m, int n) {
        return a[((i * D + j) * D + m) * D + n];
    }
    double operator()(int i, int j, int m, int n) const {
        return a[((i * D + j) * D + m) * D + n];
    }

    static Tensor4 zero() { return Tensor4{}; }

    /// Symmetric identity: N_ijmn = (d_im d_jn + d_in d_jm)/2.
    static Tensor4 sym_identity() {
        Tensor4 t{};
        for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j)
                for (int m = 0; m < D; ++m)
                    for (int n = 0; n < D; ++n)
                        t(i, j, m, n) = 0.5 * ((i == m && j == n) + (i == n && j == m));
        return t;
    }

    double max_major_asymmetry() const {
        double dev = 0;
        for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j)
                for (int m = 0; m < D; ++m)
                    for (int n = 0; n < D; ++n)
                        dev = std::max(dev, std::abs((*this)(i, j, m, n) - (*this)(m, n, i, j)));
        return dev;
    }
    double max_abs() const {
        double v = 0;
        for (double x : a) v = std::max(v, std::abs(x));
        return v;
    }
};

/// result_mn = N_ijmn S_ij (sum over i,j).
template <int D>
Mat<D> tensor4_apply(const Tensor4<D>& N, const Mat<D>& S) {
    Mat<D> R = Mat<D>::Zero();
    for (int m = 0; m < D; ++m)
        for (int n = 0; n < D; ++n) {
            double v = 0;
            for (int i = 0; i < D; ++i)
                for (int j = 0; j < D; ++j) v += N(i, j, m, n) * S(i, j);
            R(m, n) = v;
        }
    return R;
}

/// Number of independent entries of a symmetric DxD matrix.
constexpr int voigt_dim(int d) { return d * (d + 1) / 2; }

/// Voigt index pairs in the order (11,22,12) for d=2 and
/// (11,22,33,23,13,12) for d=3.
template <int D>
constexpr std::array<std::pair<int, int>, voigt_dim(D)> voigt_pairs() {
    if constexpr (D == 2) return {{{0, 0}, {1, 1}, {0, 1}}};
    else return {{{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}}};
}

/// Map a symmetric matrix to its Voigt vector with sqrt(2) scaling on the
/// off-diagonal slots, so that S:T equals the euclidean dot of the vectors.
template <int D>
Eigen::Matrix<double, voigt_dim(D), 1> to_voigt(const Mat<D>& S) {
    Eigen::Matrix<double, voigt_dim(D), 1> v;
    auto P = voigt_pairs<D>();
    const double s2 = std::sqrt(2.0);
    for (int k = 0; k < voigt_dim(D); ++k) {
        auto [i, j] = P[k];
        v[k] = (i == j) ? S(i, i) : s2 * S(i, j);
    }
    return v;
}

template <int D>
Mat<D> from_voigt(const Eigen::Matrix<double, voigt_dim(D), 1>& v) {
    Mat<D> S = Mat<D>::Zero();
    auto P = voigt_pairs<D>();
    const double s2 = std::sqrt(2.0);
    for (int k = 0; k < voigt_dim(D); ++k) {
        auto [i, j] = P[k];
        if (i == j) S(i, i) = v[k];
        else S(i, j) = S(j, i) = v[k] / s2;
    }
    return S;
}

/// Voigt matrix of the quadratic form S -> N_ijmn S_ij S_mn on symmetric
/// matrices. With the sqrt(2) convention its eigenvalues are the eigenvalues
/// of the tensor acting on symmetric matrices.
template <int D>
Eigen::Matrix<double, voigt_dim(D), voigt_dim(D)> voigt_matrix(const Tensor4<D>& N) {
    constexpr int V = voigt_dim(D);
    Eigen::Matrix<double, V, V> Q;
    auto P = voigt_pairs<D>();
    auto w = [](int i, int j) { return i == j ? 1.0 : std::sqrt(2.0); };
    for (int a = 0; a < V; ++a)
        for (int b = 0; b < V; ++b) {
            auto [i, j] = P[a];
            auto [m, n] = P[b];
            // symmetrize over both index pairs so minor symmetry is implied
            double t = 0.25 * (N(i, j, m, n) + N(j, i, m, n) + N(i, j, n, m) + N(j, i, n, m));
            Q(a, b) = w(i, j) * w(m, n) * t;
        }
    return Q;
}

struct EllipticityReport {
    double min_eigenvalue = 0;
    double max_eigenvalue = 0;
    bool major_symmetric = false;
    double major_asymmetry = 0;
    double tolerance_used = 0;
};

template <int D>
EllipticityReport ellipticity_report(const Tensor4<D>& N, double tol = 1e-10) {
    for (double x : N.a)
        require(std::isfinite(x), "ellipticity_report: non-finite tensor entry");
    auto Q = voigt_matrix(N);
    // symmetrize the Voigt form before the eigensolve; the deviation is
    // reported separately
    Eigen::Matrix<double, voigt_dim(D), voigt_dim(D)> Qs = 0.5 * (Q + Q.transpose());
    Eigen::SelfAdjointEigenSolver<decltype(Qs)> es(Qs);
    if (es.info() != Eigen::Success)
        throw NumericalError("ellipticity_report: eigen solve failed; ||Q||=" +
                             std::to_string(Qs.norm()));
    EllipticityReport r;
    r.min_eigenvalue = es.eigenvalues().minCoeff();
    r.max_eigenvalue = es.eigenvalues().maxCoeff();
    r.major_asymmetry = N.max_major_asymmetry();
    r.tolerance_used = tol;
    r.major_symmetric = r.major_asymmetry <= tol;
    return r;
}

template <int D>
EllipticityReport ellipticity_report(const Mat<D>& S, double tol = 1e-10) {
    require(S.allFinite(), "ellipticity_report: non-finite matrix entry");
    Mat<D> Ss = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Mat<D>> es(Ss);
    if (es.info() != Eigen::Success)
        throw NumericalError("ellipticity_report: eigen solve failed");
    EllipticityReport r;
    r.min_eigenvalue = es.eigenvalues().minCoeff();
    r.max_eigenvalue = es.eigenvalues().maxCoeff();
    r.major_asymmetry = (S - S.transpose()).cwiseAbs().maxCoeff();
    r.tolerance_used = tol;
    r.major_symmetric = r.major_asymmetry <= tol;
    return r;
}

} // namespace mrhomog
