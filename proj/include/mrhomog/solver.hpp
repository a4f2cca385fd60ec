#pragma once

#include "mrhomog/assemble.hpp"

#include <Eigen/SparseLU>
#include <Eigen/SparseCholesky>
#include <Eigen/UmfPackSupport>
#include <Eigen/CholmodSupport>

#include <cstdlib>
#include <functional>

namespace mrhomog {

/// Zero-mean (or similar) gauge fixing. All mean constraints in this toolkit
/// are pure gauges: `kernel` spans a null direction of the operator and the
/// loads are orthogonal to it, so the Lagrange-multiplier solution equals the
/// pinned solution shifted along `kernel` until `weights . x = rhs`. Solving
/// it this way keeps the factored matrix free of dense border rows.
struct GaugeConstraint {
    VectorXd weights; // full-space functional (e.g. component mean)
    VectorXd kernel;  // full-space null direction used for the shift
    double rhs = 0;
    std::string label;
};

/// Fix the first unconstrained dof of a component; pairs with a gauge shift.
template <int D>
void pin_first_free(Constraints& C, const FESpace<D>& sp, int dof_offset, int comp) {
    for (int n = 0; n < sp.num_scalar_nodes(); ++n) {
        int d = dof_offset + sp.dof(n, comp);
        if (!C.is_constrained(d)) {
            C.fix(d, 0.0);
            return;
        }
    }
    throw ConfigError("pin_first_free: no unconstrained dof found");
}

struct SolveStats {
    double rel_residual = 0;
    int n_reduced = 0;
};

namespace detail {
/// BLAS threading inside the factorization backend must stay single-threaded
/// for bitwise-reproducible runs.
struct BlasSingleThreadInit {
    BlasSingleThreadInit() {
        setenv("OPENBLAS_NUM_THREADS", "1", 0);
        setenv("OMP_NUM_THREADS", "1", 0);
    }
};
inline const BlasSingleThreadInit blas_single_thread_init{};
} // namespace detail

/// Direct sparse solve of the constrained system
///   T' K T x_red = T' (b - K offset),   x_full = T x_red + offset,
/// followed by exact gauge shifts. Deterministic for fixed input.
class ReducedSolver {
public:
    /// LU handles general (nonsymmetric, indefinite) systems; SpdChol uses a
    /// supernodal Cholesky for symmetric positive definite reduced operators.
    enum class Backend { LU, SpdChol };

    ReducedSolver(int n_full, const Constraints::Reducer& R,
                  std::vector<GaugeConstraint> gauges = {}, Backend backend = Backend::LU)
        : n_full_(n_full), R_(R), gauges_(std::move(gauges)), backend_(backend) {}

    /// Factor the reduced operator built from full-space triplets.
    void factor(const std::vector<Triplet>& trips) {
        SparseMat K(n_full_, n_full_);
        K.setFromTriplets(trips.begin(), trips.end());
        K_full_ = std::move(K);
        A_ = SparseMat(R_.T.transpose() * K_full_ * R_.T);
        A_.makeCompressed();
        bool ok;
        if (backend_ == Backend::LU) {
            // the auto strategy picks a symmetric ordering on saddle patterns,
            // whose zero diagonal then blows up the pivot order
            lu_.umfpackControl()[UMFPACK_STRATEGY] = UMFPACK_STRATEGY_UNSYMMETRIC;
            lu_.compute(A_);
            ok = lu_.info() == Eigen::Success;
        } else {
            chol_.compute(A_);
            ok = chol_.info() == Eigen::Success;
        }
        if (!ok)
            throw NumericalError(
                "solve_saddle: singular factorization. Likely null-space candidate: "
                "missing zero-mean pressure pin or unpinned gauge mode "
                "(n_reduced=" + std::to_string(R_.n_red) + ")");

        // a numerically rank-deficient factorization survives compute() but
        // cannot reproduce a random rhs
        Rng rng(0xfeedface);
        VectorXd probe(A_.rows());
        for (int i = 0; i < probe.size(); ++i) probe[i] = rng.symm();
        VectorXd xs = backend_ == Backend::LU ? VectorXd(lu_.solve(probe))
                                              : VectorXd(chol_.solve(probe));
        double rres = (A_ * xs - probe).norm() / probe.norm();
        if (!std::isfinite(rres) || rres > 1e-6)
            throw NumericalError(
                "solve_saddle: factorization is numerically rank-deficient "
                "(probe residual " + std::to_string(rres) + "). Null-space candidate: "
                "missing zero-mean pressure pin or unpinned gauge/rigid mode.");
    }

    /// Solve for a full-space rhs. An override for the constraint offsets
    /// lets one factorization serve a family of inhomogeneously-constrained
    /// problems sharing the same reduction map (e.g. all drive directions of
    /// a cell problem).
    VectorXd solve(const VectorXd& rhs_full, SolveStats* stats = nullptr,
                   const VectorXd* offset_override = nullptr) const {
        const VectorXd& off = offset_override ? *offset_override : R_.offset;
        VectorXd b = R_.T.transpose() * (rhs_full - K_full_ * off);
        VectorXd x = backend_ == Backend::LU ? VectorXd(lu_.solve(b)) : VectorXd(chol_.solve(b));
        if ((backend_ == Backend::LU ? lu_.info() : chol_.info()) != Eigen::Success)
            throw NumericalError("solve_saddle: backsubstitution failed");
        double bn = b.norm();
        double res = (A_ * x - b).norm() / (bn > 0 ? bn : 1.0);
        if (stats) {
            stats->rel_residual = res;
            stats->n_reduced = R_.n_red;
        }
        if (res > 1e-9)
            throw NumericalError("solve_saddle: relative residual " + std::to_string(res) +
                                 " exceeds tolerance (ill-conditioned or inconsistent system)");
        VectorXd xf = R_.T * x + off;
        for (const auto& g : gauges_) {
            double wk = g.weights.dot(g.kernel);
            require(std::abs(wk) > 1e-300, "gauge constraint with degenerate kernel");
            xf -= ((g.weights.dot(xf) - g.rhs) / wk) * g.kernel;
        }
        return xf;
    }

    const Constraints::Reducer& reducer() const { return R_; }
    const SparseMat& full_matrix() const { return K_full_; }

private:
    int n_full_;
    Constraints::Reducer R_;
    std::vector<GaugeConstraint> gauges_;
    Backend backend_;
    SparseMat K_full_, A_;
    Eigen::UmfPackLU<SparseMat> lu_;
    Eigen::CholmodSupernodalLLT<SparseMat> chol_;
};

// ---------------------------------------------------------------------------
// Picard iteration
// ---------------------------------------------------------------------------

struct PicardHistory {
    std::vector<double> increment_norms; // ||w_{k+1} - w_k||
    std::vector<double> iterate_norms;   // ||w_{k+1}||
    std::vector<double> ratios;          // increment contraction ratios
    bool converged = false;
    int iterations = 0;
};

/// Fixed-point driver: repeatedly solve the w-frozen linear problem and test
/// the relative increment in a caller-supplied norm. Non-convergence is
/// reported through the history, not an exception, so callers can attach
/// diagnostics (smallness verdicts).
inline PicardHistory picard_solve(
    const std::function<VectorXd(const VectorXd&)>& solve_linearized_at,
    const std::function<double(const VectorXd&)>& norm, VectorXd& state, double tol, int maxit) {
    require(tol > 0, "picard_solve: tol must be positive");
    PicardHistory hist;
    for (int it = 0; it < maxit; ++it) {
        VectorXd next = solve_linearized_at(state);
        double dn = norm(next - state);
        double sn = norm(next);
        hist.increment_norms.push_back(dn);
        hist.iterate_norms.push_back(sn);
        if (hist.increment_norms.size() >= 2) {
            double prev = hist.increment_norms[hist.increment_norms.size() - 2];
            if (prev > 0) hist.ratios.push_back(dn / prev);
        }
        state = next;
        hist.iterations = it + 1;
        if (dn <= tol * std::max(sn, 1e-300) || (sn == 0 && dn == 0)) {
            hist.converged = true;
            break;
        }
        if (!std::isfinite(dn) || !std::isfinite(sn)) break;
    }
    return hist;
}

// ---------------------------------------------------------------------------
// Eigen utilities for constants estimation
// ---------------------------------------------------------------------------

/// Smallest eigenvalue of the pencil A x = lambda M x with A SPD, by inverse
/// power iteration on A^{-1} M. Deterministic start vector.
inline double smallest_pencil_eigenvalue(const SparseMat& A, const SparseMat& M, int iters = 200,
                                         double tol = 1e-10) {
    Eigen::SimplicialLDLT<SparseMat> chol(A);
    if (chol.info() != Eigen::Success)
        throw NumericalError("smallest_pencil_eigenvalue: factorization failed");
    Rng rng(12345);
    VectorXd x(A.rows());
    for (int i = 0; i < x.size(); ++i) x[i] = rng.symm();
    x.normalize();
    double lam = 0, lam_prev = -1;
    for (int it = 0; it < iters; ++it) {
        VectorXd y = chol.solve(M * x);
        double ny = y.norm();
        if (ny == 0) throw NumericalError("smallest_pencil_eigenvalue: zero iterate");
        x = y / ny;
        double num = x.dot(A * x), den = x.dot(M * x);
        if (den <= 0) throw NumericalError("smallest_pencil_eigenvalue: M not positive on iterate");
        lam = num / den;
        if (it > 4 && std::abs(lam - lam_prev) <= tol * std::abs(lam)) break;
        lam_prev = lam;
    }
    return lam;
}

} // namespace mrhomog
