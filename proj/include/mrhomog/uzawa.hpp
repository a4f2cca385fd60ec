#pragma once

#include "mrhomog/solver.hpp"

#include <Eigen/CholmodSupport>

namespace mrhomog {

/// Augmented-Lagrangian Uzawa solver for symmetric Stokes-type saddle systems
///   [ A  B' ] [u]   [f]
///   [ B  0  ] [p] = [g]
/// with A SPD on its reduced space. Direct LU of the coupled system has
/// prohibitive fill for 3D Taylor-Hood at desk scale, while the velocity
/// block factors cheaply with a supernodal Cholesky. The augmentation
///   A_g = A + gamma B' W B,  W = lumped pressure mass inverse,
/// drives the divergence residual down by ~1/gamma per sweep, so a handful
/// of sweeps reach direct-solver accuracy.
///
/// Velocity and pressure carry separate constraint reducers; offsets may be
/// overridden per solve (shared factorization across drive directions).
class UzawaStokesSolver {
public:
    struct Blocks {
        int nu_full = 0, np_full = 0;
        std::vector<Triplet> A;  // (u,u), full dof indices
        std::vector<Triplet> B;  // rows p, cols u, full dof indices
        VectorXd p_lumped_mass;  // full pressure space, > 0 on active dofs
    };

    UzawaStokesSolver(const Blocks& blk, const Constraints::Reducer& Ru,
                      const Constraints::Reducer& Rp, double gamma = 1e4)
        : Ru_(Ru), Rp_(Rp), gamma_(gamma) {
        SparseMat A(blk.nu_full, blk.nu_full);
        A.setFromTriplets(blk.A.begin(), blk.A.end());
        A_full_ = std::move(A);
        SparseMat B(blk.np_full, blk.nu_full);
        B.setFromTriplets(blk.B.begin(), blk.B.end());
        B_full_ = std::move(B);

        Ared_ = SparseMat(Ru_.T.transpose() * A_full_ * Ru_.T);
        Bred_ = SparseMat(Rp_.T.transpose() * B_full_ * Ru_.T);

        // lumped pressure "mass" in reduced coordinates
        VectorXd mred = Rp_.T.transpose() * blk.p_lumped_mass;
        Winv_ = VectorXd::Zero(mred.size());
        for (int i = 0; i < mred.size(); ++i) {
            require(mred[i] > 0, "UzawaStokesSolver: nonpositive lumped pressure mass");
            Winv_[i] = 1.0 / mred[i];
        }

        SparseMat BtWB = SparseMat(Bred_.transpose() * Winv_.asDiagonal() * Bred_);
        SparseMat Ag = Ared_ + gamma_ * BtWB;
        Ag.makeCompressed();
        chol_.compute(Ag);
        if (chol_.info() != Eigen::Success)
            throw NumericalError(
                "uzawa: velocity block factorization failed; the augmented block "
                "must be SPD (check pins/constraints)");
    }

    struct Result {
        VectorXd u_full, p_full;
        double saddle_residual = 0; // relative, on the reduced system
        int sweeps = 0;
    };

    /// Solve with full-space loads f (velocity) and g (pressure rows target).
    /// Offsets override the reducers' built-in inhomogeneities when given.
    Result solve(const VectorXd& f_full, const VectorXd& g_full,
                 const VectorXd* u_offset = nullptr, const VectorXd* p_offset = nullptr,
                 double tol = 1e-11, int max_sweeps = 30) const {
        const VectorXd& uoff = u_offset ? *u_offset : Ru_.offset;
        const VectorXd& poff = p_offset ? *p_offset : Rp_.offset;
        VectorXd f = Ru_.T.transpose() * (f_full - A_full_ * uoff) -
                     Ru_.T.transpose() * (B_full_.transpose() * poff);
        VectorXd g = Rp_.T.transpose() * (g_full - B_full_ * uoff);

        VectorXd p = VectorXd::Zero(Bred_.rows());
        VectorXd u;
        double fn = std::max({f.norm(), g.norm(), 1e-300});
        double res = 0;
        int sweep = 0;
        for (; sweep < max_sweeps; ++sweep) {
            VectorXd rhs = f - Bred_.transpose() * p +
                           gamma_ * (Bred_.transpose() * (Winv_.cwiseProduct(g)));
            u = chol_.solve(rhs);
            VectorXd div = Bred_ * u - g;
            p += gamma_ * Winv_.cwiseProduct(div);
            double r1 = (Ared_ * u + Bred_.transpose() * p - f).norm();
            double r2 = div.norm();
            res = std::sqrt(r1 * r1 + r2 * r2) / fn;
            if (res <= tol) break;
        }
        if (res > 1e-9)
            throw NumericalError("uzawa: stalled at relative residual " + std::to_string(res));
        Result out;
        out.u_full = Ru_.T * u + uoff;
        out.p_full = Rp_.T * p + poff;
        out.saddle_residual = res;
        out.sweeps = sweep + 1;
        return out;
    }

    const Constraints::Reducer& velocity_reducer() const { return Ru_; }
    const Constraints::Reducer& pressure_reducer() const { return Rp_; }

private:
    Constraints::Reducer Ru_, Rp_;
    double gamma_;
    SparseMat A_full_, B_full_, Ared_, Bred_;
    VectorXd Winv_;
    Eigen::CholmodSupernodalLLT<SparseMat> chol_;
};

} // namespace mrhomog
