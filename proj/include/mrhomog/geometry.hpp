#pragma once

#include "mrhomog/common.hpp"

#include <cmath>

namespace mrhomog {

enum class InclusionShape { Disk, Ellipse };

/// Geometry of the unit cell Y = (0,1)^D with a single centered inclusion.
/// The inclusion closure must stay strictly inside the open cell.
template <int D>
struct CellGeometry {
    InclusionShape shape = InclusionShape::Disk;
    Vec<D> center = Vec<D>::Constant(0.5);
    Vec<D> semiaxes = Vec<D>::Constant(0.25); // all equal for a disk/sphere

    double radius() const { return semiaxes[0]; }

    void validate() const {
        for (int c = 0; c < D; ++c) {
            require(semiaxes[c] >= 0.0, "inclusion semi-axis must be >= 0");
            require(center[c] - semiaxes[c] > 0.0 && center[c] + semiaxes[c] < 1.0,
                    "inclusion closure must lie strictly inside the open cell "
                    "(interface must keep positive distance to the cell boundary)");
        }
        if (shape == InclusionShape::Disk)
            for (int c = 1; c < D; ++c)
                require(semiaxes[c] == semiaxes[0], "disk/sphere requires equal semi-axes");
    }

    bool empty() const { return semiaxes[0] <= 0.0; }

    /// Level function, negative inside the inclusion. For a disk this is the
    /// signed distance; for an ellipse a smooth level with the same zero set.
    double level(const Vec<D>& x) const {
        if (empty()) return 1.0;
        if (shape == InclusionShape::Disk) return (x - center).norm() - semiaxes[0];
        double q = 0;
        for (int c = 0; c < D; ++c) {
            double t = (x[c] - center[c]) / semiaxes[c];
            q += t * t;
        }
        return std::sqrt(q) - 1.0;
    }

    /// Project a point onto the interface along the ray from the center.
    /// Lands on the analytic surface exactly (up to roundoff).
    Vec<D> project(const Vec<D>& x) const {
        Vec<D> r = x - center;
        if (shape == InclusionShape::Disk) {
            double nr = r.norm();
            if (nr == 0) { r.setZero(); r[0] = semiaxes[0]; return center + r; }
            return center + r * (semiaxes[0] / nr);
        }
        double q = 0;
        for (int c = 0; c < D; ++c) {
            double t = r[c] / semiaxes[c];
            q += t * t;
        }
        double lam = std::sqrt(q);
        if (lam == 0) { Vec<D> p = center; p[0] += semiaxes[0]; return p; }
        return center + r / lam;
    }

    /// Outward unit normal of the level set at x (radial for disks).
    Vec<D> normal(const Vec<D>& x) const {
        Vec<D> g;
        for (int c = 0; c < D; ++c)
            g[c] = (x[c] - center[c]) / (semiaxes[c] * semiaxes[c]);
        double n = g.norm();
        if (n == 0) { g.setZero(); g[0] = 1; return g; }
        return g / n;
    }

    double volume() const {
        if (empty()) return 0.0;
        double prod = 1;
        for (int c = 0; c < D; ++c) prod *= semiaxes[c];
        return (D == 2) ? M_PI * prod : 4.0 / 3.0 * M_PI * prod;
    }
};

} // namespace mrhomog
