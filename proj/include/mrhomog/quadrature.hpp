#pragma once

#include "mrhomog/common.hpp"

#include <map>
#include <vector>

namespace mrhomog {

/// Quadrature rule on the unit reference simplex
///   T = { x in R^D : x_i >= 0, sum x_i <= 1 }.
/// Weights sum to the reference volume 1/D!.
template <int D>
struct QuadratureRule {
    std::vector<Vec<D>> points;
    std::vector<double> weights;
    int degree = 0;
    int size() const { return int(points.size()); }
};

namespace detail {

// enumerate nonnegative integer (n+1)-tuples with given sum
inline void enum_compositions(int slots, int total, std::vector<int>& cur,
                              std::vector<std::vector<int>>& out) {
    if (int(cur.size()) == slots - 1) {
        cur.push_back(total);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int v = 0; v <= total; ++v) {
        cur.push_back(v);
        enum_compositions(slots, total - v, cur, out);
        cur.pop_back();
    }
}

} // namespace detail

/// Grundmann-Moller rule exact for polynomials of degree 2s+1 on the unit
/// simplex. Generated on demand for any s and dimension; some weights are
/// negative, which is fine for assembly.
template <int D>
QuadratureRule<D> grundmann_moller(int s) {
    QuadratureRule<D> rule;
    const int n = D;
    const int d = 2 * s + 1;
    rule.degree = d;
    double pow2 = std::pow(2.0, -2.0 * s);
    for (int i = 0; i <= s; ++i) {
        // w_i = (-1)^i 2^{-2s} (d+n-2i)^d / (i! (d+n-i)!)
        double num = std::pow(double(d + n - 2 * i), double(d));
        double den = 1.0;
        for (int t = 2; t <= i; ++t) den *= t;
        for (int t = 2; t <= d + n - i; ++t) den *= t;
        double w = ((i % 2) ? -1.0 : 1.0) * pow2 * num / den;

        std::vector<std::vector<int>> ks;
        std::vector<int> cur;
        detail::enum_compositions(n + 1, s - i, cur, ks);
        for (const auto& k : ks) {
            // barycentric coords (2k_j+1)/(d+n-2i); drop the 0th for reference coords
            Vec<D> p;
            for (int c = 0; c < n; ++c)
                p[c] = double(2 * k[c + 1] + 1) / double(d + n - 2 * i);
            rule.points.push_back(p);
            rule.weights.push_back(w);
        }
    }
    return rule;
}

/// Rule exact at least for the given polynomial degree (cached).
template <int D>
const QuadratureRule<D>& simplex_rule(int degree) {
    static std::map<int, QuadratureRule<D>> cache;
    int s = std::max(0, (degree - 1 + 1) / 2); // smallest s with 2s+1 >= degree
    auto it = cache.find(s);
    if (it == cache.end()) it = cache.emplace(s, grundmann_moller<D>(s)).first;
    return it->second;
}

} // namespace mrhomog
