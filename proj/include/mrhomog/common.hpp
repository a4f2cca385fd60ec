#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrhomog {

using Eigen::VectorXd;
using Eigen::MatrixXd;
using SparseMat = Eigen::SparseMatrix<double>;
using Triplet   = Eigen::Triplet<double>;

template <int D> using Vec = Eigen::Matrix<double, D, 1>;
template <int D> using Mat = Eigen::Matrix<double, D, D>;

/// Thrown on bad arguments or violated preconditions.
struct ArgumentError : std::runtime_error {
    explicit ArgumentError(const std::string& m) : std::runtime_error(m) {}
};
/// Thrown when a numerical stage fails (singular factorization, eigen failure,
/// non-convergence). Carries diagnostics in the message.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& m) : std::runtime_error(m) {}
};
/// Thrown on configuration / setup problems (missing tags, bad spaces).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ArgumentError(msg);
}

/// FNV-1a, used for config hashes and output checksums (stable across runs).
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) { h ^= p[i]; h *= 1099511628211ull; }
    return h;
}
inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

/// Deterministic xorshift RNG for test fields and estimators; independent of
/// libc rand so results are identical across platforms.
struct Rng {
    std::uint64_t s;
    explicit Rng(std::uint64_t seed = 0x9e3779b97f4a7c15ull) : s(seed ? seed : 1) {}
    std::uint64_t next() {
        s ^= s << 13; s ^= s >> 7; s ^= s << 17; return s;
    }
    /// uniform in [0,1)
    double uniform() { return double(next() >> 11) * (1.0 / 9007199254740992.0); }
    /// uniform in [-1,1)
    double symm() { return 2.0 * uniform() - 1.0; }
};

} // namespace mrhomog
