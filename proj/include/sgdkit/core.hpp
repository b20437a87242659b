#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sgdkit {

inline constexpr std::string_view kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Errors. Buckets match the CLI exit codes: config -> 1, data -> 2,
// divergence -> 3.
// ---------------------------------------------------------------------------

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& what, std::uint64_t iter)
        : std::runtime_error(what), iteration(iter) {}
    std::uint64_t iteration;
};

// ---------------------------------------------------------------------------
// ParamVector: flat 64-bit parameter storage. All model families flatten
// into one of these; dim is simply size().
// ---------------------------------------------------------------------------

using ParamVector = std::vector<double>;

inline double dot(const ParamVector& a, const ParamVector& b) {
    if (a.size() != b.size())
        throw ShapeError("dot: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_norm(const ParamVector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

inline double norm(const ParamVector& v) { return std::sqrt(squared_norm(v)); }

// y += alpha * x
inline void axpy(double alpha, const ParamVector& x, ParamVector& y) {
    if (x.size() != y.size()) throw ShapeError("axpy: dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(ParamVector& v, double alpha) {
    for (double& x : v) x *= alpha;
}

inline bool all_finite(const ParamVector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// RngState: xoshiro256** (Blackman & Vigna), seeded through splitmix64.
// The generator is fixed so that runs serialize identically across
// platforms; its name is echoed into run metadata.
// ---------------------------------------------------------------------------

class RngState {
public:
    explicit RngState(std::uint64_t seed = 0) : seed_(seed) {
        std::uint64_t z = seed;
        for (auto& w : s_) w = splitmix64(z);
    }

    static constexpr std::string_view generator_name() { return "xoshiro256**"; }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0, 1), 53-bit resolution
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // unbiased uniform draw from {0, ..., n-1}
    std::uint64_t bounded(std::uint64_t n) {
        if (n == 0) throw ConfigError("RngState::bounded: n must be positive");
        using u128 = unsigned __int128;
        std::uint64_t x = next_u64();
        u128 m = static_cast<u128>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<u128>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& z) {
        z += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = z;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t seed_;
    std::uint64_t s_[4];
};

// ---------------------------------------------------------------------------
// IndexBatch: a uniformly drawn subset of {0, ..., source_size-1},
// without replacement.
// ---------------------------------------------------------------------------

struct IndexBatch {
    std::vector<std::uint32_t> indices;
    std::size_t source_size = 0;

    std::size_t size() const { return indices.size(); }
};

inline IndexBatch sample_batch(RngState& rng, std::size_t m, std::size_t size) {
    if (size == 0) throw ConfigError("sample_batch: batch size must be positive");
    if (size > m)
        throw ConfigError("sample_batch: batch size " + std::to_string(size) +
                          " exceeds source size " + std::to_string(m));
    std::vector<std::uint32_t> pool(m);
    std::iota(pool.begin(), pool.end(), 0u);
    IndexBatch batch;
    batch.source_size = m;
    batch.indices.resize(size);
    // partial Fisher-Yates: uniform over all size-subsets
    for (std::size_t i = 0; i < size; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.bounded(m - i));
        std::swap(pool[i], pool[j]);
        batch.indices[i] = pool[i];
    }
    return batch;
}

}  // namespace sgdkit
