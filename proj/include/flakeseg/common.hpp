// Shared utilities: error type, deterministic RNG streams, rounding rules,
// and a small index-parallel loop. Everything downstream depends on the
// determinism contract established here: identical seeds give identical
// streams regardless of thread count.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>

namespace flakeseg {

/// Base error for all contract violations reported by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a histogram carries no contrast to redistribute
/// (all occupied intensity bins equally likely).
class DegenerateHistogram : public Error {
public:
    DegenerateHistogram() : Error("degenerate histogram: all occupied bins have equal probability") {}
};

// Pinned rounding rule for every float->byte quantization in the library:
// round-half-away-from-zero, then clamp. std::round implements exactly
// half-away-from-zero.
inline double round_half_away(double x) {
    return std::round(x);
}

inline std::uint8_t clamp_u8(double x) {
    double r = std::round(x);
    if (r < 0.0) return 0;
    if (r > 255.0) return 255;
    return static_cast<std::uint8_t>(r);
}

/// splitmix64 step; used to derive independent substream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a child seed from a base seed and a stream path, e.g.
/// mix_seed(seed, {run, agent}). Order-sensitive by construction.
inline std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(base);
    for (std::uint64_t p : path)
        s = splitmix64(s ^ (p + 0x9e3779b97f4a7c15ULL));
    return s;
}

/// Deterministic RNG. Wraps mt19937_64 but generates uniforms and normals
/// itself so the byte stream does not depend on libstdc++'s distribution
/// implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Uniform integer in [0, n). Rejection sampling, unbiased.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw Error("Rng::below: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    /// Standard normal via Box-Muller; caches the paired deviate.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = 1.0 - uniform(); // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 gen_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

/// Runs fn(i) for i in [0, n). With jobs <= 1 runs inline; otherwise
/// spreads indices over worker threads. Items must be independent and
/// write disjoint outputs, which keeps results identical for every job
/// count.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Writes `content` to `path` through a temporary file in the same
/// directory followed by an atomic rename, so readers never observe a
/// half-written file.
void atomic_write_text(const std::string& path, const std::string& content);

} // namespace flakeseg
