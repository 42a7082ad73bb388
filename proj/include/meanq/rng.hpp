#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace meanq {

// Deterministic random stream. All distribution transforms are done here
// (not via std::*_distribution) so that a (seed, platform) pair pins the
// exact draw sequence independently of the standard library version.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Uniform integer in [0, n). Uses the high-bits multiply trick; the
    // residual bias is ~n/2^64 and irrelevant at lab scale.
    int uniform_int(int n) {
        const auto wide = static_cast<unsigned __int128>(next_u64()) *
                          static_cast<unsigned __int128>(static_cast<std::uint64_t>(n));
        return static_cast<int>(wide >> 64);
    }

    // Standard normal via Box-Muller. Each call consumes exactly two
    // uniforms; nothing is cached across calls.
    double gaussian() {
        double u1 = uniform();
        const double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53; // log(0) guard
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 gen_;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

// Hash-mixes (root_seed, tag, index) into an independent substream seed.
// Tags attribute randomness to its source (member init, replay sampling,
// exploration, environment noise, evaluation) so the streams never alias.
inline std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view tag, std::uint64_t index = 0) {
    std::uint64_t h = detail::splitmix64(root_seed ^ detail::fnv1a(tag));
    h = detail::splitmix64(h ^ detail::splitmix64(index));
    return h;
}

inline Rng derive_rng(std::uint64_t root_seed, std::string_view tag, std::uint64_t index = 0) {
    return Rng(derive_seed(root_seed, tag, index));
}

} // namespace meanq
