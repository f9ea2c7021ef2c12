#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "oee/errors.hpp"

namespace oee {

// Counter-mixed generator: xoshiro256++ streams seeded through splitmix64,
// with hierarchical stream derivation. A stream is a pure function of its
// 64-bit seed, and `child(id)` derives an independent stream from
// (seed, id) without touching the parent's draw state, so rollouts and
// experiment cells can fork reproducible substreams in any order.
//
// Distributions (uniform, integer, normal) are generated from explicit
// integer arithmetic (53-bit mantissa fill, Lemire rejection, Box-Muller)
// rather than std::<distribution>, so a (seed, config) pair yields the
// same draws on every build of this code base.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t x = seed;
        for (auto& w : state_) w = splitmix64(x);
    }

    std::uint64_t seed() const { return seed_; }

    // Independent substream labelled `id`. Distinct ids give distinct
    // streams; the parent stream is unaffected.
    Rng child(std::uint64_t id) const {
        std::uint64_t x = seed_ + 0x9E3779B97F4A7C15ULL * (id + 1);
        return Rng(splitmix64(x));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53 random mantissa bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        if (!(lo <= hi)) throw ArgumentError("uniform: lo > hi");
        return lo + (hi - lo) * uniform01();
    }

    // Unbiased integer in [0, n) via Lemire's multiply-shift rejection.
    std::uint64_t uniform_u64_below(std::uint64_t n) {
        if (n == 0) throw ArgumentError("uniform_u64_below: n == 0");
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
            while (lo < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    std::int64_t uniform_int(std::int64_t n) {
        if (n <= 0) throw ArgumentError("uniform_int: n <= 0");
        return static_cast<std::int64_t>(uniform_u64_below(static_cast<std::uint64_t>(n)));
    }

    // Box-Muller (cosine branch). Draws two uniforms per call; no cached
    // state, so interleaving with other draws stays reproducible.
    double normal(double mean = 0.0, double sd = 1.0) {
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sd * r * std::cos(2.0 * pi() * u2);
    }

  private:
    static constexpr double pi() { return 3.14159265358979323846; }

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t state_[4];
};

}  // namespace oee
