#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace scenemem {

using Seed = std::uint64_t;

// SplitMix64 finalizer.
Seed mix64(Seed x);

// Named-stream child seed: a stable hash of (parent, stream, key). Independent
// of the order in which children are requested.
Seed derive_seed(Seed parent, std::string_view stream, std::string_view key = {});
Seed derive_seed(Seed parent, std::string_view stream, std::uint64_t key);

/// Seeded generator. Wraps mt19937_64 but performs its own conversions to
/// reals and indices so results do not depend on the standard library's
/// distribution implementations.
class Rng {
public:
    explicit Rng(Seed seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform on [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform on {0, ..., n-1}; n must be positive.
    std::size_t index(std::size_t n);

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller.
    double normal();

    // Index drawn proportionally to non-negative weights. Returns
    // weights.size() when every weight is zero.
    std::size_t weighted_index(std::span<const double> weights);

private:
    std::mt19937_64 engine_;
};

}  // namespace scenemem
