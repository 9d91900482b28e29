#include "scenemem/rng.hpp"

#include <cmath>
#include <numbers>

namespace scenemem {

Seed mix64(Seed x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

Seed derive_seed(Seed parent, std::string_view stream, std::string_view key) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ mix64(parent);
    h = fnv1a(h, stream);
    h = fnv1a(h ^ 0xff, key);
    return mix64(h ^ (stream.size() << 32) ^ key.size());
}

Seed derive_seed(Seed parent, std::string_view stream, std::uint64_t key) {
    return mix64(derive_seed(parent, stream) ^ mix64(key + 0x51ed27ULL));
}

std::size_t Rng::index(std::size_t n) {
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
}

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::weighted_index(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) return weights.size();
    const double target = uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        acc += weights[i];
        last_positive = i;
        if (target < acc) return i;
    }
    return last_positive;
}

}  // namespace scenemem
