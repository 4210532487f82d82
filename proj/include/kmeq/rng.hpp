#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace kmeq {

// Deterministic random source: an mt19937_64 core with hand-rolled
// derivations (uniform doubles, rejection-sampled integers, Box-Muller
// normals) so streams are identical across platforms and standard-library
// versions. Every experiment records the seed that built its stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform on [0, 1) with 53-bit resolution
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // integer uniform on [0, n), exact via rejection
    std::size_t below(std::size_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below requires n > 0");
        const std::uint64_t un = n;
        const std::uint64_t rem = (UINT64_MAX % un + 1) % un;
        if (rem == 0) return static_cast<std::size_t>(engine_() % un);
        const std::uint64_t limit = 0 - rem;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % un);
    }

    // standard normal via Box-Muller, one spare cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// splitmix64 finalizer over (seed, tag); used to derive independent
// sub-streams (per trial, per partition) from one base seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace kmeq
