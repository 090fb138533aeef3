#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace recon_net {

/// SplitMix64 finalizer (Steele, Lea & Flood 2014, variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// Seed of stream k under a master seed: mix64(master ^ k * golden gamma).
constexpr std::uint64_t sub_seed(std::uint64_t master, std::uint64_t k) noexcept {
    return mix64(master ^ (k * kGoldenGamma));
}

/// mt19937_64 with explicitly defined variate transforms, so a seed yields
/// the same stream on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open_low() { return 1.0 - uniform(); }

    double normal() {
        // Box-Muller, one variate per call.
        const double u1 = uniform_open_low();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double exponential() { return -std::log(uniform_open_low()); }

    /// Poisson variate by multiplicative inversion in chunks of mean <= 20.
    std::uint64_t poisson(double mean) {
        std::uint64_t count = 0;
        while (mean > 0.0) {
            const double chunk = mean > 20.0 ? 20.0 : mean;
            mean -= chunk;
            const double limit = std::exp(-chunk);
            double prod = uniform_open_low();
            while (prod > limit) {
                ++count;
                prod *= uniform_open_low();
            }
        }
        return count;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace recon_net
