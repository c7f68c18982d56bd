#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace svsr {

// Deterministic random source for one inference run. Every stochastic
// component (weight init, SGLD noise, synthetic degradation noise) draws from
// a single seeded instance, so a run is replayable from its seed alone.
//
// gaussian() uses Box-Muller with a fixed two-uniforms-per-draw consumption,
// which keeps the draw count an exact function of the call count.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Standard normal draw.
    double gaussian() {
        ++gaussian_draws_;
        // (0, 1] so the log is finite.
        double u1 = static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    std::uint64_t next_u64() { return gen_(); }

    std::uint64_t gaussian_draws() const { return gaussian_draws_; }

    // Independent stream for sub-task `index` of a run seeded with `seed`
    // (splitmix64 finalizer over the pair).
    static std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (index + 1);
        x ^= x >> 30;
        x *= 0xBF58476D1CE4E5B9ull;
        x ^= x >> 27;
        x *= 0x94D049BB133111EBull;
        x ^= x >> 31;
        return x;
    }

private:
    std::mt19937_64 gen_;
    std::uint64_t gaussian_draws_ = 0;
};

}  // namespace svsr
