#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "ambiloc/types.hpp"

namespace ambiloc {

// Deterministic per-stream generator. A stream is fully determined by
// (master_seed, stream_id), so trial results do not depend on how trials
// are scheduled across workers. All distributions are sampled by explicit
// algorithms (no std:: distributions, which are implementation-defined).
class rng_stream {
  public:
    rng_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
        // SplitMix64 over a mix of the two keys seeds xoshiro256++ state.
        std::uint64_t z = master_seed ^ (0x9E3779B97F4A7C15ULL * (stream_id + 1));
        for (auto& w : state_) w = splitmix_(z);
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl_(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl_(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; safe as a log() argument.
    double uniform_pos() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    // Standard normal via Box-Muller; the second value of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        const double t = 2.0 * M_PI * uniform();
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    // Poisson draw: sequential inversion below kInversionCutoff, else
    // Hormann's transformed rejection (PTRD). Both are fixed algorithms so
    // streams reproduce bit-identically everywhere.
    std::uint64_t poisson(double mean) {
        if (!(mean >= 0.0)) throw validation_error("poisson mean must be >= 0");
        if (mean == 0.0) return 0;
        if (mean < kInversionCutoff) return poisson_inversion_(mean);
        return poisson_ptrd_(mean);
    }

    // Uniform point in the disk of given radius centred on `centre`.
    // Inverse-CDF on the radius (r = R*sqrt(u)) plus a uniform angle:
    // consumes exactly two draws, no rejection.
    vec2 point_in_disk(vec2 centre, double radius) {
        const double r = radius * std::sqrt(uniform());
        const double t = 2.0 * M_PI * uniform();
        return {centre.x + r * std::cos(t), centre.y + r * std::sin(t)};
    }

    static constexpr double kInversionCutoff = 30.0;

  private:
    static std::uint64_t splitmix_(std::uint64_t& z) {
        z += 0x9E3779B97F4A7C15ULL;
        std::uint64_t x = z;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    static std::uint64_t rotl_(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t poisson_inversion_(double mean) {
        const double u = uniform();
        double p = std::exp(-mean);
        double cdf = p;
        std::uint64_t k = 0;
        // mean < 30 keeps exp(-mean) well above underflow; the guard bounds
        // the walk for u in the extreme upper tail.
        const std::uint64_t guard = static_cast<std::uint64_t>(mean + 60.0 * std::sqrt(mean) + 40.0);
        while (u > cdf && k < guard) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }

    std::uint64_t poisson_ptrd_(double mean) {
        // W. Hormann, "The transformed rejection method for generating
        // Poisson random variables" (PTRD), valid for mean >= 10.
        const double smu = std::sqrt(mean);
        const double b = 0.931 + 2.53 * smu;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        const double log_mean = std::log(mean);
        for (;;) {
            double u = uniform() - 0.5;
            double v = uniform();
            const double us = 0.5 - std::abs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
            const double rhs = kf * log_mean - mean - std::lgamma(kf + 1.0);
            if (lhs <= rhs) return static_cast<std::uint64_t>(kf);
        }
    }

    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ambiloc
