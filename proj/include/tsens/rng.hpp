#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace tsens {

// Counter-based random stream built on the splitmix64 finalizer.
//
// A stream is addressed by a key: an arbitrary list of 64-bit parts
// (seed, replicate index, stratum id, ...). Streams with distinct keys are
// statistically independent, and a stream's output depends only on its key
// and the number of draws taken from it. This is what makes resampling and
// simulation reproducible under any execution order: every parallel unit
// derives its own stream instead of sharing a generator.
//
// All distributions are implemented here rather than with <random>
// distribution adaptors, whose output is implementation-defined.
class RngStream {
public:
    RngStream() = default;

    explicit RngStream(std::uint64_t state) : state_(state) {}

    // Derive a stream from key parts by chained mixing.
    static RngStream from_key(std::initializer_list<std::uint64_t> parts) {
        std::uint64_t h = 0x243f6a8885a308d3ull;  // arbitrary nonzero start
        for (std::uint64_t p : parts) {
            h = mix(h ^ mix(p));
        }
        return RngStream(h);
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    // Uniform on [0,1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Standard normal via Box-Muller. Uses two uniforms per draw and no
    // cached spare, so the draw count per variate is fixed.
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi() * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

private:
    static constexpr double two_pi() { return 6.283185307179586476925286766559; }

    // splitmix64 output function (Vigna); full-avalanche 64-bit mix.
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_ = 0;
};

}  // namespace tsens
