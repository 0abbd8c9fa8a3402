// Counter-based Gaussian noise. Every deviate is addressed by
// (run, particle, step, tag, component) and produced by one Philox4x32-10
// evaluation, so draws are reproducible and independent of query order.
// That is what lets a finite system and its mean-field copies consume
// identical Brownian increments.
//
// Salmon et al., "Parallel random numbers: as easy as 1, 2, 3", SC 2011.

#ifndef MINMAXCBO_NOISE_HPP
#define MINMAXCBO_NOISE_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "minmaxcbo/common.hpp"

namespace mmcbo {

enum class NoiseTag : std::uint32_t { AgentX = 0, AgentY = 1, Aux = 2 };

// Initial-condition draws use this step index by convention.
inline constexpr int kInitStep = -1;

namespace philox {

inline constexpr std::uint32_t kMultA = 0xD2511F53u;
inline constexpr std::uint32_t kMultB = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeylA = 0x9E3779B9u;
inline constexpr std::uint32_t kWeylB = 0xBB67AE85u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
}

inline std::array<std::uint32_t, 4> round10(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int r = 0; r < 10; ++r) {
        std::uint32_t lo0, hi0, lo1, hi1;
        mul_hi_lo(kMultA, ctr[0], lo0, hi0);
        mul_hi_lo(kMultB, ctr[2], lo1, hi1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeylA;
        key[1] += kWeylB;
    }
    return ctr;
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t v = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>(v >> 11) * 0x1.0p-53;  // [0, 1)
}

}  // namespace philox

class NoiseStream {
public:
    explicit NoiseStream(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    // Standard normal deviate for one address (Box-Muller, cosine branch).
    double normal(std::uint32_t run, std::uint32_t particle, int step,
                  NoiseTag tag, std::uint32_t component) const {
        const auto r = block(run, particle, step, tag, component);
        const double u1 = philox::to_unit(r[0], r[1]);
        const double u2 = philox::to_unit(r[2], r[3]);
        const double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
        return radius * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Uniform deviate in [0, 1) for one address.
    double uniform01(std::uint32_t run, std::uint32_t particle, int step,
                     NoiseTag tag, std::uint32_t component) const {
        const auto r = block(run, particle, step, tag, component);
        return philox::to_unit(r[0], r[1]);
    }

private:
    std::array<std::uint32_t, 4> block(std::uint32_t run, std::uint32_t particle, int step,
                                       NoiseTag tag, std::uint32_t component) const {
        if (run >= (1u << 30))
            throw UsageError("NoiseStream: run id must be below 2^30");
        const std::uint32_t step_code = static_cast<std::uint32_t>(step + 1);
        const std::array<std::uint32_t, 4> ctr = {
            step_code, particle, component,
            (static_cast<std::uint32_t>(tag) << 30) | run};
        const std::array<std::uint32_t, 2> key = {
            static_cast<std::uint32_t>(seed_),
            static_cast<std::uint32_t>(seed_ >> 32)};
        return philox::round10(ctr, key);
    }

    std::uint64_t seed_;
};

// A stream bound to one run id; what simulations pass around.
struct NoiseChannel {
    const NoiseStream* stream = nullptr;
    std::uint32_t run = 0;

    double normal(std::uint32_t particle, int step, NoiseTag tag, std::uint32_t component) const {
        return stream->normal(run, particle, step, tag, component);
    }
    double uniform01(std::uint32_t particle, int step, NoiseTag tag, std::uint32_t component) const {
        return stream->uniform01(run, particle, step, tag, component);
    }
};

}  // namespace mmcbo

#endif  // MINMAXCBO_NOISE_HPP
