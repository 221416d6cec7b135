#pragma once

#include <array>
#include <cstdint>

namespace abf {

/**
 * Philox4x32-10 counter-based generator.
 *
 * Stateless: each call maps a 128-bit counter and 64-bit key to four 32-bit
 * words. Streams are addressed, not advanced, so independent draws for
 * (seed, particle, step) tuples are reproducible under any thread layout.
 */
std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        const std::array<std::uint32_t, 2>& key);

/**
 * Addressed random stream over a Philox keyed by a 64-bit seed.
 *
 * The counter packs (id, step, draw, tag); `tag` separates independent uses
 * (particle noise, initialization, bootstrap, field synthesis) of one seed.
 */
class CounterRng {
public:
    enum Tag : std::uint32_t {
        kNoise = 0,
        kInit = 1,
        kBootstrap = 2,
        kSampling = 3,
        kFieldSynthesis = 4,
    };

    explicit CounterRng(std::uint64_t seed, std::uint32_t tag = kSampling)
        : seed_(seed), tag_(tag) {}

    std::uint64_t seed() const { return seed_; }

    /** Four raw words for (id, step, draw). */
    std::array<std::uint32_t, 4> words(std::uint64_t id, std::uint64_t step, std::uint32_t draw) const;
    /** Two u64 words for (id, step, draw). */
    std::array<std::uint64_t, 2> words64(std::uint64_t id, std::uint64_t step, std::uint32_t draw) const;
    /** Two uniforms in (0,1] with 53-bit resolution. */
    std::array<double, 2> uniforms(std::uint64_t id, std::uint64_t step, std::uint32_t draw) const;
    /** Two independent standard Gaussians (Box-Muller on one counter). */
    std::array<double, 2> gaussians(std::uint64_t id, std::uint64_t step, std::uint32_t draw) const;
    /** Uniform integer in [0, bound) by 64-bit multiply-shift on word 0. */
    std::uint64_t uniform_index(std::uint64_t id, std::uint64_t step, std::uint32_t draw,
                                std::uint64_t bound) const;

private:
    std::uint64_t seed_;
    std::uint32_t tag_;
};

} // namespace abf
