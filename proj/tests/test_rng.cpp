#include "doctest.h"

#include <array>
#include <cmath>
#include <cstdint>
#include <set>

#include "abf/rng.hpp"

using namespace abf;

TEST_CASE("philox4x32 known-answer vectors") {
    // Reference vectors of the counter-based generator (10-round philox4x32).
    const std::array<std::uint32_t, 4> zero =
        philox4x32({0u, 0u, 0u, 0u}, {0u, 0u});
    CHECK(zero == std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu,
                                               0x9b00dbd8u});
    const std::array<std::uint32_t, 4> ones = philox4x32(
        {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    CHECK(ones == std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u,
                                               0x6d5451fdu});
    const std::array<std::uint32_t, 4> pi_digits = philox4x32(
        {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    CHECK(pi_digits == std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u,
                                                    0x24126ea1u});
}

TEST_CASE("uniforms live in (0,1] and are deterministic") {
    CounterRng rng(12345, CounterRng::kSampling);
    for (std::uint64_t i = 0; i < 2000; ++i) {
        const auto u = rng.uniforms(i, 7, 3);
        CHECK(u[0] > 0.0);
        CHECK(u[0] <= 1.0);
        CHECK(u[1] > 0.0);
        CHECK(u[1] <= 1.0);
    }
    CounterRng again(12345, CounterRng::kSampling);
    CHECK(rng.uniforms(11, 22, 33) == again.uniforms(11, 22, 33));
}

TEST_CASE("different seeds, tags, and counters decorrelate") {
    CounterRng a(1, CounterRng::kNoise);
    CounterRng b(2, CounterRng::kNoise);
    CounterRng c(1, CounterRng::kInit);
    CHECK(a.words(0, 0, 0) != b.words(0, 0, 0));
    CHECK(a.words(0, 0, 0) != c.words(0, 0, 0));
    CHECK(a.words(0, 0, 0) != a.words(1, 0, 0));
    CHECK(a.words(0, 0, 0) != a.words(0, 1, 0));
    CHECK(a.words(0, 0, 0) != a.words(0, 0, 1));
}

TEST_CASE("gaussian moments over a large addressed sample") {
    CounterRng rng(777, CounterRng::kNoise);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
    for (int i = 0; i < n / 2; ++i) {
        const auto g = rng.gaussians(static_cast<std::uint64_t>(i), 0, 0);
        for (double x : g) {
            sum += x;
            sum2 += x * x;
            sum4 += x * x * x * x;
        }
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    const double kurt = sum4 / n / (var * var);
    // Standard error of the mean is ~1/sqrt(n) = 0.0022.
    CHECK(std::fabs(mean) < 0.01);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
    CHECK(kurt == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("uniform_index stays in range and covers the range") {
    CounterRng rng(4242, CounterRng::kBootstrap);
    const std::uint64_t bound = 37;
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 4000; ++i) {
        const std::uint64_t j = rng.uniform_index(0, i, 0, bound);
        CHECK(j < bound);
        seen.insert(j);
    }
    CHECK(seen.size() == bound);
}

TEST_CASE("words64 splits the 128-bit block") {
    CounterRng rng(9, CounterRng::kFieldSynthesis);
    const auto w32 = rng.words(3, 4, 5);
    const auto w64 = rng.words64(3, 4, 5);
    CHECK(w64[0] == (static_cast<std::uint64_t>(w32[1]) << 32 | w32[0]));
    CHECK(w64[1] == (static_cast<std::uint64_t>(w32[3]) << 32 | w32[2]));
}
