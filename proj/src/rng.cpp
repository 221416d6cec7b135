#include "abf/rng.hpp"

#include <cmath>

namespace abf {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline std::array<std::uint32_t, 4> round_once(const std::array<std::uint32_t, 4>& c,
                                               const std::array<std::uint32_t, 2>& k) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        const std::array<std::uint32_t, 2>& key) {
    std::array<std::uint32_t, 4> c = counter;
    std::array<std::uint32_t, 2> k = key;
    c = round_once(c, k);
    for (int r = 1; r < 10; ++r) {
        k[0] += kWeyl0;
        k[1] += kWeyl1;
        c = round_once(c, k);
    }
    return c;
}

std::array<std::uint32_t, 4> CounterRng::words(std::uint64_t id, std::uint64_t step,
                                               std::uint32_t draw) const {
    // Counter layout: id (64) | step (48) | draw (8) | tag (8).
    std::array<std::uint32_t, 4> counter = {
        static_cast<std::uint32_t>(id),
        static_cast<std::uint32_t>(id >> 32),
        static_cast<std::uint32_t>(step),
        static_cast<std::uint32_t>((step >> 32) & 0xFFFFu) | ((draw & 0xFFu) << 16) |
            ((tag_ & 0xFFu) << 24),
    };
    std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                        static_cast<std::uint32_t>(seed_ >> 32)};
    return philox4x32(counter, key);
}

std::array<std::uint64_t, 2> CounterRng::words64(std::uint64_t id, std::uint64_t step,
                                                 std::uint32_t draw) const {
    auto w = words(id, step, draw);
    return {(static_cast<std::uint64_t>(w[1]) << 32) | w[0],
            (static_cast<std::uint64_t>(w[3]) << 32) | w[2]};
}

std::array<double, 2> CounterRng::uniforms(std::uint64_t id, std::uint64_t step,
                                           std::uint32_t draw) const {
    auto w = words64(id, step, draw);
    constexpr double scale = 0x1.0p-53;
    return {(static_cast<double>(w[0] >> 11) + 1.0) * scale,
            (static_cast<double>(w[1] >> 11) + 1.0) * scale};
}

std::array<double, 2> CounterRng::gaussians(std::uint64_t id, std::uint64_t step,
                                            std::uint32_t draw) const {
    auto u = uniforms(id, step, draw);
    double r = std::sqrt(-2.0 * std::log(u[0]));
    double theta = 2.0 * M_PI * u[1];
    return {r * std::cos(theta), r * std::sin(theta)};
}

std::uint64_t CounterRng::uniform_index(std::uint64_t id, std::uint64_t step, std::uint32_t draw,
                                        std::uint64_t bound) const {
    auto w = words64(id, step, draw);
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(w[0]) * static_cast<unsigned __int128>(bound)) >> 64);
}

} // namespace abf
