// random.hpp: Counter-based Philox4x32-10 streams and Gaussian draws
//
// A stream is keyed by (seed, stream index); the i-th block of a stream is a
// pure function of (seed, index, i), so trajectories can be generated in any
// order or on any thread and still reproduce bit-for-bit.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace spinqsd {

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

constexpr PhiloxBlock philox4x32_10(PhiloxBlock ctr, PhiloxKey key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kW0;
        key[1] += kW1;
    }
    return ctr;
}

// SplitMix64 finalizer; used to derive independent seeds for sub-tasks.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(base ^ splitmix64(index + 1));
}

class PhiloxStream {
public:
    constexpr PhiloxStream() = default;
    constexpr PhiloxStream(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream) {}

    constexpr PhiloxBlock next_block() {
        const PhiloxBlock ctr{static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                              static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        ++counter_;
        return philox4x32_10(ctr, key_);
    }

    // Four independent standard normals (two Box-Muller pairs).
    std::array<double, 4> normals4() {
        const PhiloxBlock b = next_block();
        const double u0 = to_open_unit(b[0]), u1 = to_open_unit(b[1]);
        const double u2 = to_open_unit(b[2]), u3 = to_open_unit(b[3]);
        const double r0 = std::sqrt(-2.0 * std::log(u0));
        const double r1 = std::sqrt(-2.0 * std::log(u2));
        const double a0 = 2.0 * std::numbers::pi * u1;
        const double a1 = 2.0 * std::numbers::pi * u3;
        return {r0 * std::cos(a0), r0 * std::sin(a0), r1 * std::cos(a1), r1 * std::sin(a1)};
    }

    double uniform() { return to_open_unit(next_block()[0]); }

    constexpr std::uint64_t blocks_used() const { return counter_; }

    // Uniform on (0, 1) from 32 bits.
    static constexpr double to_open_unit(std::uint32_t x) { return (static_cast<double>(x) + 0.5) * 0x1p-32; }

private:
    PhiloxKey key_{0, 0};
    std::uint64_t stream_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace spinqsd
