#pragma once

#include <cstdint>
#include <limits>

namespace simlob::sim {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ splitmix64(b + 0x632BE59BD9B4E019ULL));
}

// Counter-based stream keyed by (seed, stream, counter). Each (agent, step)
// pair gets its own independent stream, so draws do not depend on the order in
// which agents act. Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t counter = 0)
        : state_(mix_key(mix_key(seed, stream), counter)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in [0, n), n > 0. Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t n) {
        unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>((*this)()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

private:
    std::uint64_t state_;
};

} // namespace simlob::sim
