#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace gridweave::rng {

/// Deterministic 64-bit generator (splitmix64). Small state, trivially
/// seedable, and identical output on every platform, which is what the
/// reproducibility contract of the simulator rests on. Standard-library
/// distributions are avoided on purpose: their output is
/// implementation-defined.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller. Always consumes exactly two draws so
    /// the stream position does not depend on call history.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Index in [0, n).
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

private:
    static constexpr double kPi = 3.14159265358979323846;
    std::uint64_t state_;
};

/// FNV-1a over bytes; used for stream names and config fingerprints.
inline std::uint64_t fnv1a(std::string_view s,
                           std::uint64_t h = 0xCBF29CE484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 0x632BE59BD9B4E019ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Named substream derived from a master seed. Streams are independent, so
/// adding one consumer (say, a new household) never shifts the draws seen
/// by existing ones.
inline SplitMix64 substream(std::uint64_t master, std::string_view name) {
    return SplitMix64(mix(master, fnv1a(name)));
}

inline SplitMix64 substream(std::uint64_t master, std::string_view name,
                            std::uint64_t index) {
    return SplitMix64(mix(mix(master, fnv1a(name)), index));
}

} // namespace gridweave::rng
