#pragma once

#include <cstdint>
#include <random>

namespace growlat {

// Portable random streams. std::uniform_real_distribution is implementation
// defined, so doubles are produced directly from the top 53 bits of
// mt19937_64 output; results are identical across standard libraries.
//
// Stream layout: every (seed, salt, index) triple owns an independent
// mt19937_64 seeded with splitmix64(seed ^ splitmix64(salt * 2^32 + index)).
// Salts separate purposes (rest lengths vs growth); the index is the
// direction number inside the connectivity.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

enum class StreamSalt : std::uint64_t { rest = 1, growth = 2, jitter = 3, test = 4 };

class RandomStream {
public:
    RandomStream(std::uint64_t seed, StreamSalt salt, std::uint64_t index)
        : engine_(splitmix64(seed ^ splitmix64((static_cast<std::uint64_t>(salt) << 32) + index))) {}

    /// Uniform double in [0, 1).
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi]; exactly lo when lo == hi.
    double uniform(double lo, double hi) { return lo == hi ? lo : lo + (hi - lo) * unit(); }

    std::uint64_t bits() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace growlat
