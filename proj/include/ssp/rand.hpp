#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace ssp {

/// Uniform integer in [0, n) via rejection sampling, so results depend
/// only on the (fully specified) mt19937_64 stream and stay identical
/// across platforms and standard libraries.
inline std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

}  // namespace ssp
