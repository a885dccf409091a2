#include "vsr/random.hpp"

#include <stdexcept>

namespace vsr {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view component) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : component) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    // splitmix64 finalizer
    std::uint64_t z = seed ^ h;
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

int Rng::below(int n) {
    if (n <= 0) throw std::invalid_argument("Rng::below needs n > 0");
    const auto bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return static_cast<int>(x % bound);
}

}  // namespace vsr
