#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

// Portable, seedable randomness. Standard-library distributions differ between
// implementations, so everything that must reproduce bit-for-bit goes through here.
namespace factdetect::rng {

inline std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound) by rejection; bound > 0.
    std::uint64_t below(std::uint64_t bound) noexcept {
        std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

private:
    std::uint64_t state_;
};

// Independent stream for (seed, index): used to give each parallel task its own draws.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    SplitMix64 mix(seed ^ (index * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL));
    return mix.next();
}

// [0, 1) with 53 bits of precision.
inline double to_unit(std::uint64_t x) noexcept {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& gen) {
    for (std::size_t i = v.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(gen.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace factdetect::rng
