#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace lcdt {

// Counter-based splitmix64 generator. Unlike std::shuffle /
// std::uniform_int_distribution, every output here is pinned by the standard
// arithmetic below, so streams are byte-identical across platforms and
// standard library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound). bound must be > 0.
    std::uint64_t next_below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
    }

    // Uniform in [0, 1) with 53 bits of precision.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

  private:
    std::uint64_t state_;
};

// Stable 64-bit FNV-1a, used both for digests and for deriving sub-seeds.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Derives an independent stream seed from (seed, label), e.g. one per domain
// pool or per generated example.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    Rng mix(seed ^ fnv1a64(label));
    return mix.next_u64();
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    Rng mix(seed ^ (index * 0xd6e8feb86659fd93ull + 0x2545f4914f6cdd1dull));
    return mix.next_u64();
}

}  // namespace lcdt
