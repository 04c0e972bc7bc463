#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace sparsepair {

/// SplitMix64 finalizer (Steele, Lea & Flood). Used to decorrelate seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// 64-bit FNV-1a over the bytes of `text`.
constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Named streams so that unrelated consumers of the same (query, repetition)
/// never share random numbers.
enum class SeedStream : std::uint64_t {
    sampler = 1,
    kwiksort = 2,
    simulation = 3,
    folds = 4,
};

/// Stable seed for one (query, repetition) unit. Depends only on its inputs,
/// never on scheduling order or on which other units exist.
constexpr std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view query_id,
                                    std::uint64_t repetition,
                                    SeedStream stream = SeedStream::sampler) noexcept {
    std::uint64_t h = splitmix64(base_seed);
    h = splitmix64(h ^ fnv1a64(query_id));
    h = splitmix64(h ^ repetition);
    return splitmix64(h ^ static_cast<std::uint64_t>(stream));
}

/// Reproducible generator: std::mt19937_64 (whose output sequence is fixed by
/// the standard) plus distributions implemented here, because the standard
/// library's distributions are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
    std::uint64_t uniform_index(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % bound);
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % bound;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via the Box-Muller transform (one value per call).
    double normal();

private:
    std::mt19937_64 engine_;
};

}  // namespace sparsepair
