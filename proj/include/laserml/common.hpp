#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace laserml {

/// Boltzmann constant in eV/K; matches the eV convention used for
/// activation energies throughout the degradation model.
inline constexpr double kBoltzmannEvPerK = 8.617333262e-5;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

} // namespace detail

/// Derives an independent sub-seed from a master seed and a purpose string.
/// Adding a new purpose never perturbs the streams of existing ones, so the
/// fan-out is stable across versions of the pipeline.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose) {
    return detail::splitmix64(master ^ detail::fnv1a64(purpose));
}

/// Per-item substream for embarrassingly parallel loops: item i gets the same
/// stream whether the loop runs serially or in parallel.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return detail::splitmix64(base ^ detail::splitmix64(index + 1));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

} // namespace laserml
