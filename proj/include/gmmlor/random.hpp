#pragma once

#include <cstdint>
#include <random>
#include <utility>

namespace gmmlor {

/// Seedable random stream used by the simulator and the fit initializer.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Every derived quantity (uniform doubles, normal pairs, indices)
/// is computed here rather than through <random> distributions, whose
/// algorithms are implementation-defined, so a seed reproduces the same
/// stream on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open_low() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform index in [0, n) by multiply-shift on 53 bits. n must be > 0.
    std::uint64_t index(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    }

    /// Two independent standard normals (Box-Muller).
    std::pair<double, double> normal_pair();

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; a bijective 64-bit mix.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of an independent sub-stream: mix64(master + (index + 1) * golden).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Seeded Fisher-Yates shuffle.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
        const auto j = rng.index(i);
        std::swap(first[static_cast<std::ptrdiff_t>(i - 1)], first[static_cast<std::ptrdiff_t>(j)]);
    }
}

}  // namespace gmmlor
