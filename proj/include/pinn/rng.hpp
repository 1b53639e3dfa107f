#pragma once

#include <cstdint>
#include <vector>

namespace pinn {

// Counter-based deterministic generator (SplitMix64 finalizer over an
// affine counter). Output k of a stream is a pure function of
// (seed, stream, k), so draws are reproducible independent of thread
// scheduling, and distinct streams derived from one seed are independent.
//
// All floating-point draws are built from the raw 64-bit output with fixed
// arithmetic; none of the distribution machinery in <random> is used, since
// its results are implementation-defined and would break bitwise
// reproducibility across standard libraries.
namespace rng {

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from a base seed and a stream tag.
[[nodiscard]] constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(seed + kGamma * (stream + 1));
}

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : base_(derive(seed, stream)) {}

    [[nodiscard]] std::uint64_t next_u64() noexcept { return mix64(base_ + kGamma * ++counter_); }

    // Uniform double in [0, 1) with 53 random bits.
    [[nodiscard]] double next_unit() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    [[nodiscard]] double uniform(double lo, double hi) noexcept {
        return lo + (hi - lo) * next_unit();
    }

    // Unbiased integer in [0, n) via rejection sampling.
    [[nodiscard]] std::uint64_t below(std::uint64_t n) noexcept {
        const std::uint64_t reject = (0 - n) % n;
        std::uint64_t u = next_u64();
        while (u < reject) u = next_u64();
        return u % n;
    }

    // Fisher-Yates shuffle.
    template <class T>
    void shuffle(std::vector<T>& v) noexcept {
        for (std::size_t i = v.size(); i > 1; --i) {
            using std::swap;
            swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
        }
    }

private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

}  // namespace rng
}  // namespace pinn
