#pragma once

#include "pinn/types.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace pinn {

// Per-state closed bounds; a dimension with low == high is a fixed state
// and always samples to that constant.
struct InputDomain {
    std::vector<std::array<double, 2>> bounds;

    [[nodiscard]] int dim() const { return static_cast<int>(bounds.size()); }
    [[nodiscard]] bool fixed(int j) const { return bounds[j][0] == bounds[j][1]; }
};

enum class LhsPlacement {
    uniform,   // uniform within each stratum
    midpoint,  // stratum centers, for reproducible debugging
};

// Throws InvalidDomain on empty, non-finite, or inverted bounds.
void validate_domain(const InputDomain& domain);

// Latin Hypercube sample: each non-fixed dimension gets exactly one point
// per equal-width stratum. Permutations and offsets are drawn from
// counter-based streams derived per dimension, so results do not depend on
// evaluation order.
[[nodiscard]] Mat lhs_sample(const InputDomain& domain, int n, std::uint64_t seed,
                             LhsPlacement placement = LhsPlacement::uniform);

// Independent uniform draws per dimension.
[[nodiscard]] Mat random_sample(const InputDomain& domain, int n, std::uint64_t seed);

// Cartesian grid over the non-fixed dimensions with points_per_dim points
// each (a single point sits at the interval midpoint). The first non-fixed
// dimension varies slowest.
[[nodiscard]] Mat grid_sample(const InputDomain& domain, int points_per_dim,
                              std::int64_t max_points = 1'000'000);

}  // namespace pinn
