#include "pinn/sampling.hpp"

#include "pinn/errors.hpp"
#include "pinn/rng.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace pinn {

void validate_domain(const InputDomain& domain) {
    if (domain.bounds.empty()) throw InvalidDomain("domain has no dimensions");
    for (int j = 0; j < domain.dim(); ++j) {
        const auto [lo, hi] = domain.bounds[j];
        if (!std::isfinite(lo) || !std::isfinite(hi)) {
            throw InvalidDomain("domain dimension " + std::to_string(j) + " has non-finite bounds");
        }
        if (lo > hi) {
            throw InvalidDomain("domain dimension " + std::to_string(j) + " has low > high");
        }
    }
}

Mat lhs_sample(const InputDomain& domain, int n, std::uint64_t seed, LhsPlacement placement) {
    validate_domain(domain);
    if (n < 1) throw InvalidDomain("lhs_sample: n must be at least 1");

    Mat out(n, domain.dim());
    for (int j = 0; j < domain.dim(); ++j) {
        const auto [lo, hi] = domain.bounds[j];
        if (domain.fixed(j)) {
            out.col(j).setConstant(lo);
            continue;
        }
        rng::CounterRng perm_rng(seed, 2 * static_cast<std::uint64_t>(j));
        rng::CounterRng offset_rng(seed, 2 * static_cast<std::uint64_t>(j) + 1);
        std::vector<int> strata(n);
        std::iota(strata.begin(), strata.end(), 0);
        perm_rng.shuffle(strata);
        const double width = (hi - lo) / static_cast<double>(n);
        for (int i = 0; i < n; ++i) {
            const double u =
                placement == LhsPlacement::uniform ? offset_rng.next_unit() : 0.5;
            out(i, j) = lo + (static_cast<double>(strata[i]) + u) * width;
        }
    }
    return out;
}

Mat random_sample(const InputDomain& domain, int n, std::uint64_t seed) {
    validate_domain(domain);
    if (n < 1) throw InvalidDomain("random_sample: n must be at least 1");

    Mat out(n, domain.dim());
    for (int j = 0; j < domain.dim(); ++j) {
        const auto [lo, hi] = domain.bounds[j];
        if (domain.fixed(j)) {
            out.col(j).setConstant(lo);
            continue;
        }
        rng::CounterRng dim_rng(seed, static_cast<std::uint64_t>(j));
        for (int i = 0; i < n; ++i) out(i, j) = dim_rng.uniform(lo, hi);
    }
    return out;
}

Mat grid_sample(const InputDomain& domain, int points_per_dim, std::int64_t max_points) {
    validate_domain(domain);
    if (points_per_dim < 1) throw InvalidDomain("grid_sample: points_per_dim must be at least 1");

    std::vector<int> free_dims;
    for (int j = 0; j < domain.dim(); ++j) {
        if (!domain.fixed(j)) free_dims.push_back(j);
    }

    std::int64_t total = 1;
    for (std::size_t k = 0; k < free_dims.size(); ++k) {
        total *= points_per_dim;
        if (total > max_points) {
            throw GridTooLarge("grid_sample: Cartesian product exceeds " +
                               std::to_string(max_points) + " points");
        }
    }

    Mat out(total, domain.dim());
    for (int j = 0; j < domain.dim(); ++j) {
        if (domain.fixed(j)) out.col(j).setConstant(domain.bounds[j][0]);
    }
    std::vector<int> odometer(free_dims.size(), 0);
    for (std::int64_t row = 0; row < total; ++row) {
        for (std::size_t k = 0; k < free_dims.size(); ++k) {
            const auto [lo, hi] = domain.bounds[free_dims[k]];
            const double x = points_per_dim == 1
                                 ? 0.5 * (lo + hi)
                                 : lo + (hi - lo) * static_cast<double>(odometer[k]) /
                                            static_cast<double>(points_per_dim - 1);
            out(row, free_dims[k]) = x;
        }
        // Advance with the last dimension fastest.
        for (auto k = static_cast<std::int64_t>(free_dims.size()) - 1; k >= 0; --k) {
            if (++odometer[k] < points_per_dim) break;
            odometer[k] = 0;
        }
    }
    return out;
}

}  // namespace pinn
