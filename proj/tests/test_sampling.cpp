#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pinn/sampling.hpp"

#include "pinn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

using namespace pinn;

namespace {

// Machine study domain: rotor angle, speed deviation, and q-axis EMF vary,
// the remaining six states are pinned to the operating point.
InputDomain machine_domain() {
    InputDomain d;
    d.bounds = {{-2.0, 2.0}, {-1.0, 1.0},       {0.9, 1.1},
                {0.0, 0.0},  {1.08, 1.08},      {1.0, 1.0},
                {1.105, 1.105}, {0.7048, 0.7048}, {0.7048, 0.7048}};
    return d;
}

int stratum_of(double v, double lo, double hi, int n) {
    const double w = (hi - lo) / static_cast<double>(n);
    int k = static_cast<int>(std::floor((v - lo) / w));
    return std::clamp(k, 0, n - 1);
}

}  // namespace

TEST_CASE("latin hypercube places one sample per stratum in every varying dimension") {
    const InputDomain domain = machine_domain();
    for (const int n : {4, 50, 500}) {
        const Mat x = lhs_sample(domain, n, 42);
        REQUIRE(x.rows() == n);
        REQUIRE(x.cols() == 9);
        for (int j = 0; j < domain.dim(); ++j) {
            if (domain.fixed(j)) continue;
            const auto [lo, hi] = domain.bounds[static_cast<std::size_t>(j)];
            std::vector<int> occupancy(static_cast<std::size_t>(n), 0);
            for (int i = 0; i < n; ++i) {
                const double v = x(i, j);
                REQUIRE(v >= lo);
                REQUIRE(v <= hi);
                ++occupancy[static_cast<std::size_t>(stratum_of(v, lo, hi, n))];
            }
            for (int count : occupancy) CHECK(count == 1);
        }
    }
}

TEST_CASE("fixed dimensions sample to exactly the pinned value") {
    const InputDomain domain = machine_domain();
    const Mat x = lhs_sample(domain, 50, 7);
    for (int i = 0; i < 50; ++i) {
        CHECK(x(i, 3) == 0.0);
        CHECK(x(i, 4) == 1.08);
        CHECK(x(i, 5) == 1.0);
        CHECK(x(i, 6) == 1.105);
        CHECK(x(i, 7) == 0.7048);
        CHECK(x(i, 8) == 0.7048);
    }
}

TEST_CASE("sampling is a pure function of the seed") {
    const InputDomain domain = machine_domain();
    const Mat a = lhs_sample(domain, 32, 9);
    const Mat b = lhs_sample(domain, 32, 9);
    CHECK((a.array() == b.array()).all());

    const Mat c = lhs_sample(domain, 32, 10);
    CHECK(!(a.array() == c.array()).all());
}

TEST_CASE("midpoint placement lands on stratum centers") {
    InputDomain domain;
    domain.bounds = {{0.0, 1.0}, {2.0, 2.0}};
    const int n = 8;
    const Mat x = lhs_sample(domain, n, 5, LhsPlacement::midpoint);

    std::vector<int> seen(n, 0);
    for (int i = 0; i < n; ++i) {
        const double v = x(i, 0);
        const int k = stratum_of(v, 0.0, 1.0, n);
        ++seen[static_cast<std::size_t>(k)];
        const double center = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
        CHECK(v == doctest::Approx(center).epsilon(1e-15).scale(1.0));
        CHECK(x(i, 1) == 2.0);
    }
    for (int count : seen) CHECK(count == 1);
}

TEST_CASE("independent draws stay inside the domain") {
    const InputDomain domain = machine_domain();
    const Mat x = random_sample(domain, 200, 3);
    REQUIRE(x.rows() == 200);
    for (int i = 0; i < 200; ++i) {
        for (int j = 0; j < 9; ++j) {
            CHECK(x(i, j) >= domain.bounds[static_cast<std::size_t>(j)][0]);
            CHECK(x(i, j) <= domain.bounds[static_cast<std::size_t>(j)][1]);
        }
    }
    // Unlike the stratified scheme, plain draws may double up in a stratum,
    // but they must not be all identical.
    CHECK(!(x.row(0).array() == x.row(1).array()).all());
}

TEST_CASE("grid sampling walks the cartesian product of the varying dimensions") {
    InputDomain domain;
    domain.bounds = {{0.0, 1.0}, {5.0, 5.0}, {2.0, 4.0}};
    const Mat x = grid_sample(domain, 3);
    REQUIRE(x.rows() == 9);
    REQUIRE(x.cols() == 3);

    // The first varying dimension changes slowest.
    for (int i = 0; i < 9; ++i) {
        CHECK(x(i, 0) == doctest::Approx(0.5 * static_cast<double>(i / 3)).epsilon(1e-15).scale(1.0));
        CHECK(x(i, 1) == 5.0);
        CHECK(x(i, 2) == doctest::Approx(2.0 + static_cast<double>(i % 3)).epsilon(1e-15).scale(1.0));
    }
}

TEST_CASE("a single grid point sits at the interval midpoint") {
    InputDomain domain;
    domain.bounds = {{0.0, 4.0}, {1.0, 1.0}};
    const Mat x = grid_sample(domain, 1);
    REQUIRE(x.rows() == 1);
    CHECK(x(0, 0) == 2.0);
    CHECK(x(0, 1) == 1.0);
}

TEST_CASE("oversized grids are rejected before allocation") {
    InputDomain domain;
    domain.bounds = {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};
    CHECK_THROWS_AS(grid_sample(domain, 101, 1'000'000), GridTooLarge);
}

TEST_CASE("invalid domains and counts are rejected") {
    InputDomain empty;
    CHECK_THROWS_AS(lhs_sample(empty, 4, 0), InvalidDomain);

    InputDomain inverted;
    inverted.bounds = {{1.0, 0.0}};
    CHECK_THROWS_AS(lhs_sample(inverted, 4, 0), InvalidDomain);
    CHECK_THROWS_AS(random_sample(inverted, 4, 0), InvalidDomain);
    CHECK_THROWS_AS(grid_sample(inverted, 2), InvalidDomain);

    InputDomain nan_bounds;
    nan_bounds.bounds = {{0.0, std::numeric_limits<double>::quiet_NaN()}};
    CHECK_THROWS_AS(lhs_sample(nan_bounds, 4, 0), InvalidDomain);

    InputDomain ok;
    ok.bounds = {{0.0, 1.0}};
    CHECK_THROWS_AS(lhs_sample(ok, 0, 0), InvalidDomain);
}

TEST_CASE("stratification survives an all-fixed domain") {
    InputDomain domain;
    domain.bounds = {{3.0, 3.0}, {1.0, 1.0}};
    const Mat x = lhs_sample(domain, 5, 1);
    for (int i = 0; i < 5; ++i) {
        CHECK(x(i, 0) == 3.0);
        CHECK(x(i, 1) == 1.0);
    }
}
