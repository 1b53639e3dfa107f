#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pinn/component.hpp"
#include "pinn/integrate.hpp"
#include "pinn/sampling.hpp"
#include "pinn/train.hpp"
#include "pinn/types.hpp"

namespace pinn {

// section -> key -> raw value, as read from the file before typing.
using IniMap = std::map<std::string, std::map<std::string, std::string>>;

// Structured-text config: [section] headers, key = value lines, # or ;
// comments. Throws ConfigError with the offending line number.
[[nodiscard]] IniMap parse_ini(const std::string& text);

// Applies one "section.key=value" override (the --set flag).
void apply_override(IniMap& ini, const std::string& dotted_key, const std::string& value);

// Fully resolved run settings; every field has a value after build_run_config.
struct RunConfig {
    // [component]
    std::string component_type = "sm9";  // sm9 | linear
    SmParams sm{};
    Mat linear_a;  // linear only: rows separated by ';'

    // [domain], one bound pair per state
    InputDomain domain;

    // [dataset]
    int n_trajectories = 500;
    double horizon_s = 1.0;
    double dt_s = 0.001;
    int data_stride = 23;
    int collocation_stride = 19;
    std::array<double, 3> split_ratios{0.8, 0.1, 0.1};
    std::string sampling = "lhs";  // lhs | random | grid
    LhsPlacement placement = LhsPlacement::uniform;

    // [solver]
    SolveConfig solver{};

    // [net]
    std::vector<int> hidden{64, 64, 64, 64};

    // [train]
    TrainConfig train{};
    bool calibrate = false;
    int pilot_epochs = 100;

    // [bench]
    std::vector<int> bench_sizes{1, 50, 500};
    int bench_repeats = 5;

    // [eval]
    int overlay_count = 3;

    // [simulate]
    Vec sim_x0;  // empty = domain midpoint

    // [run]
    std::uint64_t seed = 1;
    int threads = 1;
    std::filesystem::path out_dir = "runs/out";

    // Per-purpose seeds, derived from the global seed unless set explicitly.
    std::uint64_t seed_data = 0;
    std::uint64_t seed_collocation = 0;
    std::uint64_t seed_split = 0;
    std::uint64_t seed_net = 0;
    std::uint64_t seed_shuffle = 0;
    std::uint64_t seed_bench = 0;
};

// Types, defaults, derived seeds, and validation. Unknown keys and malformed
// values raise ConfigError naming the section.key path.
[[nodiscard]] RunConfig build_run_config(const IniMap& ini);

// Canonical text form of a resolved config; stable byte-for-byte for
// identical settings, suitable for replay records and input hashing.
[[nodiscard]] std::string render_config(const RunConfig& config);

[[nodiscard]] ComponentModel make_component(const RunConfig& config);

}  // namespace pinn
