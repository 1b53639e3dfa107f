#pragma once

#include "pinn/component.hpp"
#include "pinn/integrate.hpp"
#include "pinn/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace pinn {

// One supervised sample: the network input (x0, t) and its label x(t).
struct LabeledPoint {
    std::int64_t trajectory_id = 0;
    Vec x0;
    double t = 0.0;
    Vec x;
};

// An input-only sample for the physics residual.
struct CollocationPoint {
    std::int64_t trajectory_id = 0;
    Vec x0;
    double t = 0.0;
};

struct SplitDataset {
    std::vector<LabeledPoint> train;
    std::vector<LabeledPoint> validation;
    std::vector<LabeledPoint> test;
    std::vector<CollocationPoint> collocation;
    std::array<double, 3> split_ratios{0.8, 0.1, 0.1};
    std::uint64_t seed = 0;
};

// Provenance stored next to the dataset: everything needed to regenerate it.
struct DatasetMeta {
    int state_dim = 0;
    std::vector<std::array<double, 2>> domain;
    double horizon_s = 1.0;
    double dt_s = 1e-3;
    int data_stride = 1;
    int collocation_stride = 1;
    std::uint64_t seed_data = 0;
    std::uint64_t seed_collocation = 0;
    std::uint64_t seed_split = 0;
    double rtol = 1e-7;
    double atol = 1e-9;
};

struct GeneratedData {
    std::vector<Trajectory> trajectories;
    std::vector<LabeledPoint> points;  // grid order within each trajectory
};

// Integrates every initial condition over [0, T], samples the dt grid and
// flattens to labeled points. A failing trajectory aborts the whole run with
// its trajectory id in the error text. `threads` > 1 integrates trajectories
// concurrently; assembly is ordered by trajectory id either way.
[[nodiscard]] GeneratedData generate_labeled(const ComponentModel& model, const Mat& ics, double T,
                                             double dt, const SolveConfig& solver = {},
                                             int threads = 1);

// Keeps grid positions offset, offset+stride, ... within each trajectory.
[[nodiscard]] std::vector<LabeledPoint> thin(const std::vector<LabeledPoint>& points, int stride,
                                             int offset = 0);

// Pairs every collocation initial condition with the stride-thinned time grid.
[[nodiscard]] std::vector<CollocationPoint> build_collocation(const Mat& ics, const Vec& time_grid,
                                                              int stride);

// Shuffles trajectory ids with the seed and assigns whole trajectories to
// train/validation/test by largest-remainder rounding of the ratios.
[[nodiscard]] SplitDataset split_by_trajectory(const std::vector<LabeledPoint>& points,
                                               const std::array<double, 3>& ratios,
                                               std::uint64_t seed);

// Persists the dataset into a directory: an exact binary container
// (dataset.pnnd), per-split text tables for external tools, and a metadata
// sidecar (dataset.meta). Loading restores the binary container bitwise.
void save_dataset(const SplitDataset& dataset, const std::filesystem::path& dir,
                  const DatasetMeta& meta = {});
[[nodiscard]] SplitDataset load_dataset(const std::filesystem::path& dir);
[[nodiscard]] DatasetMeta load_dataset_meta(const std::filesystem::path& dir);

}  // namespace pinn
