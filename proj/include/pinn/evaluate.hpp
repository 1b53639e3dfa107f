#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pinn/component.hpp"
#include "pinn/integrate.hpp"
#include "pinn/mlp.hpp"
#include "pinn/types.hpp"

namespace pinn {

// Accuracy of the surrogate against solver ground truth, pooled over all
// points and states plus per-state and per-timestep breakdowns. Errors are in
// raw state units.
struct Metrics {
    double mae = 0.0;
    double mse = 0.0;
    double max_ae = 0.0;
    Vec per_state_mae, per_state_mse, per_state_max_ae;          // length d
    Vec timestep_times;                                           // length T
    Vec per_timestep_mae, per_timestep_mse, per_timestep_max_ae;  // length T
};

struct TimingRow {
    std::string method;  // "solver" or "surrogate"
    int n_trajectories = 0;
    double wall_ms = 0.0;  // median over repeats
    int repeats = 0;
    double min_ms = 0.0;
    double max_ms = 0.0;
};

struct TimingTable {
    std::vector<TimingRow> rows;
};

// Batched forward over every (x0, t) pair of the test trajectories. All
// trajectories must share one time grid so the per-timestep curves line up.
[[nodiscard]] Metrics evaluate(const MlpModel& model, const std::vector<Trajectory>& tests);

// Times sequential adaptive integration against one batched surrogate pass
// over the same initial conditions and grid. One warm-up run per method and
// size, then `repeats` timed runs; the row reports the median with min/max
// spread. Empty inputs produce an empty table.
[[nodiscard]] TimingTable bench_inference(const MlpModel& model, const ComponentModel& component,
                                          const std::vector<Vec>& ics, double horizon, double dt,
                                          const SolveConfig& solver,
                                          const std::vector<int>& sizes = {1, 50, 500},
                                          int repeats = 5);

// Writes one file per initial condition with columns t, x_true_1..d,
// x_pred_1..d plus a pooled per-timestep error-curve file; returns the paths
// (overlays first, error curve last).
std::vector<std::filesystem::path> export_overlays(const MlpModel& model,
                                                   const ComponentModel& component,
                                                   const std::vector<Vec>& ics,
                                                   const std::filesystem::path& dir,
                                                   double horizon, double dt,
                                                   const SolveConfig& solver);

}  // namespace pinn
