#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "pinn/component.hpp"
#include "pinn/dataset.hpp"
#include "pinn/loss.hpp"
#include "pinn/mlp.hpp"
#include "pinn/types.hpp"

namespace pinn {

enum class Optimizer { adam, lbfgs };

struct TrainConfig {
    int epochs = 750;
    Optimizer optimizer = Optimizer::adam;
    double learning_rate = 0.001;
    // Number of mini-batches per epoch; 1 trains full batch with no shuffling.
    int batches = 1;
    bool early_stopping = true;
    int patience = 50;
    double min_delta = 1e-7;
    LossWeights weights{};
    std::uint64_t shuffle_seed = 0;
};

struct EpochRecord {
    int epoch = 0;       // 1-based
    LossBreakdown train;  // mean over the epoch's optimizer steps
    double val_mse = std::numeric_limits<double>::quiet_NaN();
    double wall_ms = 0.0;
};

struct TrainResult {
    MlpModel model;
    std::vector<EpochRecord> history;
    int best_epoch = 0;  // epoch whose parameters the result carries; 0 = final
    double best_val_mse = std::numeric_limits<double>::quiet_NaN();
    bool stopped_early = false;
};

// Adam with bias correction; state shapes mirror the model parameters.
struct AdamState {
    std::vector<Mat> m_w, v_w;
    std::vector<Vec> m_b, v_b;
    long long step = 0;

    explicit AdamState(const MlpModel& model);
};

void adam_step(MlpModel& model, const ParamGrads& grads, AdamState& state, double learning_rate,
               double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

// Limited-memory BFGS over flattened parameters with a strong-Wolfe line
// search (c1 = 1e-4, c2 = 0.9, at most 20 trial evaluations per step).
// Non-positive curvature pairs are dropped, which degrades the direction
// toward steepest descent rather than corrupting the inverse-Hessian model.
struct LbfgsState {
    int memory_size = 10;
    std::deque<std::pair<Vec, Vec>> memory;  // (s, y)
    Vec prev_x, prev_grad;
    double prev_f = 0.0;
    bool have_prev = false;
};

// Evaluates the objective at x, filling grad; must be deterministic.
using Objective = std::function<double(const Vec& x, Vec& grad)>;

// Advances x by one quasi-Newton iteration and returns the accepted objective
// value. Throws LineSearchFailed when no strong-Wolfe point is found.
double lbfgs_step(Vec& x, const Objective& objective, LbfgsState& state,
                  double initial_step = 1.0);

// Parameter flattening used by the quasi-Newton path (layer order, row-major
// weights then bias per layer).
[[nodiscard]] Vec flatten_params(const MlpModel& model);
void assign_params(MlpModel& model, const Vec& flat);
[[nodiscard]] Vec flatten_grads(const ParamGrads& grads);

// Full training loop. Tracks validation data loss every epoch, applies early
// stopping on it, and restores the best-validation parameters when stopping
// is enabled. Throws NonFiniteLoss (annotated with the epoch) on a non-finite
// loss and OptimizerDiverged when the loss exceeds 1e6 times its initial
// value.
[[nodiscard]] TrainResult train(const TrainConfig& config, const SplitDataset& dataset,
                                const ComponentModel& component, MlpModel model);

// Runs a short supervised pilot (weights (1,0,0,0)) and balances each
// auxiliary term against the data term on a log10 scale. Terms that end up
// zero or non-finite fall back to weight 1.
[[nodiscard]] LossWeights calibrate_loss_weights(const TrainConfig& pilot,
                                                 const SplitDataset& dataset,
                                                 const ComponentModel& component,
                                                 const MlpModel& init);

}  // namespace pinn
