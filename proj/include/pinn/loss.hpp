#pragma once

#include "pinn/component.hpp"
#include "pinn/dataset.hpp"
#include "pinn/mlp.hpp"
#include "pinn/types.hpp"

namespace pinn {

// Coefficients of the four-term hybrid loss.
struct LossWeights {
    double lambda_d = 1.0;     // data misfit
    double lambda_dp = 0.01;   // physics residual at labeled states
    double lambda_cp = 0.001;  // physics residual at predictions (collocation)
    double lambda_ic = 0.01;   // initial-condition consistency
};

// The four evaluated terms (unweighted) and their weighted sum. Terms that
// were skipped because their weight is zero or their batch is empty report 0.
struct LossBreakdown {
    double l_data = 0.0;
    double l_physics_data = 0.0;
    double l_physics_col = 0.0;
    double l_ic = 0.0;
    double total = 0.0;
};

// Packed batches; columns are points, inputs stack x0 on top of t.
struct LabeledBatch {
    Mat inputs;          // (d+1) x n
    Mat labels;          // d x n
    Mat rhs_at_labels;   // d x n, optional cache of f(t, x); empty = compute on demand
};

struct CollocationBatch {
    Mat inputs;  // (d+1) x n
};

struct IcBatch {
    Mat inputs;   // (d+1) x n, time row all zero
    Mat targets;  // d x n, the initial states themselves
};

struct TrainBatches {
    LabeledBatch data;
    CollocationBatch collocation;
    IcBatch ic;
};

// Packing; `with_rhs` precomputes f(t, x) at the labels so repeated
// physics-at-data evaluations reuse it.
[[nodiscard]] LabeledBatch pack_labeled(const std::vector<LabeledPoint>& points);
[[nodiscard]] LabeledBatch pack_labeled(const std::vector<LabeledPoint>& points,
                                        const ComponentModel& component);
[[nodiscard]] CollocationBatch pack_collocation(const std::vector<CollocationPoint>& points);

// One entry per distinct trajectory id (ascending), paired with t = 0.
[[nodiscard]] IcBatch pack_ic(const std::vector<CollocationPoint>& points);

// Mean over points and states of |x_hat - x|^2.
[[nodiscard]] double loss_data(const MlpModel& model, const LabeledBatch& batch);

// Mean squared residual |dx_hat/dt - f(t, x)|^2 with f at the LABELED state.
[[nodiscard]] double loss_physics_data(const MlpModel& model, const ComponentModel& component,
                                       const LabeledBatch& batch);

// Mean squared residual |dx_hat/dt - f(t, x_hat)|^2 with f at the PREDICTION.
[[nodiscard]] double loss_physics_col(const MlpModel& model, const ComponentModel& component,
                                      const CollocationBatch& batch);

// Mean over initial conditions and states of |x_hat(x0, 0) - x0|^2.
[[nodiscard]] double loss_ic(const MlpModel& model, const IcBatch& batch);

// Weighted sum per LossBreakdown; zero-weight terms are skipped entirely.
// Throws AllTermsDisabled when no term has both a nonzero weight and a
// nonempty batch.
[[nodiscard]] LossBreakdown total_loss(const MlpModel& model, const ComponentModel& component,
                                       const TrainBatches& batches, const LossWeights& weights);

// Same evaluation fused with the parameter gradient of the weighted total.
// The physics terms differentiate through both the forward-mode time
// derivative and (for the collocation term) the rhs argument x_hat.
[[nodiscard]] LossBreakdown total_loss_and_grad(ParamGrads& grads, const MlpModel& model,
                                                const ComponentModel& component,
                                                const TrainBatches& batches,
                                                const LossWeights& weights);

}  // namespace pinn
