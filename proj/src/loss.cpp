#include "pinn/loss.hpp"

#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "pinn/errors.hpp"

namespace pinn {

namespace {

void check_nonempty(Eigen::Index n, const char* term) {
    if (n == 0) throw DimensionMismatch(std::string(term) + ": empty batch");
}

void check_finite_term(double value, const char* term) {
    if (!std::isfinite(value)) throw NonFiniteLoss(std::string(term) + " is not finite");
}

double mean_sq(const Mat& residual) {
    return residual.squaredNorm() / static_cast<double>(residual.size());
}

Mat rhs_at_columns(const ComponentModel& component, const Mat& inputs, const Mat& states) {
    const Eigen::Index d = states.rows();
    const Eigen::Index n = states.cols();
    Mat out(d, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        out.col(j) = component.rhs(inputs(d, j), states.col(j));
    }
    return out;
}

bool active(double weight, Eigen::Index batch_cols) { return weight > 0.0 && batch_cols > 0; }

void check_weights(const LossWeights& w) {
    if (w.lambda_d < 0.0 || w.lambda_dp < 0.0 || w.lambda_cp < 0.0 || w.lambda_ic < 0.0) {
        throw ConfigError("loss weights must be nonnegative");
    }
}

}  // namespace

LabeledBatch pack_labeled(const std::vector<LabeledPoint>& points) {
    LabeledBatch batch;
    if (points.empty()) return batch;
    const Eigen::Index d = points.front().x.size();
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    batch.inputs.resize(d + 1, n);
    batch.labels.resize(d, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const LabeledPoint& p = points[static_cast<std::size_t>(j)];
        if (p.x0.size() != d || p.x.size() != d) {
            throw DimensionMismatch("pack_labeled: inconsistent state dimension");
        }
        batch.inputs.col(j).head(d) = p.x0;
        batch.inputs(d, j) = p.t;
        batch.labels.col(j) = p.x;
    }
    return batch;
}

LabeledBatch pack_labeled(const std::vector<LabeledPoint>& points,
                          const ComponentModel& component) {
    LabeledBatch batch = pack_labeled(points);
    if (batch.labels.cols() > 0) {
        batch.rhs_at_labels = rhs_at_columns(component, batch.inputs, batch.labels);
    }
    return batch;
}

CollocationBatch pack_collocation(const std::vector<CollocationPoint>& points) {
    CollocationBatch batch;
    if (points.empty()) return batch;
    const Eigen::Index d = points.front().x0.size();
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    batch.inputs.resize(d + 1, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const CollocationPoint& p = points[static_cast<std::size_t>(j)];
        if (p.x0.size() != d) throw DimensionMismatch("pack_collocation: inconsistent state dimension");
        batch.inputs.col(j).head(d) = p.x0;
        batch.inputs(d, j) = p.t;
    }
    return batch;
}

IcBatch pack_ic(const std::vector<CollocationPoint>& points) {
    IcBatch batch;
    if (points.empty()) return batch;
    std::map<long long, Vec> by_id;
    for (const CollocationPoint& p : points) by_id.emplace(p.trajectory_id, p.x0);
    const Eigen::Index d = by_id.begin()->second.size();
    const Eigen::Index n = static_cast<Eigen::Index>(by_id.size());
    batch.inputs = Mat::Zero(d + 1, n);
    batch.targets.resize(d, n);
    Eigen::Index j = 0;
    for (const auto& [id, x0] : by_id) {
        if (x0.size() != d) throw DimensionMismatch("pack_ic: inconsistent state dimension");
        batch.inputs.col(j).head(d) = x0;
        batch.targets.col(j) = x0;
        ++j;
    }
    return batch;
}

double loss_data(const MlpModel& model, const LabeledBatch& batch) {
    check_nonempty(batch.labels.cols(), "loss_data");
    const Mat residual = forward(model, batch.inputs) - batch.labels;
    const double value = mean_sq(residual);
    check_finite_term(value, "loss_data");
    return value;
}

double loss_physics_data(const MlpModel& model, const ComponentModel& component,
                         const LabeledBatch& batch) {
    check_nonempty(batch.labels.cols(), "loss_physics_data");
    const JvpPass pass = time_derivative_pass(model, batch.inputs);
    const Mat& f = batch.rhs_at_labels.size() > 0
                       ? batch.rhs_at_labels
                       : rhs_at_columns(component, batch.inputs, batch.labels);
    const double value = mean_sq(pass.output_tangent() - f);
    check_finite_term(value, "loss_physics_data");
    return value;
}

double loss_physics_col(const MlpModel& model, const ComponentModel& component,
                        const CollocationBatch& batch) {
    check_nonempty(batch.inputs.cols(), "loss_physics_col");
    const JvpPass pass = time_derivative_pass(model, batch.inputs);
    const Mat f = rhs_at_columns(component, batch.inputs, pass.output());
    const double value = mean_sq(pass.output_tangent() - f);
    check_finite_term(value, "loss_physics_col");
    return value;
}

double loss_ic(const MlpModel& model, const IcBatch& batch) {
    check_nonempty(batch.targets.cols(), "loss_ic");
    const Mat residual = forward(model, batch.inputs) - batch.targets;
    const double value = mean_sq(residual);
    check_finite_term(value, "loss_ic");
    return value;
}

LossBreakdown total_loss(const MlpModel& model, const ComponentModel& component,
                         const TrainBatches& batches, const LossWeights& weights) {
    check_weights(weights);
    LossBreakdown out;
    bool any = false;
    if (active(weights.lambda_d, batches.data.labels.cols())) {
        out.l_data = loss_data(model, batches.data);
        any = true;
    }
    if (active(weights.lambda_dp, batches.data.labels.cols())) {
        out.l_physics_data = loss_physics_data(model, component, batches.data);
        any = true;
    }
    if (active(weights.lambda_cp, batches.collocation.inputs.cols())) {
        out.l_physics_col = loss_physics_col(model, component, batches.collocation);
        any = true;
    }
    if (active(weights.lambda_ic, batches.ic.targets.cols())) {
        out.l_ic = loss_ic(model, batches.ic);
        any = true;
    }
    if (!any) throw AllTermsDisabled("no loss term has a nonzero weight and a nonempty batch");
    out.total = weights.lambda_d * out.l_data + weights.lambda_dp * out.l_physics_data +
                weights.lambda_cp * out.l_physics_col + weights.lambda_ic * out.l_ic;
    check_finite_term(out.total, "total loss");
    return out;
}

LossBreakdown total_loss_and_grad(ParamGrads& grads, const MlpModel& model,
                                  const ComponentModel& component, const TrainBatches& batches,
                                  const LossWeights& weights) {
    check_weights(weights);
    grads = ParamGrads(model);
    LossBreakdown out;
    bool any = false;

    const bool data_on = active(weights.lambda_d, batches.data.labels.cols());
    const bool pd_on = active(weights.lambda_dp, batches.data.labels.cols());
    if (data_on || pd_on) {
        any = true;
        const Eigen::Index n = batches.data.labels.cols();
        const double inv = 1.0 / static_cast<double>(batches.data.labels.size());
        if (pd_on) {
            // One forward-mode pass serves both terms on the labeled batch.
            const JvpPass pass = time_derivative_pass(model, batches.data.inputs);
            const Mat& f = batches.data.rhs_at_labels.size() > 0
                               ? batches.data.rhs_at_labels
                               : rhs_at_columns(component, batches.data.inputs, batches.data.labels);
            const Mat residual_pd = pass.output_tangent() - f;
            out.l_physics_data = mean_sq(residual_pd);
            check_finite_term(out.l_physics_data, "loss_physics_data");
            Mat g_out = Mat::Zero(batches.data.labels.rows(), n);
            if (data_on) {
                const Mat residual_d = pass.output() - batches.data.labels;
                out.l_data = mean_sq(residual_d);
                check_finite_term(out.l_data, "loss_data");
                g_out = (2.0 * inv * weights.lambda_d) * residual_d;
            }
            const Mat g_tan = (2.0 * inv * weights.lambda_dp) * residual_pd;
            grads += grad_params(model, pass, g_out, g_tan);
        } else {
            const ForwardPass pass = forward_cached(model, batches.data.inputs);
            const Mat residual_d = pass.output() - batches.data.labels;
            out.l_data = mean_sq(residual_d);
            check_finite_term(out.l_data, "loss_data");
            const Mat g_out = (2.0 * inv * weights.lambda_d) * residual_d;
            grads += grad_params(model, pass, g_out);
        }
    }

    if (active(weights.lambda_cp, batches.collocation.inputs.cols())) {
        any = true;
        const Mat& inputs = batches.collocation.inputs;
        const Eigen::Index d = inputs.rows() - 1;
        const Eigen::Index n = inputs.cols();
        const double inv = 1.0 / static_cast<double>(d * n);
        const JvpPass pass = time_derivative_pass(model, inputs);
        const Mat f = rhs_at_columns(component, inputs, pass.output());
        const Mat residual = pass.output_tangent() - f;
        out.l_physics_col = mean_sq(residual);
        check_finite_term(out.l_physics_col, "loss_physics_col");
        const Mat g_tan = (2.0 * inv * weights.lambda_cp) * residual;
        // The rhs argument is itself the prediction, so its Jacobian feeds the
        // value-path gradient with a minus sign.
        Mat g_out(d, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const Mat jac = component.rhs_jacobian(inputs(d, j), pass.output().col(j));
            g_out.col(j).noalias() = (-2.0 * inv * weights.lambda_cp) * (jac.transpose() * residual.col(j));
        }
        grads += grad_params(model, pass, g_out, g_tan);
    }

    if (active(weights.lambda_ic, batches.ic.targets.cols())) {
        any = true;
        const double inv = 1.0 / static_cast<double>(batches.ic.targets.size());
        const ForwardPass pass = forward_cached(model, batches.ic.inputs);
        const Mat residual = pass.output() - batches.ic.targets;
        out.l_ic = mean_sq(residual);
        check_finite_term(out.l_ic, "loss_ic");
        const Mat g_out = (2.0 * inv * weights.lambda_ic) * residual;
        grads += grad_params(model, pass, g_out);
    }

    if (!any) throw AllTermsDisabled("no loss term has a nonzero weight and a nonempty batch");
    out.total = weights.lambda_d * out.l_data + weights.lambda_dp * out.l_physics_data +
                weights.lambda_cp * out.l_physics_col + weights.lambda_ic * out.l_ic;
    check_finite_term(out.total, "total loss");
    return out;
}

}  // namespace pinn
