#include "pinn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "pinn/errors.hpp"
#include "pinn/rng.hpp"

namespace pinn {

namespace {

void validate_config(const TrainConfig& config, const SplitDataset& dataset) {
    if (config.epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (config.batches < 1) throw ConfigError("train: batches must be >= 1");
    if (!(config.learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
    if (config.patience < 0) throw ConfigError("train: patience must be >= 0");
    if (std::isnan(config.min_delta) || config.min_delta < 0.0) {
        throw ConfigError("train: min_delta must be >= 0");
    }
    if (config.optimizer == Optimizer::lbfgs && config.batches != 1) {
        throw ConfigError("train: the quasi-Newton optimizer runs full batch (batches = 1)");
    }
    if (config.early_stopping && dataset.validation.empty()) {
        throw ConfigError("train: early stopping requires a nonempty validation split");
    }
}

LabeledBatch gather(const LabeledBatch& full, const std::vector<Eigen::Index>& idx) {
    LabeledBatch out;
    if (idx.empty()) return out;
    const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
    out.inputs.resize(full.inputs.rows(), n);
    out.labels.resize(full.labels.rows(), n);
    const bool with_rhs = full.rhs_at_labels.size() > 0;
    if (with_rhs) out.rhs_at_labels.resize(full.labels.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::Index src = idx[static_cast<std::size_t>(j)];
        out.inputs.col(j) = full.inputs.col(src);
        out.labels.col(j) = full.labels.col(src);
        if (with_rhs) out.rhs_at_labels.col(j) = full.rhs_at_labels.col(src);
    }
    return out;
}

CollocationBatch gather(const CollocationBatch& full, const std::vector<Eigen::Index>& idx) {
    CollocationBatch out;
    if (idx.empty()) return out;
    out.inputs.resize(full.inputs.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
        out.inputs.col(static_cast<Eigen::Index>(j)) = full.inputs.col(idx[j]);
    }
    return out;
}

IcBatch gather(const IcBatch& full, const std::vector<Eigen::Index>& idx) {
    IcBatch out;
    if (idx.empty()) return out;
    const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
    out.inputs.resize(full.inputs.rows(), n);
    out.targets.resize(full.targets.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
        out.inputs.col(j) = full.inputs.col(idx[static_cast<std::size_t>(j)]);
        out.targets.col(j) = full.targets.col(idx[static_cast<std::size_t>(j)]);
    }
    return out;
}

std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, rng::CounterRng& rng) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    rng.shuffle(idx);
    return idx;
}

std::vector<Eigen::Index> strided_slice(const std::vector<Eigen::Index>& perm, int offset,
                                        int stride) {
    std::vector<Eigen::Index> out;
    for (std::size_t k = static_cast<std::size_t>(offset); k < perm.size();
         k += static_cast<std::size_t>(stride)) {
        out.push_back(perm[k]);
    }
    return out;
}

bool any_term_active(const TrainBatches& b, const LossWeights& w) {
    return (w.lambda_d > 0.0 && b.data.labels.cols() > 0) ||
           (w.lambda_dp > 0.0 && b.data.labels.cols() > 0) ||
           (w.lambda_cp > 0.0 && b.collocation.inputs.cols() > 0) ||
           (w.lambda_ic > 0.0 && b.ic.targets.cols() > 0);
}

}  // namespace

AdamState::AdamState(const MlpModel& model) {
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        m_w.push_back(Mat::Zero(model.weights[l].rows(), model.weights[l].cols()));
        v_w.push_back(Mat::Zero(model.weights[l].rows(), model.weights[l].cols()));
        m_b.push_back(Vec::Zero(model.biases[l].size()));
        v_b.push_back(Vec::Zero(model.biases[l].size()));
    }
}

void adam_step(MlpModel& model, const ParamGrads& grads, AdamState& state, double learning_rate,
               double beta1, double beta2, double epsilon) {
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        state.m_w[l] = beta1 * state.m_w[l] + (1.0 - beta1) * grads.weights[l];
        state.v_w[l].array() =
            beta2 * state.v_w[l].array() + (1.0 - beta2) * grads.weights[l].array().square();
        model.weights[l].array() -= learning_rate * (state.m_w[l].array() / bc1) /
                                    ((state.v_w[l].array() / bc2).sqrt() + epsilon);
        state.m_b[l] = beta1 * state.m_b[l] + (1.0 - beta1) * grads.biases[l];
        state.v_b[l].array() =
            beta2 * state.v_b[l].array() + (1.0 - beta2) * grads.biases[l].array().square();
        model.biases[l].array() -= learning_rate * (state.m_b[l].array() / bc1) /
                                   ((state.v_b[l].array() / bc2).sqrt() + epsilon);
    }
}

Vec flatten_params(const MlpModel& model) {
    Vec flat(static_cast<Eigen::Index>(model.parameter_count()));
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        const Mat& w = model.weights[l];
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) flat(pos++) = w(i, j);
        }
        flat.segment(pos, model.biases[l].size()) = model.biases[l];
        pos += model.biases[l].size();
    }
    return flat;
}

void assign_params(MlpModel& model, const Vec& flat) {
    if (flat.size() != static_cast<Eigen::Index>(model.parameter_count())) {
        throw DimensionMismatch("assign_params: flat vector does not match parameter count");
    }
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        Mat& w = model.weights[l];
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = flat(pos++);
        }
        model.biases[l] = flat.segment(pos, model.biases[l].size());
        pos += model.biases[l].size();
    }
}

Vec flatten_grads(const ParamGrads& grads) {
    Eigen::Index total = 0;
    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        total += grads.weights[l].size() + grads.biases[l].size();
    }
    Vec flat(total);
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        const Mat& w = grads.weights[l];
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) flat(pos++) = w(i, j);
        }
        flat.segment(pos, grads.biases[l].size()) = grads.biases[l];
        pos += grads.biases[l].size();
    }
    return flat;
}

double lbfgs_step(Vec& x, const Objective& objective, LbfgsState& state, double initial_step) {
    constexpr double kC1 = 1e-4;
    constexpr double kC2 = 0.9;
    constexpr int kMaxTrials = 20;

    Vec g(x.size());
    double f0;
    if (state.have_prev && state.prev_x.size() == x.size() &&
        (state.prev_x.array() == x.array()).all()) {
        f0 = state.prev_f;
        g = state.prev_grad;
    } else {
        f0 = objective(x, g);
    }

    Vec d = -g;
    if (!state.memory.empty()) {
        Vec q = g;
        const auto& mem = state.memory;  // front oldest, back newest
        std::vector<double> alpha(mem.size()), rho(mem.size());
        for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
            rho[static_cast<std::size_t>(i)] =
                1.0 / mem[static_cast<std::size_t>(i)].second.dot(mem[static_cast<std::size_t>(i)].first);
            alpha[static_cast<std::size_t>(i)] =
                rho[static_cast<std::size_t>(i)] * mem[static_cast<std::size_t>(i)].first.dot(q);
            q -= alpha[static_cast<std::size_t>(i)] * mem[static_cast<std::size_t>(i)].second;
        }
        const Vec& s_new = mem.back().first;
        const Vec& y_new = mem.back().second;
        Vec r = (s_new.dot(y_new) / y_new.dot(y_new)) * q;
        for (std::size_t i = 0; i < mem.size(); ++i) {
            const double beta = rho[i] * mem[i].second.dot(r);
            r += (alpha[i] - beta) * mem[i].first;
        }
        d = -r;
    }

    double dphi0 = g.dot(d);
    if (!(dphi0 < 0.0)) {
        state.memory.clear();
        d = -g;
        dphi0 = g.dot(d);
        if (!(dphi0 < 0.0)) {
            // Zero (or non-finite) gradient: nothing to do.
            state.prev_x = x;
            state.prev_grad = g;
            state.prev_f = f0;
            state.have_prev = true;
            return f0;
        }
    }

    int trials = 0;
    Vec x_t(x.size()), g_t(x.size());
    double f_t = 0.0, dphi_t = 0.0;
    auto eval = [&](double a) {
        x_t = x + a * d;
        f_t = objective(x_t, g_t);
        dphi_t = g_t.dot(d);
        ++trials;
    };
    auto accept = [&](double a) {
        Vec s = a * d;
        Vec y = g_t - g;
        if (s.dot(y) > 1e-10 * s.norm() * y.norm()) {
            state.memory.emplace_back(std::move(s), std::move(y));
            if (static_cast<int>(state.memory.size()) > state.memory_size) state.memory.pop_front();
        }
        x = x_t;
        state.prev_x = x;
        state.prev_grad = g_t;
        state.prev_f = f_t;
        state.have_prev = true;
        return f_t;
    };
    auto zoom = [&](double a_lo, double a_hi, double f_lo) -> double {
        while (trials < kMaxTrials) {
            const double a = 0.5 * (a_lo + a_hi);
            eval(a);
            if (!std::isfinite(f_t) || f_t > f0 + kC1 * a * dphi0 || f_t >= f_lo) {
                a_hi = a;
            } else {
                if (std::abs(dphi_t) <= -kC2 * dphi0) return accept(a);
                if (dphi_t * (a_hi - a_lo) >= 0.0) a_hi = a_lo;
                a_lo = a;
                f_lo = f_t;
            }
        }
        throw LineSearchFailed("lbfgs_step: no strong Wolfe step within 20 trials");
    };

    double a_prev = 0.0;
    double f_prev = f0;
    double a = initial_step;
    while (trials < kMaxTrials) {
        eval(a);
        if (!std::isfinite(f_t) || f_t > f0 + kC1 * a * dphi0 || (trials > 1 && f_t >= f_prev)) {
            return zoom(a_prev, a, f_prev);
        }
        if (std::abs(dphi_t) <= -kC2 * dphi0) return accept(a);
        if (dphi_t >= 0.0) return zoom(a, a_prev, f_t);
        a_prev = a;
        f_prev = f_t;
        a *= 2.0;
    }
    throw LineSearchFailed("lbfgs_step: no strong Wolfe step within 20 trials");
}

TrainResult train(const TrainConfig& config, const SplitDataset& dataset,
                  const ComponentModel& component, MlpModel model) {
    validate_config(config, dataset);

    const LabeledBatch data_full = pack_labeled(dataset.train, component);
    const CollocationBatch col_full = pack_collocation(dataset.collocation);
    const IcBatch ic_full = pack_ic(dataset.collocation);
    const LabeledBatch val = pack_labeled(dataset.validation);
    const TrainBatches full{data_full, col_full, ic_full};

    // Also validates that at least one term is enabled.
    const double initial_total = total_loss(model, component, full, config.weights).total;

    TrainResult result;
    AdamState adam(model);
    LbfgsState lbfgs;
    Vec flat;
    LossBreakdown last_lbfgs_breakdown;
    if (config.optimizer == Optimizer::lbfgs) flat = flatten_params(model);
    const Objective lbfgs_objective = [&](const Vec& params, Vec& grad) {
        assign_params(model, params);
        ParamGrads grads(model);
        try {
            last_lbfgs_breakdown =
                total_loss_and_grad(grads, model, component, full, config.weights);
        } catch (const NonFiniteLoss&) {
            // A wild line-search trial point; report it as uphill instead of
            // aborting so the search can back off.
            grad.setZero(params.size());
            return std::numeric_limits<double>::infinity();
        }
        grad = flatten_grads(grads);
        return last_lbfgs_breakdown.total;
    };

    MlpModel best_model = model;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    int stale = 0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        LossBreakdown epoch_mean;
        try {
            if (config.optimizer == Optimizer::lbfgs) {
                const double step0 = lbfgs.have_prev ? 1.0 : config.learning_rate;
                lbfgs_step(flat, lbfgs_objective, lbfgs, step0);
                assign_params(model, flat);
                epoch_mean = last_lbfgs_breakdown;
            } else if (config.batches == 1) {
                ParamGrads grads(model);
                epoch_mean = total_loss_and_grad(grads, model, component, full, config.weights);
                adam_step(model, grads, adam, config.learning_rate);
            } else {
                rng::CounterRng data_rng(config.shuffle_seed, 3 * static_cast<std::uint64_t>(epoch - 1));
                rng::CounterRng col_rng(config.shuffle_seed, 3 * static_cast<std::uint64_t>(epoch - 1) + 1);
                rng::CounterRng ic_rng(config.shuffle_seed, 3 * static_cast<std::uint64_t>(epoch - 1) + 2);
                const auto data_perm = shuffled_indices(data_full.labels.cols(), data_rng);
                const auto col_perm = shuffled_indices(col_full.inputs.cols(), col_rng);
                const auto ic_perm = shuffled_indices(ic_full.targets.cols(), ic_rng);
                int steps = 0;
                for (int b = 0; b < config.batches; ++b) {
                    TrainBatches sub;
                    sub.data = gather(data_full, strided_slice(data_perm, b, config.batches));
                    sub.collocation = gather(col_full, strided_slice(col_perm, b, config.batches));
                    sub.ic = gather(ic_full, strided_slice(ic_perm, b, config.batches));
                    if (!any_term_active(sub, config.weights)) continue;
                    ParamGrads grads(model);
                    const LossBreakdown lb =
                        total_loss_and_grad(grads, model, component, sub, config.weights);
                    adam_step(model, grads, adam, config.learning_rate);
                    epoch_mean.l_data += lb.l_data;
                    epoch_mean.l_physics_data += lb.l_physics_data;
                    epoch_mean.l_physics_col += lb.l_physics_col;
                    epoch_mean.l_ic += lb.l_ic;
                    ++steps;
                }
                if (steps == 0) throw AllTermsDisabled("train: every mini-batch was empty");
                const double inv = 1.0 / static_cast<double>(steps);
                epoch_mean.l_data *= inv;
                epoch_mean.l_physics_data *= inv;
                epoch_mean.l_physics_col *= inv;
                epoch_mean.l_ic *= inv;
                epoch_mean.total = config.weights.lambda_d * epoch_mean.l_data +
                                   config.weights.lambda_dp * epoch_mean.l_physics_data +
                                   config.weights.lambda_cp * epoch_mean.l_physics_col +
                                   config.weights.lambda_ic * epoch_mean.l_ic;
            }
        } catch (const NonFiniteLoss& e) {
            throw NonFiniteLoss("epoch " + std::to_string(epoch) + ": " + e.what());
        }
        if (!std::isfinite(epoch_mean.total)) {
            throw NonFiniteLoss("epoch " + std::to_string(epoch) + ": total loss is not finite");
        }
        if (initial_total > 0.0 && epoch_mean.total > 1e6 * initial_total) {
            throw OptimizerDiverged("epoch " + std::to_string(epoch) + ": total loss " +
                                    std::to_string(epoch_mean.total) + " exceeds 1e6 x initial " +
                                    std::to_string(initial_total));
        }

        EpochRecord record;
        record.epoch = epoch;
        record.train = epoch_mean;
        if (val.labels.cols() > 0) record.val_mse = loss_data(model, val);
        const auto t1 = std::chrono::steady_clock::now();
        record.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        result.history.push_back(record);

        if (config.early_stopping) {
            if (record.val_mse < best_val - config.min_delta) {
                best_val = record.val_mse;
                best_model = model;
                best_epoch = epoch;
                stale = 0;
            } else {
                ++stale;
            }
            if (stale > config.patience) {
                result.stopped_early = true;
                break;
            }
        }
    }

    if (config.early_stopping && best_epoch > 0) {
        result.model = std::move(best_model);
        result.best_epoch = best_epoch;
        result.best_val_mse = best_val;
    } else {
        result.model = std::move(model);
        result.best_epoch = 0;
        result.best_val_mse = result.history.empty()
                                  ? std::numeric_limits<double>::quiet_NaN()
                                  : result.history.back().val_mse;
    }
    return result;
}

LossWeights calibrate_loss_weights(const TrainConfig& pilot, const SplitDataset& dataset,
                                   const ComponentModel& component, const MlpModel& init) {
    TrainConfig cfg = pilot;
    cfg.weights = LossWeights{1.0, 0.0, 0.0, 0.0};
    const TrainResult pilot_result = train(cfg, dataset, component, init);

    const LabeledBatch data = pack_labeled(dataset.train, component);
    const CollocationBatch col = pack_collocation(dataset.collocation);
    const IcBatch ic = pack_ic(dataset.collocation);

    const double l_d = data.labels.cols() > 0 ? loss_data(pilot_result.model, data) : 0.0;
    auto balance = [&](double l_term) {
        if (!(l_d > 0.0) || !(l_term > 0.0) || !std::isfinite(l_d) || !std::isfinite(l_term)) {
            return 1.0;
        }
        return std::pow(10.0, static_cast<double>(std::llround(std::log10(l_d / l_term))));
    };

    LossWeights out;
    out.lambda_d = 1.0;
    out.lambda_dp = balance(data.labels.cols() > 0
                                ? loss_physics_data(pilot_result.model, component, data)
                                : 0.0);
    out.lambda_cp = balance(col.inputs.cols() > 0
                                ? loss_physics_col(pilot_result.model, component, col)
                                : 0.0);
    out.lambda_ic = balance(ic.targets.cols() > 0 ? loss_ic(pilot_result.model, ic) : 0.0);
    return out;
}

}  // namespace pinn
