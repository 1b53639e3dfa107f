#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pinn/loss.hpp"
#include "pinn/rng.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

using namespace pinn;

namespace {

ComponentModel oscillator_model() {
    Mat a(2, 2);
    a << 0.0, 1.0, -1.0, 0.0;
    return make_linear_model(a);
}

MlpModel small_net(std::uint64_t seed = 11) {
    MlpModel model = init_mlp({3, 5, 2}, seed);
    InputDomain domain;
    domain.bounds = {{-1.0, 1.0}, {-1.0, 1.0}};
    set_input_norm(model, domain, 1.0);
    return model;
}

// Rotation solution of the oscillator, used as labels so predictions and
// labels genuinely disagree.
Vec oscillator_state(const Vec& x0, double t) {
    Vec x(2);
    x(0) = x0(0) * std::cos(t) + x0(1) * std::sin(t);
    x(1) = -x0(0) * std::sin(t) + x0(1) * std::cos(t);
    return x;
}

std::vector<LabeledPoint> labeled_points() {
    std::vector<LabeledPoint> points;
    const double t_values[3] = {0.0, 0.35, 0.8};
    for (int traj = 0; traj < 2; ++traj) {
        Vec x0(2);
        x0 << 0.4 - 0.5 * traj, 0.2 + 0.3 * traj;
        for (const double t : t_values) {
            LabeledPoint p;
            p.trajectory_id = traj;
            p.x0 = x0;
            p.t = t;
            p.x = oscillator_state(x0, t);
            points.push_back(p);
        }
    }
    return points;
}

std::vector<CollocationPoint> collocation_points() {
    std::vector<CollocationPoint> points;
    const double t_values[4] = {0.1, 0.3, 0.6, 0.9};
    for (int traj = 0; traj < 2; ++traj) {
        Vec x0(2);
        x0 << -0.3 + 0.6 * traj, 0.5 - 0.2 * traj;
        for (const double t : t_values) {
            CollocationPoint p;
            p.trajectory_id = traj;
            p.x0 = x0;
            p.t = t;
            points.push_back(p);
        }
    }
    return points;
}

TrainBatches all_batches(const ComponentModel& component) {
    TrainBatches batches;
    batches.data = pack_labeled(labeled_points(), component);
    batches.collocation = pack_collocation(collocation_points());
    batches.ic = pack_ic(collocation_points());
    return batches;
}

double mean_sq(const Mat& residual) {
    return residual.squaredNorm() / static_cast<double>(residual.size());
}

double& param_entry(MlpModel& model, int layer, Eigen::Index row, Eigen::Index col, bool bias) {
    const auto lu = static_cast<std::size_t>(layer);
    return bias ? model.biases[lu](row) : model.weights[lu](row, col);
}

}  // namespace

TEST_CASE("the data term is the mean squared prediction error") {
    const ComponentModel component = oscillator_model();
    const MlpModel model = small_net();
    const LabeledBatch batch = pack_labeled(labeled_points());

    const Mat preds = forward(model, batch.inputs);
    const double expected = mean_sq(preds - batch.labels);
    CHECK(loss_data(model, batch) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected > 1e-4);  // labels and predictions genuinely differ
}

TEST_CASE("the physics term at data evaluates the rhs at the labeled state") {
    const ComponentModel component = oscillator_model();
    const MlpModel model = small_net();
    const LabeledBatch batch = pack_labeled(labeled_points());

    const Mat d_hat = time_derivative(model, batch.inputs);
    const Mat preds = forward(model, batch.inputs);
    const Eigen::Index d = batch.labels.rows();
    Mat res_label(d, batch.labels.cols());
    Mat res_pred(d, batch.labels.cols());
    for (Eigen::Index j = 0; j < batch.labels.cols(); ++j) {
        const double t = batch.inputs(d, j);
        res_label.col(j) = d_hat.col(j) - component.rhs(t, Vec(batch.labels.col(j)));
        res_pred.col(j) = d_hat.col(j) - component.rhs(t, Vec(preds.col(j)));
    }
    const double at_labels = mean_sq(res_label);
    const double at_preds = mean_sq(res_pred);

    CHECK(loss_physics_data(model, component, batch) ==
          doctest::Approx(at_labels).epsilon(1e-12));
    CHECK(std::abs(at_labels - at_preds) > 1e-8);
}

TEST_CASE("a precomputed rhs cache changes nothing") {
    const ComponentModel component = oscillator_model();
    const MlpModel model = small_net();
    const LabeledBatch plain = pack_labeled(labeled_points());
    const LabeledBatch cached = pack_labeled(labeled_points(), component);

    REQUIRE(cached.rhs_at_labels.cols() == cached.labels.cols());
    REQUIRE(plain.rhs_at_labels.size() == 0);
    CHECK(loss_physics_data(model, component, plain) ==
          loss_physics_data(model, component, cached));
}

TEST_CASE("the collocation term evaluates the rhs at the prediction") {
    const ComponentModel component = oscillator_model();
    const MlpModel model = small_net();
    const CollocationBatch batch = pack_collocation(collocation_points());

    const Mat d_hat = time_derivative(model, batch.inputs);
    const Mat preds = forward(model, batch.inputs);
    const Eigen::Index d = preds.rows();
    Mat residual(d, preds.cols());
    for (Eigen::Index j = 0; j < preds.cols(); ++j) {
        const double t = batch.inputs(d, j);
        residual.col(j) = d_hat.col(j) - component.rhs(t, Vec(preds.col(j)));
    }
    CHECK(loss_physics_col(model, component, batch) ==
          doctest::Approx(mean_sq(residual)).epsilon(1e-12));
}

TEST_CASE("initial-condition packing keeps one entry per trajectory, ascending") {
    std::vector<CollocationPoint> scrambled = collocation_points();
    std::swap(scrambled[0], scrambled[5]);
    std::swap(scrambled[2], scrambled[7]);

    const IcBatch batch = pack_ic(scrambled);
    REQUIRE(batch.inputs.cols() == 2);
    CHECK((batch.inputs.row(2).array() == 0.0).all());
    Vec x0_first(2), x0_second(2);
    x0_first << -0.3, 0.5;
    x0_second << 0.3, 0.3;
    CHECK((batch.inputs.col(0).head(2).array() == x0_first.array()).all());
    CHECK((batch.inputs.col(1).head(2).array() == x0_second.array()).all());
    CHECK((batch.targets.col(0).array() == x0_first.array()).all());
    CHECK((batch.targets.col(1).array() == x0_second.array()).all());

    const MlpModel model = small_net();
    const Mat preds = forward(model, batch.inputs);
    CHECK(loss_ic(model, batch) ==
          doctest::Approx(mean_sq(preds - batch.targets)).epsilon(1e-12));
}

TEST_CASE("the breakdown is linear in the weights") {
    const ComponentModel component = oscillator_model();
    const MlpModel model = small_net();
    const TrainBatches batches = all_batches(component);

    const double l_d = loss_data(model, batches.data);
    const double l_pd = loss_physics_data(model, component, batches.data);
    const double l_pc = loss_physics_col(model, component, batches.collocation);
    const double l_ic_val = loss_ic(model, batches.ic);

    rng::CounterRng gen(2024, 0);
    for (int trial = 0; trial < 100; ++trial) {
        LossWeights w;
        auto draw = [&] { return gen.next_unit() < 0.25 ? 0.0 : gen.uniform(0.0, 2.0); };
        w.lambda_d = draw();
        w.lambda_dp = draw();
        w.lambda_cp = draw();
        w.lambda_ic = draw();
        if (w.lambda_d == 0.0 && w.lambda_dp == 0.0 && w.lambda_cp == 0.0 && w.lambda_ic == 0.0) {
            w.lambda_d = 1.0;
        }

        const LossBreakdown out = total_loss(model, component, batches, w);
        CHECK(out.l_data == (w.lambda_d > 0.0 ? l_d : 0.0));
        CHECK(out.l_physics_data == (w.lambda_dp > 0.0 ? l_pd : 0.0));
        CHECK(out.l_physics_col == (w.lambda_cp > 0.0 ? l_pc : 0.0));
        CHECK(out.l_ic == (w.lambda_ic > 0.0 ? l_ic_val : 0.0));

        const double expected = w.lambda_d * out.l_data + w.lambda_dp * out.l_physics_data +
                                w.lambda_cp * out.l_physics_col + w.lambda_ic * out.l_ic;
        const double denom = std::max(std::abs(expected), 1e-30);
        CHECK(std::abs(out.total - expected) / denom <= 1e-12);
    }
}

TEST_CASE("per-term parameter gradients match finite differences") {
    const ComponentModel component = oscillator_model();
    const MlpModel model = small_net();
    const TrainBatches batches = all_batches(component);

    const LossWeights configs[4] = {
        {1.0, 0.0, 0.0, 0.0},
        {0.0, 1.0, 0.0, 0.0},
        {0.0, 0.0, 1.0, 0.0},
        {0.0, 0.0, 0.0, 1.0},
    };
    const double h = 1e-5;

    for (const LossWeights& w : configs) {
        ParamGrads grads(model);
        (void)total_loss_and_grad(grads, model, component, batches, w);

        auto fd_entry = [&](int layer, Eigen::Index row, Eigen::Index col, bool bias) {
            MlpModel probe = model;
            double& p = param_entry(probe, layer, row, col, bias);
            const double saved = p;
            p = saved + h;
            const double hi = total_loss(probe, component, batches, w).total;
            p = saved - h;
            const double lo = total_loss(probe, component, batches, w).total;
            return (hi - lo) / (2.0 * h);
        };

        for (int l = 0; l < model.num_layers(); ++l) {
            const auto lu = static_cast<std::size_t>(l);
            for (Eigen::Index r = 0; r < model.weights[lu].rows(); ++r) {
                for (Eigen::Index c = 0; c < model.weights[lu].cols(); ++c) {
                    const double g = grads.weights[lu](r, c);
                    const double fd = fd_entry(l, r, c, false);
                    const double rel = std::abs(g - fd) / std::max(std::abs(g) + std::abs(fd), 1e-8);
                    CHECK(rel < 1e-5);
                }
            }
            for (Eigen::Index r = 0; r < model.biases[lu].size(); ++r) {
                const double g = grads.biases[lu](r);
                const double fd = fd_entry(l, r, 0, true);
                const double rel = std::abs(g - fd) / std::max(std::abs(g) + std::abs(fd), 1e-8);
                CHECK(rel < 1e-5);
            }
        }
    }
}

TEST_CASE("the fused gradient is the weighted sum of the per-term gradients") {
    const ComponentModel component = oscillator_model();
    const MlpModel model = small_net();
    const TrainBatches batches = all_batches(component);

    const LossWeights all{1.0, 0.3, 0.2, 0.5};
    ParamGrads fused(model);
    const LossBreakdown out = total_loss_and_grad(fused, model, component, batches, all);

    ParamGrads sum(model);
    const LossWeights singles[4] = {
        {all.lambda_d, 0.0, 0.0, 0.0},
        {0.0, all.lambda_dp, 0.0, 0.0},
        {0.0, 0.0, all.lambda_cp, 0.0},
        {0.0, 0.0, 0.0, all.lambda_ic},
    };
    for (const LossWeights& w : singles) {
        ParamGrads g(model);
        (void)total_loss_and_grad(g, model, component, batches, w);
        sum += g;
    }

    for (int l = 0; l < model.num_layers(); ++l) {
        const auto lu = static_cast<std::size_t>(l);
        const double scale_w = std::max(1.0, sum.weights[lu].array().abs().maxCoeff());
        CHECK((fused.weights[lu] - sum.weights[lu]).array().abs().maxCoeff() / scale_w <= 1e-12);
        const double scale_b = std::max(1.0, sum.biases[lu].array().abs().maxCoeff());
        CHECK((fused.biases[lu] - sum.biases[lu]).array().abs().maxCoeff() / scale_b <= 1e-12);
    }

    const double expected_total = all.lambda_d * out.l_data + all.lambda_dp * out.l_physics_data +
                                  all.lambda_cp * out.l_physics_col + all.lambda_ic * out.l_ic;
    CHECK(out.total == doctest::Approx(expected_total).epsilon(1e-12));
}

TEST_CASE("disabled or empty terms are rejected as a whole") {
    const ComponentModel component = oscillator_model();
    const MlpModel model = small_net();
    const TrainBatches batches = all_batches(component);

    const LossWeights zeros{0.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS((void)total_loss(model, component, batches, zeros), AllTermsDisabled);
    ParamGrads grads(model);
    CHECK_THROWS_AS((void)total_loss_and_grad(grads, model, component, batches, zeros),
                    AllTermsDisabled);

    const TrainBatches empty;
    const LossWeights ones{1.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS((void)total_loss(model, component, empty, ones), AllTermsDisabled);
}

TEST_CASE("weight and batch pathologies raise typed errors") {
    const ComponentModel component = oscillator_model();
    const MlpModel model = small_net();
    const TrainBatches batches = all_batches(component);

    LossWeights negative;
    negative.lambda_cp = -0.5;
    CHECK_THROWS_AS((void)total_loss(model, component, batches, negative), ConfigError);

    std::vector<LabeledPoint> poisoned = labeled_points();
    poisoned[2].x(1) = std::numeric_limits<double>::quiet_NaN();
    const LabeledBatch bad = pack_labeled(poisoned);
    CHECK_THROWS_AS((void)loss_data(model, bad), NonFiniteLoss);

    const LabeledBatch none;
    CHECK_THROWS_AS((void)loss_data(model, none), DimensionMismatch);
}
