#include "pinn/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "pinn/errors.hpp"
#include "pinn/io.hpp"

namespace pinn {

namespace {

Mat surrogate_inputs(const std::vector<Vec>& ics, std::size_t n, const Vec& times) {
    const Eigen::Index d = ics.front().size();
    const Eigen::Index steps = times.size();
    Mat inputs(d + 1, static_cast<Eigen::Index>(n) * steps);
    for (std::size_t i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < steps; ++k) {
            const Eigen::Index col = static_cast<Eigen::Index>(i) * steps + k;
            inputs.col(col).head(d) = ics[i];
            inputs(d, col) = times(k);
        }
    }
    return inputs;
}

Vec grid_times(double horizon, double dt) {
    const auto steps = static_cast<Eigen::Index>(std::floor(horizon / dt + 1e-9)) + 1;
    Vec times(steps);
    for (Eigen::Index k = 0; k < steps; ++k) times(k) = static_cast<double>(k) * dt;
    return times;
}

template <class F>
TimingRow time_method(const std::string& method, int n, int repeats, F&& body) {
    body();  // warm-up
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(repeats));
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        const auto t1 = std::chrono::steady_clock::now();
        samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(samples.begin(), samples.end());
    const std::size_t mid = samples.size() / 2;
    const double median = samples.size() % 2 == 1
                              ? samples[mid]
                              : 0.5 * (samples[mid - 1] + samples[mid]);
    return TimingRow{method, n, median, repeats, samples.front(), samples.back()};
}

std::string overlay_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "overlay_%03zu.csv", index);
    return buf;
}

}  // namespace

Metrics evaluate(const MlpModel& model, const std::vector<Trajectory>& tests) {
    if (tests.empty()) throw DimensionMismatch("evaluate: empty test set");
    const Eigen::Index d = model.output_dim();
    const Vec& times = tests.front().times;
    const Eigen::Index steps = times.size();
    if (steps == 0) throw DimensionMismatch("evaluate: empty time grid");
    for (const Trajectory& t : tests) {
        if (t.x0.size() + 1 != model.input_dim() || t.states.cols() != d) {
            throw DimensionMismatch("evaluate: trajectory does not match the model dimensions");
        }
        if (t.times.size() != steps || t.states.rows() != steps ||
            (t.times.array() != times.array()).any()) {
            throw DimensionMismatch("evaluate: trajectories must share one time grid");
        }
    }

    const Eigen::Index n = static_cast<Eigen::Index>(tests.size());
    Mat inputs(d + 1, n * steps);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < steps; ++k) {
            inputs.col(i * steps + k).head(d) = tests[static_cast<std::size_t>(i)].x0;
            inputs(d, i * steps + k) = times(k);
        }
    }
    const Mat pred = forward(model, inputs);

    Metrics m;
    m.timestep_times = times;
    m.per_state_mae = Vec::Zero(d);
    m.per_state_mse = Vec::Zero(d);
    m.per_state_max_ae = Vec::Zero(d);
    m.per_timestep_mae = Vec::Zero(steps);
    m.per_timestep_mse = Vec::Zero(steps);
    m.per_timestep_max_ae = Vec::Zero(steps);

    double sum_abs = 0.0, sum_sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Mat& truth = tests[static_cast<std::size_t>(i)].states;
        for (Eigen::Index k = 0; k < steps; ++k) {
            const Vec err = (pred.col(i * steps + k) - truth.row(k).transpose()).cwiseAbs();
            sum_abs += err.sum();
            sum_sq += err.squaredNorm();
            m.max_ae = std::max(m.max_ae, err.maxCoeff());
            m.per_state_mae += err;
            m.per_state_mse += err.cwiseAbs2();
            m.per_state_max_ae = m.per_state_max_ae.cwiseMax(err);
            m.per_timestep_mae(k) += err.sum();
            m.per_timestep_mse(k) += err.squaredNorm();
            m.per_timestep_max_ae(k) = std::max(m.per_timestep_max_ae(k), err.maxCoeff());
        }
    }
    const double points = static_cast<double>(n * steps);
    m.mae = sum_abs / (points * static_cast<double>(d));
    m.mse = sum_sq / (points * static_cast<double>(d));
    m.per_state_mae /= points;
    m.per_state_mse /= points;
    m.per_timestep_mae /= static_cast<double>(n * d);
    m.per_timestep_mse /= static_cast<double>(n * d);
    return m;
}

TimingTable bench_inference(const MlpModel& model, const ComponentModel& component,
                            const std::vector<Vec>& ics, double horizon, double dt,
                            const SolveConfig& solver, const std::vector<int>& sizes,
                            int repeats) {
    TimingTable table;
    if (ics.empty() || sizes.empty()) return table;
    if (repeats < 3) throw ConfigError("bench_inference: repeats must be >= 3");
    if (!(dt > 0.0) || !(horizon > 0.0)) {
        throw ConfigError("bench_inference: horizon and dt must be positive");
    }
    const Vec times = grid_times(horizon, dt);

    SolveConfig cfg = solver;
    cfg.t_span = {0.0, horizon};
    double sink = 0.0;

    for (const int n : sizes) {
        if (n < 1) throw ConfigError("bench_inference: sizes must be >= 1");
        if (static_cast<std::size_t>(n) > ics.size()) {
            throw ConfigError("bench_inference: need at least " + std::to_string(n) +
                              " initial conditions");
        }
        table.rows.push_back(time_method("solver", n, repeats, [&] {
            for (int i = 0; i < n; ++i) {
                const DenseSolution sol =
                    integrate_adaptive(component, ics[static_cast<std::size_t>(i)], cfg);
                const Trajectory traj = sample_on_grid(sol, dt);
                sink += traj.states(traj.states.rows() - 1, 0);
            }
        }));
        table.rows.push_back(time_method("surrogate", n, repeats, [&] {
            const Mat inputs = surrogate_inputs(ics, static_cast<std::size_t>(n), times);
            const Mat out = forward(model, inputs);
            sink += out(0, out.cols() - 1);
        }));
    }
    volatile double keep_alive = sink;  // bodies must not be optimized away
    (void)keep_alive;
    return table;
}

std::vector<std::filesystem::path> export_overlays(const MlpModel& model,
                                                   const ComponentModel& component,
                                                   const std::vector<Vec>& ics,
                                                   const std::filesystem::path& dir,
                                                   double horizon, double dt,
                                                   const SolveConfig& solver) {
    if (ics.empty()) throw ConfigError("export_overlays: no initial conditions");
    const Vec times = grid_times(horizon, dt);
    const Eigen::Index steps = times.size();
    const Eigen::Index d = model.output_dim();

    SolveConfig cfg = solver;
    cfg.t_span = {0.0, horizon};

    Vec err_sum = Vec::Zero(steps);
    Vec err_max = Vec::Zero(steps);
    std::vector<std::filesystem::path> written;

    for (std::size_t i = 0; i < ics.size(); ++i) {
        const DenseSolution sol = integrate_adaptive(component, ics[i], cfg);
        const Mat truth = sample_on_grid(sol, dt).states;

        Mat inputs(d + 1, steps);
        for (Eigen::Index k = 0; k < steps; ++k) {
            inputs.col(k).head(d) = ics[i];
            inputs(d, k) = times(k);
        }
        const Mat pred = forward(model, inputs);

        std::string csv = "t";
        for (Eigen::Index s = 0; s < d; ++s) csv += ",x_true_" + std::to_string(s + 1);
        for (Eigen::Index s = 0; s < d; ++s) csv += ",x_pred_" + std::to_string(s + 1);
        csv += "\n";
        for (Eigen::Index k = 0; k < steps; ++k) {
            csv += io::format_double(times(k));
            for (Eigen::Index s = 0; s < d; ++s) csv += "," + io::format_double(truth(k, s));
            for (Eigen::Index s = 0; s < d; ++s) csv += "," + io::format_double(pred(s, k));
            csv += "\n";
            const Vec err = (pred.col(k) - truth.row(k).transpose()).cwiseAbs();
            err_sum(k) += err.sum();
            err_max(k) = std::max(err_max(k), err.maxCoeff());
        }
        const std::filesystem::path path = dir / overlay_name(i);
        io::write_file(path, csv);
        written.push_back(path);
    }

    std::string curve = "t,mae,max_ae\n";
    const double denom = static_cast<double>(ics.size()) * static_cast<double>(d);
    for (Eigen::Index k = 0; k < steps; ++k) {
        curve += io::format_double(times(k)) + "," + io::format_double(err_sum(k) / denom) + "," +
                 io::format_double(err_max(k)) + "\n";
    }
    const std::filesystem::path curve_path = dir / "error_curve.csv";
    io::write_file(curve_path, curve);
    written.push_back(curve_path);
    return written;
}

}  // namespace pinn
