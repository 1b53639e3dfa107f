#include "pinn/integrate.hpp"

#include "pinn/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pinn {

namespace {

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;
constexpr double kErrorExponent = -0.2;  // -1/(order + 1) for the embedded 4th-order estimate

[[nodiscard]] double rms_norm(const Vec& v) {
    if (v.size() == 0) return 0.0;
    return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

// Standard initial-step heuristic (Hairer, Norsett, Wanner): probe the
// solution scale with an Euler step and bound the step by both estimates.
[[nodiscard]] double select_initial_step(const ComponentModel& model, double t0, const Vec& y0,
                                         const Vec& f0, const SolveConfig& cfg,
                                         std::size_t& rhs_evaluations) {
    const double span = cfg.t_span[1] - cfg.t_span[0];
    const Vec scale = (cfg.atol + cfg.rtol * y0.array().abs()).matrix();
    const double d0 = rms_norm((y0.array() / scale.array()).matrix());
    const double d1 = rms_norm((f0.array() / scale.array()).matrix());
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;

    const Vec y1 = y0 + h0 * f0;
    const Vec f1 = model.rhs(t0 + h0, y1);
    ++rhs_evaluations;
    const double d2 = rms_norm(((f1 - f0).array() / scale.array()).matrix()) / h0;

    double h1;
    if (d1 <= 1e-15 && d2 <= 1e-15) {
        h1 = std::max(1e-6, h0 * 1e-3);
    } else {
        h1 = std::pow(0.01 / std::max(d1, d2), 0.2);
    }
    return std::min({100.0 * h0, h1, span, cfg.max_step});
}

void check_finite(const Vec& y, double t) {
    if (!y.allFinite()) {
        throw NonFiniteState("integration produced a non-finite state at t = " + std::to_string(t));
    }
}

}  // namespace

Vec DenseStep::eval(double t) const {
    const double x = (t - t0) / h;
    Eigen::Vector4d p;
    p[0] = x;
    p[1] = x * p[0];
    p[2] = x * p[1];
    p[3] = x * p[2];
    return y0 + coeffs * p;
}

Vec DenseSolution::eval(double t) const {
    if (steps.empty()) throw EmptySolution("dense solution contains no accepted steps");
    // First step whose right endpoint covers t; past-the-end times use the
    // last step's interpolant.
    std::size_t lo = 0, hi = steps.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (steps[mid].t0 + steps[mid].h >= t) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return steps[lo].eval(t);
}

DenseSolution integrate_adaptive(const ComponentModel& model, const Vec& x0, const SolveConfig& cfg) {
    if (!(cfg.rtol > 0.0) || !(cfg.atol > 0.0)) {
        throw ConfigError("integrate_adaptive: rtol and atol must be positive");
    }
    if (!(cfg.t_span[1] > cfg.t_span[0])) {
        throw ConfigError("integrate_adaptive: t_span end must exceed start");
    }
    if (x0.size() != model.state_dim) {
        throw DimensionMismatch("integrate_adaptive: x0 has " + std::to_string(x0.size()) +
                                " entries, model expects " + std::to_string(model.state_dim));
    }
    if (!x0.allFinite()) throw NonFiniteState("integrate_adaptive: x0 contains NaN or Inf");

    const double t_start = cfg.t_span[0];
    const double t_end = cfg.t_span[1];
    const double span = t_end - t_start;
    const double min_step = 1e-14 * span;
    const int n = model.state_dim;

    DenseSolution sol;
    sol.t_start = t_start;
    sol.t_end = t_end;
    sol.limits = model.limits;
    sol.times.push_back(t_start);
    sol.states.push_back(x0);

    double t = t_start;
    Vec y = x0;
    Vec f = model.rhs(t, y);
    sol.rhs_evaluations = 1;

    double h_abs = cfg.initial_step > 0.0
                       ? std::min(cfg.initial_step, cfg.max_step)
                       : select_initial_step(model, t, y, f, cfg, sol.rhs_evaluations);

    Mat K(n, rk45::kStagesExtended);
    Eigen::Map<const Eigen::Matrix<double, rk45::kStagesExtended, 4, Eigen::RowMajor>> P(
        &rk45::kP[0][0]);

    while (t < t_end) {
        h_abs = std::min(h_abs, cfg.max_step);

        bool step_accepted = false;
        bool step_rejected = false;
        double t_new = t;
        Vec y_new(n), f_new(n);

        while (!step_accepted) {
            if (h_abs < min_step) {
                throw StepSizeUnderflow("step size fell below 1e-14 of the span at t = " +
                                        std::to_string(t));
            }
            t_new = t + h_abs;
            if (t_new > t_end) t_new = t_end;
            const double h = t_new - t;
            h_abs = h;

            K.col(0) = f;
            for (int s = 1; s < rk45::kStages; ++s) {
                Vec ys = y;
                for (int j = 0; j < s; ++j) ys += (h * rk45::kA[s][j]) * K.col(j);
                K.col(s) = model.rhs(t + rk45::kC[s] * h, ys);
            }
            y_new = y;
            for (int s = 0; s < rk45::kStages; ++s) y_new += (h * rk45::kB[s]) * K.col(s);
            check_finite(y_new, t_new);
            f_new = model.rhs(t_new, y_new);
            K.col(6) = f_new;
            sol.rhs_evaluations += rk45::kStages;

            Vec err_vec = Vec::Zero(n);
            for (int s = 0; s < rk45::kStagesExtended; ++s) err_vec += (h * rk45::kE[s]) * K.col(s);
            const Vec scale =
                (cfg.atol + cfg.rtol * y.array().abs().max(y_new.array().abs())).matrix();
            const double err = rms_norm((err_vec.array() / scale.array()).matrix());

            if (err < 1.0) {
                double factor = (err == 0.0)
                                    ? kMaxFactor
                                    : std::min(kMaxFactor, kSafety * std::pow(err, kErrorExponent));
                if (step_rejected) factor = std::min(1.0, factor);
                h_abs *= factor;
                step_accepted = true;

                DenseStep step;
                step.t0 = t;
                step.h = h;
                step.y0 = y;
                step.coeffs = h * (K * P);
                sol.steps.push_back(std::move(step));
            } else {
                h_abs *= std::max(kMinFactor, kSafety * std::pow(err, kErrorExponent));
                step_rejected = true;
            }
        }

        if (!model.limits.empty()) {
            Vec y_clamped = apply_limits(y_new, f_new, model.limits).first;
            if ((y_clamped.array() != y_new.array()).any()) {
                f_new = model.rhs(t_new, y_clamped);
                ++sol.rhs_evaluations;
                y_new = std::move(y_clamped);
            }
            f_new = apply_limits(y_new, f_new, model.limits).second;
        }

        t = t_new;
        y = y_new;
        f = f_new;
        sol.times.push_back(t);
        sol.states.push_back(y);
    }

    return sol;
}

Trajectory sample_on_grid(const DenseSolution& solution, double dt) {
    if (solution.steps.empty()) throw EmptySolution("sample_on_grid: empty dense solution");
    if (!(dt > 0.0)) throw ConfigError("sample_on_grid: dt must be positive");

    const double span = solution.t_end - solution.t_start;
    const auto num_intervals = static_cast<Eigen::Index>(std::floor(span / dt + 1e-9));
    const auto num_points = num_intervals + 1;
    const int n = static_cast<int>(solution.states.front().size());

    Trajectory traj;
    traj.x0 = solution.states.front();
    traj.times = Vec(num_points);
    traj.states = Mat(num_points, n);
    traj.times[0] = solution.t_start;
    traj.states.row(0) = traj.x0.transpose();

    for (Eigen::Index j = 1; j < num_points; ++j) {
        const double t_j = solution.t_start + static_cast<double>(j) * dt;
        traj.times[j] = t_j;
        Vec x = solution.eval(std::min(t_j, solution.times.back()));
        for (const auto& lim : solution.limits) {
            x[lim.index] = std::clamp(x[lim.index], lim.lo, lim.hi);
        }
        traj.states.row(j) = x.transpose();
    }
    return traj;
}

Trajectory integrate_fixed_rk4(const ComponentModel& model, const Vec& x0,
                               const std::array<double, 2>& t_span, double h) {
    if (!(h > 0.0)) throw ConfigError("integrate_fixed_rk4: h must be positive");
    if (x0.size() != model.state_dim) {
        throw DimensionMismatch("integrate_fixed_rk4: x0 dimension mismatch");
    }

    const auto num_steps = static_cast<Eigen::Index>(std::llround((t_span[1] - t_span[0]) / h));
    Trajectory traj;
    traj.x0 = x0;
    traj.times = Vec(num_steps + 1);
    traj.states = Mat(num_steps + 1, x0.size());
    traj.times[0] = t_span[0];
    traj.states.row(0) = x0.transpose();

    Vec y = x0;
    for (Eigen::Index k = 0; k < num_steps; ++k) {
        const double t = t_span[0] + static_cast<double>(k) * h;
        const Vec k1 = model.rhs(t, y);
        const Vec k2 = model.rhs(t + 0.5 * h, y + (0.5 * h) * k1);
        const Vec k3 = model.rhs(t + 0.5 * h, y + (0.5 * h) * k2);
        const Vec k4 = model.rhs(t + h, y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        check_finite(y, t + h);
        if (!model.limits.empty()) {
            const Vec f = model.rhs(t + h, y);
            y = apply_limits(y, f, model.limits).first;
        }
        traj.times[k + 1] = t_span[0] + static_cast<double>(k + 1) * h;
        traj.states.row(k + 1) = y.transpose();
    }
    return traj;
}

}  // namespace pinn
