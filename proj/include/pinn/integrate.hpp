#pragma once

#include "pinn/component.hpp"
#include "pinn/types.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

namespace pinn {

struct SolveConfig {
    double rtol = 1e-7;
    double atol = 1e-9;
    std::array<double, 2> t_span{0.0, 1.0};
    double max_step = std::numeric_limits<double>::infinity();
    double initial_step = 0.0;  // 0 selects the step automatically
};

// A solved time series on a uniform grid, tagged with its initial condition.
struct Trajectory {
    std::int64_t trajectory_id = 0;
    Vec x0;
    Vec times;
    Mat states;  // num_points x state_dim
};

// Dormand-Prince 5(4) coefficients. The dense-output matrix kP maps the
// seven stages onto a quartic interpolant in the normalized step fraction.
// These are part of the test surface: stage row sums must equal the nodes,
// and the interpolant at fraction 1 must reproduce the fifth-order solution.
namespace rk45 {

inline constexpr int kStages = 6;          // stages entering the solution
inline constexpr int kStagesExtended = 7;  // including the first-same-as-last stage

inline constexpr double kC[kStages] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0};

inline constexpr double kA[kStages][kStages - 1] = {
    {0.0, 0.0, 0.0, 0.0, 0.0},
    {1.0 / 5, 0.0, 0.0, 0.0, 0.0},
    {3.0 / 40, 9.0 / 40, 0.0, 0.0, 0.0},
    {44.0 / 45, -56.0 / 15, 32.0 / 9, 0.0, 0.0},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0.0},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
};

inline constexpr double kB[kStages] = {35.0 / 384,      0.0,          500.0 / 1113,
                                       125.0 / 192,     -2187.0 / 6784, 11.0 / 84};

// Difference between the 5th- and embedded 4th-order weights.
inline constexpr double kE[kStagesExtended] = {71.0 / 57600,  0.0,       -71.0 / 16695, 71.0 / 1920,
                                               -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

inline constexpr double kP[kStagesExtended][4] = {
    {1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0},
    {0.0, 0.0, 0.0, 0.0},
    {0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0},
    {0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0},
    {0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0},
    {0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0},
    {0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0},
};

}  // namespace rk45

// One accepted step's quartic interpolant over [t0, t0 + h].
struct DenseStep {
    double t0 = 0.0;
    double h = 0.0;
    Vec y0;
    Mat coeffs;  // state_dim x 4, premultiplied by h

    [[nodiscard]] Vec eval(double t) const;
};

// Accepted steps, endpoint states and per-step interpolants of one solve.
struct DenseSolution {
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<double> times;    // accepted endpoints, starting at t_start
    std::vector<Vec> states;      // states at those endpoints (limits applied)
    std::vector<DenseStep> steps; // steps[i] covers [times[i], times[i+1]]
    std::vector<StateLimit> limits;
    std::size_t rhs_evaluations = 0;

    // Raw interpolant evaluation; limit clamping happens at grid sampling.
    [[nodiscard]] Vec eval(double t) const;
};

// Adaptive Dormand-Prince 5(4) integration with the standard weighted RMS
// error norm, step-size controller and dense output. State limits of the
// model are enforced after every accepted step (clamp + anti-windup).
[[nodiscard]] DenseSolution integrate_adaptive(const ComponentModel& model, const Vec& x0,
                                               const SolveConfig& cfg);

// Evaluates the dense interpolant on the uniform grid t_start, t_start+dt,
// ..., keeping the initial state verbatim in row 0 and clamping later rows
// to the model limits.
[[nodiscard]] Trajectory sample_on_grid(const DenseSolution& solution, double dt);

// Classical fixed-step RK4; the convergence-order oracle for tests.
[[nodiscard]] Trajectory integrate_fixed_rk4(const ComponentModel& model, const Vec& x0,
                                             const std::array<double, 2>& t_span, double h);

}  // namespace pinn
