#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pinn/integrate.hpp"

#include <cmath>
#include <limits>

using namespace pinn;

namespace {

ComponentModel decay_model() {
    Mat a(1, 1);
    a << -1.0;
    return make_linear_model(a);
}

ComponentModel oscillator_model() {
    Mat a(2, 2);
    a << 0.0, 1.0, -1.0, 0.0;
    return make_linear_model(a);
}

// One-state model whose rhs blows up near t = 0.5; the error estimate forces
// rejections until the step size underflows.
ComponentModel spike_model() {
    ComponentModel m;
    m.state_dim = 1;
    m.state_names = {"x_1"};
    m.rhs = [](double t, const Vec&) {
        Vec dx(1);
        dx(0) = t < 0.5 ? 0.0 : 1.0 / (t - 0.5 + 1e-300);
        return dx;
    };
    m.rhs_jacobian = [](double, const Vec&) { return Mat::Zero(1, 1); };
    return m;
}

}  // namespace

TEST_CASE("tableau rows are consistent") {
    for (int s = 0; s < rk45::kStages; ++s) {
        double row = 0.0;
        for (int j = 0; j < rk45::kStages - 1; ++j) row += rk45::kA[s][j];
        CHECK(row == doctest::Approx(rk45::kC[s]).epsilon(1e-14).scale(1.0));
    }
    double b_sum = 0.0;
    for (double b : rk45::kB) b_sum += b;
    CHECK(b_sum == doctest::Approx(1.0).epsilon(1e-15));

    // The error weights are a difference of two order conditions and cancel.
    double e_sum = 0.0;
    for (double e : rk45::kE) e_sum += e;
    CHECK(std::abs(e_sum) < 1e-15);
}

TEST_CASE("the dense interpolant reproduces the step endpoint") {
    // Summing the interpolation polynomial at fraction 1 recovers the
    // fifth-order solution weights, so the dense output is continuous
    // across steps.
    for (int s = 0; s < rk45::kStagesExtended; ++s) {
        double row = 0.0;
        for (int j = 0; j < 4; ++j) row += rk45::kP[s][j];
        const double expected = s < rk45::kStages ? rk45::kB[s] : 0.0;
        CHECK(row == doctest::Approx(expected).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("exponential decay meets the tight tolerance") {
    SolveConfig cfg;
    cfg.rtol = 1e-9;
    cfg.atol = 1e-9;
    cfg.t_span = {0.0, 1.0};
    const DenseSolution sol = integrate_adaptive(decay_model(), Vec::Ones(1), cfg);
    CHECK(std::abs(sol.states.back()(0) - std::exp(-1.0)) < 1e-7);
}

TEST_CASE("the oscillator conserves energy to tolerance") {
    SolveConfig cfg;
    cfg.rtol = 1e-10;
    cfg.atol = 1e-12;
    cfg.t_span = {0.0, 20.0};
    Vec x0(2);
    x0 << 1.0, 0.0;
    const DenseSolution sol = integrate_adaptive(oscillator_model(), x0, cfg);
    const Vec xf = sol.states.back();
    CHECK(xf.squaredNorm() == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(xf(0) == doctest::Approx(std::cos(20.0)).epsilon(1e-6));
}

TEST_CASE("fixed-step rk4 converges at fourth order") {
    const ComponentModel m = decay_model();
    const std::array<double, 2> span{0.0, 1.0};
    const double exact = std::exp(-1.0);

    const Trajectory coarse = integrate_fixed_rk4(m, Vec::Ones(1), span, 0.1);
    const Trajectory fine = integrate_fixed_rk4(m, Vec::Ones(1), span, 0.05);
    const double e_coarse = std::abs(coarse.states(coarse.states.rows() - 1, 0) - exact);
    const double e_fine = std::abs(fine.states(fine.states.rows() - 1, 0) - exact);
    const double order = std::log2(e_coarse / e_fine);
    CHECK(order > 3.7);
    CHECK(order < 4.3);
}

TEST_CASE("dense output interpolates between accepted steps") {
    SolveConfig cfg;
    cfg.rtol = 1e-6;
    cfg.atol = 1e-9;
    cfg.t_span = {0.0, 2.0};
    const DenseSolution sol = integrate_adaptive(decay_model(), Vec::Ones(1), cfg);

    // Accepted endpoints evaluate exactly.
    for (std::size_t i = 0; i < sol.times.size(); ++i) {
        CHECK(sol.eval(sol.times[i])(0) ==
              doctest::Approx(sol.states[i](0)).epsilon(1e-12).scale(1.0));
    }
    // Off-grid points track the true solution at the solve tolerance.
    for (double t = 0.05; t < 2.0; t += 0.17) {
        CHECK(sol.eval(t)(0) == doctest::Approx(std::exp(-t)).epsilon(1e-6));
    }
}

TEST_CASE("grid sampling keeps the initial state verbatim") {
    SolveConfig cfg;
    cfg.t_span = {0.0, 1.0};
    Vec x0(2);
    x0 << 0.3, -0.4;
    const DenseSolution sol = integrate_adaptive(oscillator_model(), x0, cfg);
    const Trajectory traj = sample_on_grid(sol, 0.01);

    REQUIRE(traj.times.size() == 101);
    REQUIRE(traj.states.rows() == 101);
    REQUIRE(traj.states.cols() == 2);
    CHECK(traj.states(0, 0) == 0.3);
    CHECK(traj.states(0, 1) == -0.4);
    CHECK(traj.x0(0) == 0.3);
    for (Eigen::Index k = 0; k < traj.times.size(); ++k) {
        CHECK(traj.times(k) == doctest::Approx(0.01 * static_cast<double>(k)).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("the machine trajectory matches an independently computed reference") {
    // Reference rows come from a separately implemented adaptive 5(4) run at
    // the same tolerances (rtol 1e-7, atol 1e-9, max step 0.05), frozen here
    // at full precision.
    const ComponentModel m = make_sm9_model(SmParams{});
    Vec x0(9);
    x0 << 0.73175043785226723, -0.1617137686794845, 1.0381847039940517, 0.0, 1.08, 1.0, 1.105,
        0.7048, 0.7048;
    SolveConfig cfg;
    cfg.rtol = 1e-7;
    cfg.atol = 1e-9;
    cfg.max_step = 0.05;
    cfg.t_span = {0.0, 1.0};
    const Trajectory traj = sample_on_grid(integrate_adaptive(m, x0, cfg), 1e-3);
    REQUIRE(traj.states.rows() == 1001);

    const double ref100[9] = {0.80464593670316298, 0.90947365132603353, 1.0001493971939983,
                              -0.016008773576202982, 2.0204968567781081, 0.81640131653788506,
                              7.1452611334760867, 0.70259803436938717, 0.68393706392409725};
    const double ref500[9] = {1.1832426905874822, 0.94858084368556217, 1.0518195461864848,
                              -0.083274384924875211, 3.2425342797071885, 0.67236168580045819,
                              4.3020947345032106, 0.67319010961146153, 0.64543364799145997};
    const double ref1000[9] = {1.6132590599270344, 0.7438553709773551, 1.1701044589310277,
                               -0.16163268229089575, 2.3312118171194109, 0.52064819883898539,
                               2.7621300979288326, 0.65286348878023359, 0.6476693073474612};
    for (int s = 0; s < 9; ++s) {
        CHECK(std::abs(traj.states(100, s) - ref100[s]) < 1e-9);
        CHECK(std::abs(traj.states(500, s) - ref500[s]) < 1e-9);
        CHECK(std::abs(traj.states(1000, s) - ref1000[s]) < 1e-9);
    }
}

TEST_CASE("regulator and valve limits hold at every output point") {
    const SmParams p;
    const ComponentModel m = make_sm9_model(p);
    Vec x0(9);
    x0 << -0.5, 1.0, 0.9, 0.0, 1.08, 1.0, 1.105, 0.7048, 0.7048;
    SolveConfig cfg;
    cfg.t_span = {0.0, 1.0};
    const Trajectory traj = sample_on_grid(integrate_adaptive(m, x0, cfg), 1e-3);

    double vr_max_seen = -1e9;
    for (Eigen::Index k = 0; k < traj.states.rows(); ++k) {
        const double vr = traj.states(k, sm::kVr);
        const double psv = traj.states(k, sm::kPsv);
        CHECK(vr >= p.V_R_min);
        CHECK(vr <= p.V_R_max);
        CHECK(psv >= 0.0);
        CHECK(psv <= p.P_SV_max);
        vr_max_seen = std::max(vr_max_seen, vr);
    }
    // The regulator actually reaches its ceiling on this trajectory, so the
    // bound checks above are not vacuous.
    CHECK(vr_max_seen == p.V_R_max);
}

TEST_CASE("the solver reuses the last stage across accepted steps") {
    SolveConfig cfg;
    cfg.rtol = 1e-6;
    cfg.atol = 1e-9;
    cfg.t_span = {0.0, 5.0};
    const DenseSolution sol = integrate_adaptive(decay_model(), Vec::Ones(1), cfg);
    const std::size_t steps = sol.times.size() - 1;
    // Six fresh evaluations per attempted step plus the startup costs; a
    // non-FSAL scheme would need at least seven per step.
    CHECK(sol.rhs_evaluations <= 6 * steps + 30);
    CHECK(sol.rhs_evaluations >= 6 * steps);
}

TEST_CASE("max_step caps every accepted step") {
    SolveConfig cfg;
    cfg.rtol = 1e-3;
    cfg.atol = 1e-6;
    cfg.max_step = 0.125;
    cfg.t_span = {0.0, 3.0};
    const DenseSolution sol = integrate_adaptive(decay_model(), Vec::Ones(1), cfg);
    for (std::size_t i = 1; i < sol.times.size(); ++i) {
        CHECK(sol.times[i] - sol.times[i - 1] <= 0.125 * (1.0 + 1e-12));
    }
}

TEST_CASE("a blocking singularity underflows the step size") {
    SolveConfig cfg;
    cfg.t_span = {0.0, 1.0};
    CHECK_THROWS_AS(integrate_adaptive(spike_model(), Vec::Zero(1), cfg), StepSizeUnderflow);
}

TEST_CASE("a non-finite state aborts the solve") {
    ComponentModel m;
    m.state_dim = 1;
    m.state_names = {"x_1"};
    m.rhs = [](double t, const Vec&) {
        Vec dx(1);
        dx(0) = t < 0.3 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
        return dx;
    };
    m.rhs_jacobian = [](double, const Vec&) { return Mat::Zero(1, 1); };
    SolveConfig cfg;
    cfg.t_span = {0.0, 1.0};
    CHECK_THROWS_AS(integrate_adaptive(m, Vec::Zero(1), cfg), NonFiniteState);
}

TEST_CASE("invalid solves are rejected up front") {
    SolveConfig cfg;
    cfg.t_span = {1.0, 1.0};
    CHECK_THROWS_AS(integrate_adaptive(decay_model(), Vec::Ones(1), cfg), ConfigError);

    SolveConfig bad_tol;
    bad_tol.rtol = 0.0;
    CHECK_THROWS_AS(integrate_adaptive(decay_model(), Vec::Ones(1), bad_tol), ConfigError);

    SolveConfig ok;
    CHECK_THROWS_AS(integrate_adaptive(decay_model(), Vec::Ones(2), ok), DimensionMismatch);

    Vec nan_x0 = Vec::Ones(1);
    nan_x0(0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(integrate_adaptive(decay_model(), nan_x0, ok), NonFiniteState);

    const DenseSolution sol = integrate_adaptive(decay_model(), Vec::Ones(1), ok);
    CHECK_THROWS_AS(sample_on_grid(sol, 0.0), ConfigError);
    CHECK_THROWS_AS(integrate_fixed_rk4(decay_model(), Vec::Ones(1), {0.0, 1.0}, 0.0), ConfigError);
}

TEST_CASE("fixed-step rk4 fills the requested grid") {
    const Trajectory traj = integrate_fixed_rk4(decay_model(), Vec::Ones(1), {0.0, 1.0}, 0.25);
    REQUIRE(traj.times.size() == 5);
    CHECK(traj.times(0) == 0.0);
    CHECK(traj.times(4) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(traj.states(4, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-4));
}
