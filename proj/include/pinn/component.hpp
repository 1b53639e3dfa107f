#pragma once

#include "pinn/dual.hpp"
#include "pinn/errors.hpp"
#include "pinn/types.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace pinn {

// Fixed state ordering of the 9th-order synchronous machine model:
// [delta, omega, e_q_prime, e_d_prime, e_fd, r_f, v_r, p_m, p_sv].
namespace sm {
inline constexpr int kDelta = 0;   // rotor angle (rad)
inline constexpr int kOmega = 1;   // rotor speed deviation (rad/s)
inline constexpr int kEqp = 2;     // q-axis transient EMF (pu)
inline constexpr int kEdp = 3;     // d-axis transient EMF (pu)
inline constexpr int kEfd = 4;     // field voltage (pu)
inline constexpr int kRf = 5;      // AVR rate feedback (pu)
inline constexpr int kVr = 6;      // regulator output (pu)
inline constexpr int kPm = 7;      // mechanical power (pu)
inline constexpr int kPsv = 8;     // servo valve power (pu)
inline constexpr int kStateDim = 9;

[[nodiscard]] const std::vector<std::string>& state_names();
}  // namespace sm

using SmState = Eigen::Matrix<double, sm::kStateDim, 1>;

enum class VqSignConvention {
    minus_xep,  // v_q = R_e i_q - X_ep i_d + V_s cos(delta - theta_vs)
    plus_xep,   // v_q = R_e i_q + X_ep i_d + V_s cos(delta - theta_vs)
};

// Machine, AVR and governor parameters in per-unit on the machine base.
// Defaults are the bundled reference machine connected to an infinite bus.
struct SmParams {
    double D = 2.0;             // damping
    double H = 5.06;            // inertia constant (s)
    double R_s = 0.0;           // stator resistance
    double T_d0_prime = 4.75;   // d-axis transient time constant (s)
    double T_q0_prime = 1.6;    // q-axis transient time constant (s)
    double X_d = 1.25;
    double X_d_prime = 0.232;
    double X_q = 1.22;
    double X_q_prime = 0.715;
    double X_ep = 0.1;          // line reactance to the infinite bus
    double R_e = 0.0;           // line resistance
    double Omega_B = 314.159;   // base angular frequency (rad/s)
    double V_s = 1.0;           // infinite-bus voltage
    double theta_vs = 0.0;      // infinite-bus angle (rad)
    double K_A = 20.0;          // regulator gain
    double T_A = 0.2;           // regulator time constant (s)
    double K_F = 0.063;         // rate feedback gain
    double T_F = 0.35;          // rate feedback time constant (s)
    double K_E = 1.0;           // exciter gain
    double T_E = 0.314;         // exciter time constant (s)
    double V_ref = 1.095;       // voltage reference
    double V_R_min = 0.8;
    double V_R_max = 8.0;
    double P_c = 0.7;           // governor power command
    double R_D = 0.05;          // droop
    double T_CH = 0.4;          // steam chest time constant (s)
    double T_SV = 0.2;          // servo valve time constant (s)
    double P_SV_max = 1.0;
    double sat_a = 0.098;       // exciter saturation coefficients
    double sat_b = 0.55;
    VqSignConvention vq_sign_convention = VqSignConvention::minus_xep;
};

template <class T>
struct AlgebraicOutputsT {
    T i_d, i_q;   // dq stator currents (pu)
    T v_d, v_q;   // dq terminal voltages (pu)
    T v_t;        // terminal voltage magnitude (pu)
    T s_e;        // exciter saturation value
};
using AlgebraicOutputs = AlgebraicOutputsT<double>;

// Solves the 2x2 stator network system
//   [[R_s+R_e, -(X_q+X_ep)], [X_d'+X_ep, R_s+R_e]] [i_d; i_q]
//     = [V_s sin(delta-theta_vs); V_s cos(delta-theta_vs)]
// by Cramer's rule. Throws SingularNetworkMatrix if the determinant
// magnitude is at or below 1e-12.
template <class T>
[[nodiscard]] std::pair<T, T> solve_network(const T& delta, const SmParams& p) {
    using std::sin, std::cos;
    const double a = p.R_s + p.R_e;
    const double b = -(p.X_q + p.X_ep);
    const double c = p.X_d_prime + p.X_ep;
    const double det = a * a - b * c;
    if (!(std::abs(det) > 1e-12)) {
        throw SingularNetworkMatrix("stator network matrix is singular (|det| <= 1e-12)");
    }
    const T r1 = p.V_s * sin(delta - p.theta_vs);
    const T r2 = p.V_s * cos(delta - p.theta_vs);
    return {(a * r1 - b * r2) / det, (a * r2 - c * r1) / det};
}

template <class T>
[[nodiscard]] AlgebraicOutputsT<T> algebraic_outputs(const T& delta, const T& e_fd, const T& i_d,
                                                     const T& i_q, const SmParams& p) {
    using std::sin, std::cos, std::exp, std::sqrt;
    AlgebraicOutputsT<T> out{};
    out.i_d = i_d;
    out.i_q = i_q;
    out.v_d = p.R_e * i_d - p.X_ep * i_q + p.V_s * sin(delta - p.theta_vs);
    const T x_ep_term = p.X_ep * i_d;
    out.v_q = p.R_e * i_q + p.V_s * cos(delta - p.theta_vs) +
              (p.vq_sign_convention == VqSignConvention::paper ? -x_ep_term : x_ep_term);
    out.v_t = sqrt(out.v_d * out.v_d + out.v_q * out.v_q);
    out.s_e = p.sat_a * exp(p.sat_b * e_fd);
    return out;
}

// Unclamped right-hand side of the 9th-order machine + AVR + governor ODE.
// Templated on the scalar so dual-number instantiation yields exact
// state Jacobians.
template <class T>
[[nodiscard]] Eigen::Matrix<T, sm::kStateDim, 1> sm_rhs(const Eigen::Matrix<T, sm::kStateDim, 1>& x,
                                                        const SmParams& p) {
    const T& delta = x[sm::kDelta];
    const T& omega = x[sm::kOmega];
    const T& e_q_prime = x[sm::kEqp];
    const T& e_d_prime = x[sm::kEdp];
    const T& e_fd = x[sm::kEfd];
    const T& r_f = x[sm::kRf];
    const T& v_r = x[sm::kVr];
    const T& p_m = x[sm::kPm];
    const T& p_sv = x[sm::kPsv];

    const auto [i_d, i_q] = solve_network(delta, p);
    const auto alg = algebraic_outputs(delta, e_fd, i_d, i_q, p);

    Eigen::Matrix<T, sm::kStateDim, 1> dx;
    dx[sm::kDelta] = omega;
    dx[sm::kOmega] = (p.Omega_B / (2.0 * p.H)) *
                     (p_m - e_d_prime * i_d - e_q_prime * i_q -
                      (p.X_q_prime - p.X_d_prime) * (i_d * i_q) - p.D * omega);
    dx[sm::kEqp] = (1.0 / p.T_d0_prime) * (-e_q_prime - (p.X_d - p.X_d_prime) * i_d + e_fd);
    dx[sm::kEdp] = (1.0 / p.T_q0_prime) * (-e_d_prime + (p.X_q - p.X_q_prime) * i_q);
    dx[sm::kEfd] = (1.0 / p.T_E) * (-(p.K_E + alg.s_e) * e_fd + v_r);
    dx[sm::kRf] = (1.0 / p.T_F) * (-r_f + (p.K_F / p.T_F) * e_fd);
    dx[sm::kVr] = (1.0 / p.T_A) *
                  (p.K_A * r_f - (p.K_A * p.K_F / p.T_F) * e_fd + p.K_A * (p.V_ref - alg.v_t) - v_r);
    dx[sm::kPm] = (1.0 / p.T_CH) * (-p_m + p_sv);
    dx[sm::kPsv] = (1.0 / p.T_SV) * (-p_sv + p.P_c - (1.0 / p.R_D) * (omega / p.Omega_B));
    return dx;
}

// Checked double-precision entry point (the ODE is autonomous; t is part of
// the common rhs signature).
[[nodiscard]] Vec eval_rhs(double t, const Vec& state, const SmParams& params);

// Exact Jacobian d(rhs)/d(state), computed with forward-mode duals.
[[nodiscard]] Mat sm_rhs_jacobian(const Vec& state, const SmParams& params);

// Inclusive per-state clamp with anti-windup.
struct StateLimit {
    int index;
    double lo;
    double hi;
};

// Clamps limited states into range; where a state sits at a bound with its
// derivative pointing outward, that derivative component is zeroed.
[[nodiscard]] std::pair<Vec, Vec> apply_limits(const Vec& state, const Vec& derivative,
                                               const std::vector<StateLimit>& limits);
[[nodiscard]] std::pair<Vec, Vec> apply_limits(const Vec& state, const Vec& derivative,
                                               const SmParams& params);

[[nodiscard]] std::vector<StateLimit> sm_limits(const SmParams& params);

// dx/dt = A x; analytic oracle model for solver tests.
[[nodiscard]] Vec linear_test_rhs(double t, const Vec& state, const Mat& matrix_A);

// A dynamic component: dimension, names, right-hand side, exact state
// Jacobian (used by the collocation-residual gradient) and state limits.
// All callables are pure.
struct ComponentModel {
    int state_dim = 0;
    std::vector<std::string> state_names;
    std::function<Vec(double, const Vec&)> rhs;
    std::function<Mat(double, const Vec&)> rhs_jacobian;
    std::vector<StateLimit> limits;
    std::variant<std::monostate, SmParams, Mat> params;
};

[[nodiscard]] ComponentModel make_sm9_model(const SmParams& params);
[[nodiscard]] ComponentModel make_linear_model(const Mat& matrix_A);

}  // namespace pinn
