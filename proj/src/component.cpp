#include "pinn/component.hpp"

namespace pinn {

namespace sm {

const std::vector<std::string>& state_names() {
    static const std::vector<std::string> names = {"delta", "omega",  "e_q_prime", "e_d_prime", "e_fd",
                                                   "r_f",   "v_r",    "p_m",       "p_sv"};
    return names;
}

}  // namespace sm

Vec eval_rhs(double /*t*/, const Vec& state, const SmParams& params) {
    if (state.size() != sm::kStateDim) {
        throw DimensionMismatch("eval_rhs: state has " + std::to_string(state.size()) +
                                " entries, expected 9");
    }
    if (!state.allFinite()) throw NonFiniteState("eval_rhs: state contains NaN or Inf");
    const SmState x = state;
    return sm_rhs<double>(x, params);
}

Mat sm_rhs_jacobian(const Vec& state, const SmParams& params) {
    if (state.size() != sm::kStateDim) {
        throw DimensionMismatch("sm_rhs_jacobian: state has " + std::to_string(state.size()) +
                                " entries, expected 9");
    }
    using D9 = Dual<sm::kStateDim>;
    Eigen::Matrix<D9, sm::kStateDim, 1> x;
    for (int i = 0; i < sm::kStateDim; ++i) x[i] = D9::variable(state[i], i);
    const auto dx = sm_rhs<D9>(x, params);
    Mat jac(sm::kStateDim, sm::kStateDim);
    for (int i = 0; i < sm::kStateDim; ++i) jac.row(i) = dx[i].d;
    return jac;
}

std::pair<Vec, Vec> apply_limits(const Vec& state, const Vec& derivative,
                                 const std::vector<StateLimit>& limits) {
    Vec x = state;
    Vec dx = derivative;
    for (const auto& lim : limits) {
        double& xi = x[lim.index];
        if (xi < lim.lo) xi = lim.lo;
        if (xi > lim.hi) xi = lim.hi;
        double& di = dx[lim.index];
        if ((xi <= lim.lo && di < 0.0) || (xi >= lim.hi && di > 0.0)) di = 0.0;
    }
    return {std::move(x), std::move(dx)};
}

std::pair<Vec, Vec> apply_limits(const Vec& state, const Vec& derivative, const SmParams& params) {
    return apply_limits(state, derivative, sm_limits(params));
}

std::vector<StateLimit> sm_limits(const SmParams& params) {
    return {{sm::kVr, params.V_R_min, params.V_R_max}, {sm::kPsv, 0.0, params.P_SV_max}};
}

Vec linear_test_rhs(double /*t*/, const Vec& state, const Mat& matrix_A) {
    if (matrix_A.rows() != matrix_A.cols() || matrix_A.cols() != state.size()) {
        throw DimensionMismatch("linear_test_rhs: matrix is " + std::to_string(matrix_A.rows()) +
                                "x" + std::to_string(matrix_A.cols()) + " but state has " +
                                std::to_string(state.size()) + " entries");
    }
    return matrix_A * state;
}

ComponentModel make_sm9_model(const SmParams& params) {
    ComponentModel model;
    model.state_dim = sm::kStateDim;
    model.state_names = sm::state_names();
    model.rhs = [params](double t, const Vec& x) { return eval_rhs(t, x, params); };
    model.rhs_jacobian = [params](double, const Vec& x) { return sm_rhs_jacobian(x, params); };
    model.limits = sm_limits(params);
    model.params = params;
    return model;
}

ComponentModel make_linear_model(const Mat& matrix_A) {
    if (matrix_A.rows() != matrix_A.cols()) {
        throw DimensionMismatch("make_linear_model: matrix must be square");
    }
    ComponentModel model;
    model.state_dim = static_cast<int>(matrix_A.rows());
    model.state_names.reserve(model.state_dim);
    for (int i = 0; i < model.state_dim; ++i) model.state_names.push_back("x_" + std::to_string(i + 1));
    model.rhs = [matrix_A](double t, const Vec& x) { return linear_test_rhs(t, x, matrix_A); };
    model.rhs_jacobian = [matrix_A](double, const Vec&) { return matrix_A; };
    model.params = matrix_A;
    return model;
}

}  // namespace pinn
