#pragma once

#include "pinn/sampling.hpp"
#include "pinn/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pinn {

// Feed-forward surrogate mapping a normalized (x0, t) input to the state at
// time t. Hidden layers use tanh, the output layer is identity. Inputs pass
// through a per-coordinate affine min-max map first; fixed coordinates
// (zero-width domain) map to the constant 0.
//
// All batched entry points treat matrix COLUMNS as points, and every layer
// product walks the batch column by column, so a batched evaluation is
// bitwise identical to evaluating the points one at a time.
struct MlpModel {
    std::vector<int> layer_dims;  // e.g. [10, 64, 64, 64, 64, 9]
    std::vector<Mat> weights;     // weights[l] is layer_dims[l+1] x layer_dims[l]
    std::vector<Vec> biases;
    Vec input_scale;              // z = input_scale .* u + input_shift
    Vec input_shift;
    std::uint64_t seed = 0;
    std::string provenance;       // config hash and seeds, filled in by training

    [[nodiscard]] int input_dim() const { return layer_dims.front(); }
    [[nodiscard]] int output_dim() const { return layer_dims.back(); }
    [[nodiscard]] int num_layers() const { return static_cast<int>(weights.size()); }
    [[nodiscard]] std::size_t parameter_count() const;
};

// A batch of inputs paired with forward-mode tangent directions.
struct DualBatch {
    Mat values;    // input_dim x n
    Mat tangents;  // same shape
};

// Per-layer parameter gradients, same shapes as the model parameters.
struct ParamGrads {
    std::vector<Mat> weights;
    std::vector<Vec> biases;

    ParamGrads() = default;
    explicit ParamGrads(const MlpModel& model);
    ParamGrads& operator+=(const ParamGrads& other);
    ParamGrads& operator*=(double factor);
};

// Values remembered by a forward evaluation for the reverse pass.
struct ForwardPass {
    Mat input;               // normalized inputs
    std::vector<Mat> act;    // act[l]: outputs of layer l (post-activation)

    [[nodiscard]] const Mat& output() const { return act.back(); }
};

// Forward values plus the forward-mode tangent chain. `tan_pre[l]` keeps the
// pre-activation tangent of hidden layers; the reverse-over-forward pass
// needs it.
struct JvpPass {
    Mat input;
    Mat input_tangent;
    std::vector<Mat> act;
    std::vector<Mat> tan;      // tan[l]: post-activation tangents
    std::vector<Mat> tan_pre;  // hidden layers only (empty matrix for the output layer)

    [[nodiscard]] const Mat& output() const { return act.back(); }
    [[nodiscard]] const Mat& output_tangent() const { return tan.back(); }
};

// Xavier-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases, identity
// input normalization; deterministic per seed.
[[nodiscard]] MlpModel init_mlp(const std::vector<int>& layer_dims, std::uint64_t seed);

// Installs the min-max input map for a state domain plus the [0, horizon]
// time coordinate.
void set_input_norm(MlpModel& model, const InputDomain& domain, double horizon);

[[nodiscard]] Vec forward(const MlpModel& model, const Vec& input);
[[nodiscard]] Mat forward(const MlpModel& model, const Mat& inputs);
[[nodiscard]] ForwardPass forward_cached(const MlpModel& model, const Mat& inputs);

// Forward-mode sweep carrying a tangent direction per point.
[[nodiscard]] JvpPass forward_jvp(const MlpModel& model, const DualBatch& batch);

// d(x_hat)/dt in physical seconds: a forward-mode sweep along the time
// coordinate, including the normalization chain factor.
[[nodiscard]] Vec time_derivative(const MlpModel& model, const Vec& input);
[[nodiscard]] Mat time_derivative(const MlpModel& model, const Mat& inputs);

// Same forward-mode sweep, keeping the whole pass for gradient reuse.
[[nodiscard]] JvpPass time_derivative_pass(const MlpModel& model, const Mat& inputs);

// Reverse-mode parameter gradient of a scalar loss, given d(loss)/d(output).
[[nodiscard]] ParamGrads grad_params(const MlpModel& model, const ForwardPass& pass,
                                     const Mat& grad_output);

// Reverse-over-forward: parameter gradient of a scalar loss that depends on
// both the outputs and their forward-mode tangents.
[[nodiscard]] ParamGrads grad_params(const MlpModel& model, const JvpPass& pass,
                                     const Mat& grad_output, const Mat& grad_output_tangent);

// Lossless binary round-trip including dims, parameters, normalization and
// provenance.
void save_model(const MlpModel& model, const std::filesystem::path& path);
[[nodiscard]] MlpModel load_model(const std::filesystem::path& path);

}  // namespace pinn
