#include "pinn/mlp.hpp"

#include "pinn/errors.hpp"
#include "pinn/io.hpp"
#include "pinn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

namespace pinn {

namespace {

constexpr char kModelMagic[4] = {'P', 'N', 'N', 'M'};
constexpr std::uint8_t kModelVersion = 1;

// W * A column by column; bitwise independent of how the batch is grouped.
void product_per_column(Mat& out, const Mat& w, const Mat& a) {
    out.resize(w.rows(), a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.col(j).noalias() = w * a.col(j);
}

void add_bias(Mat& m, const Vec& b) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m.col(j) += b;
}

void tanh_inplace(Mat& m) {
    double* data = m.data();
    const auto size = m.size();
    for (Eigen::Index i = 0; i < size; ++i) data[i] = std::tanh(data[i]);
}

void check_input(const MlpModel& model, const Mat& inputs, const char* where) {
    if (inputs.rows() != model.input_dim()) {
        throw DimensionMismatch(std::string(where) + ": input has " +
                                std::to_string(inputs.rows()) + " rows, model expects " +
                                std::to_string(model.input_dim()));
    }
    if (!inputs.allFinite()) {
        throw NonFiniteInput(std::string(where) + ": input contains NaN or Inf");
    }
}

[[nodiscard]] Mat normalize(const MlpModel& model, const Mat& inputs) {
    Mat z = model.input_scale.asDiagonal() * inputs;
    add_bias(z, model.input_shift);
    return z;
}

}  // namespace

std::size_t MlpModel::parameter_count() const {
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        count += static_cast<std::size_t>(layer_dims[l + 1]) *
                 static_cast<std::size_t>(layer_dims[l] + 1);
    }
    return count;
}

ParamGrads::ParamGrads(const MlpModel& model) {
    weights.reserve(model.num_layers());
    biases.reserve(model.num_layers());
    for (int l = 0; l < model.num_layers(); ++l) {
        weights.emplace_back(Mat::Zero(model.weights[l].rows(), model.weights[l].cols()));
        biases.emplace_back(Vec::Zero(model.biases[l].size()));
    }
}

ParamGrads& ParamGrads::operator+=(const ParamGrads& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        weights[l] += other.weights[l];
        biases[l] += other.biases[l];
    }
    return *this;
}

ParamGrads& ParamGrads::operator*=(double factor) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        weights[l] *= factor;
        biases[l] *= factor;
    }
    return *this;
}

MlpModel init_mlp(const std::vector<int>& layer_dims, std::uint64_t seed) {
    if (layer_dims.size() < 2) throw InvalidDims("init_mlp: need at least input and output layers");
    for (const int d : layer_dims) {
        if (d < 1) throw InvalidDims("init_mlp: every layer needs at least one unit");
    }

    MlpModel model;
    model.layer_dims = layer_dims;
    model.seed = seed;
    model.input_scale = Vec::Ones(layer_dims.front());
    model.input_shift = Vec::Zero(layer_dims.front());

    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const int fan_in = layer_dims[l];
        const int fan_out = layer_dims[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        rng::CounterRng layer_rng(seed, l);
        Mat w(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i) {
            for (int j = 0; j < fan_in; ++j) w(i, j) = layer_rng.uniform(-bound, bound);
        }
        model.weights.push_back(std::move(w));
        model.biases.emplace_back(Vec::Zero(fan_out));
    }
    return model;
}

void set_input_norm(MlpModel& model, const InputDomain& domain, double horizon) {
    if (domain.dim() + 1 != model.input_dim()) {
        throw DimensionMismatch("set_input_norm: domain dimension + 1 must equal the input width");
    }
    if (!(horizon > 0.0)) throw InvalidDomain("set_input_norm: horizon must be positive");

    for (int j = 0; j < domain.dim(); ++j) {
        const auto [lo, hi] = domain.bounds[j];
        if (domain.fixed(j)) {
            model.input_scale[j] = 0.0;
            model.input_shift[j] = 0.0;
        } else {
            model.input_scale[j] = 2.0 / (hi - lo);
            model.input_shift[j] = -(hi + lo) / (hi - lo);
        }
    }
    model.input_scale[domain.dim()] = 2.0 / horizon;
    model.input_shift[domain.dim()] = -1.0;
}

ForwardPass forward_cached(const MlpModel& model, const Mat& inputs) {
    check_input(model, inputs, "forward");
    ForwardPass pass;
    pass.input = normalize(model, inputs);
    pass.act.resize(model.num_layers());

    const Mat* prev = &pass.input;
    for (int l = 0; l < model.num_layers(); ++l) {
        Mat& a = pass.act[l];
        product_per_column(a, model.weights[l], *prev);
        add_bias(a, model.biases[l]);
        if (l + 1 < model.num_layers()) tanh_inplace(a);
        prev = &a;
    }
    return pass;
}

Mat forward(const MlpModel& model, const Mat& inputs) {
    check_input(model, inputs, "forward");
    // Streamed in column chunks so large evaluation batches do not hold every
    // layer activation at once; per-column products keep the bits identical
    // to forward_cached.
    constexpr Eigen::Index kChunk = 16384;
    Mat out(model.output_dim(), inputs.cols());
    Mat a, z;
    for (Eigen::Index start = 0; start < inputs.cols(); start += kChunk) {
        const Eigen::Index n = std::min(kChunk, inputs.cols() - start);
        a = normalize(model, inputs.middleCols(start, n));
        for (int l = 0; l < model.num_layers(); ++l) {
            product_per_column(z, model.weights[l], a);
            add_bias(z, model.biases[l]);
            if (l + 1 < model.num_layers()) tanh_inplace(z);
            a.swap(z);
        }
        out.middleCols(start, n) = a;
    }
    return out;
}

Vec forward(const MlpModel& model, const Vec& input) {
    return forward(model, Mat(input)).col(0);
}

JvpPass forward_jvp(const MlpModel& model, const DualBatch& batch) {
    check_input(model, batch.values, "forward_jvp");
    if (batch.tangents.rows() != batch.values.rows() ||
        batch.tangents.cols() != batch.values.cols()) {
        throw DimensionMismatch("forward_jvp: tangent shape does not match values");
    }

    JvpPass pass;
    pass.input = normalize(model, batch.values);
    pass.input_tangent = model.input_scale.asDiagonal() * batch.tangents;
    pass.act.resize(model.num_layers());
    pass.tan.resize(model.num_layers());
    pass.tan_pre.resize(model.num_layers());

    const Mat* prev_a = &pass.input;
    const Mat* prev_v = &pass.input_tangent;
    for (int l = 0; l < model.num_layers(); ++l) {
        Mat& a = pass.act[l];
        Mat& v = pass.tan[l];
        product_per_column(a, model.weights[l], *prev_a);
        add_bias(a, model.biases[l]);
        product_per_column(v, model.weights[l], *prev_v);
        if (l + 1 < model.num_layers()) {
            tanh_inplace(a);
            pass.tan_pre[l] = v;
            v.array() *= (1.0 - a.array().square());
        }
        prev_a = &a;
        prev_v = &v;
    }
    return pass;
}

JvpPass time_derivative_pass(const MlpModel& model, const Mat& inputs) {
    DualBatch batch;
    batch.values = inputs;
    batch.tangents = Mat::Zero(inputs.rows(), inputs.cols());
    batch.tangents.row(inputs.rows() - 1).setOnes();
    return forward_jvp(model, batch);
}

Mat time_derivative(const MlpModel& model, const Mat& inputs) {
    return time_derivative_pass(model, inputs).tan.back();
}

Vec time_derivative(const MlpModel& model, const Vec& input) {
    return time_derivative(model, Mat(input)).col(0);
}

ParamGrads grad_params(const MlpModel& model, const ForwardPass& pass, const Mat& grad_output) {
    if (grad_output.rows() != model.output_dim() || grad_output.cols() != pass.output().cols()) {
        throw DimensionMismatch("grad_params: gradient shape does not match the forward pass");
    }

    ParamGrads grads(model);
    Mat ga = grad_output;
    for (int l = model.num_layers() - 1; l >= 0; --l) {
        // Output layer is identity; hidden layers fold in tanh'.
        Mat gu = std::move(ga);
        if (l + 1 < model.num_layers()) {
            gu.array() *= (1.0 - pass.act[l].array().square());
        }
        const Mat& prev = (l == 0) ? pass.input : pass.act[l - 1];
        grads.weights[l].noalias() = gu * prev.transpose();
        grads.biases[l] = gu.rowwise().sum();
        if (l > 0) ga.noalias() = model.weights[l].transpose() * gu;
    }
    return grads;
}

ParamGrads grad_params(const MlpModel& model, const JvpPass& pass, const Mat& grad_output,
                       const Mat& grad_output_tangent) {
    if (grad_output.rows() != model.output_dim() || grad_output.cols() != pass.output().cols() ||
        grad_output_tangent.rows() != grad_output.rows() ||
        grad_output_tangent.cols() != grad_output.cols()) {
        throw DimensionMismatch("grad_params: gradient shapes do not match the forward pass");
    }

    ParamGrads grads(model);
    Mat ga = grad_output;
    Mat gv = grad_output_tangent;
    for (int l = model.num_layers() - 1; l >= 0; --l) {
        Mat gu, gvu;
        if (l + 1 < model.num_layers()) {
            // a = tanh(u), v = (1 - a^2) .* vu:
            //   dL/du  = (1 - a^2) .* (ga - 2 a .* gv .* vu)
            //   dL/dvu = (1 - a^2) .* gv
            const auto& a = pass.act[l].array();
            const auto one_minus_a2 = 1.0 - a.square();
            gu = (one_minus_a2 * (ga.array() - 2.0 * a * gv.array() * pass.tan_pre[l].array()))
                     .matrix();
            gvu = (one_minus_a2 * gv.array()).matrix();
        } else {
            gu = std::move(ga);
            gvu = std::move(gv);
        }
        const Mat& prev_a = (l == 0) ? pass.input : pass.act[l - 1];
        const Mat& prev_v = (l == 0) ? pass.input_tangent : pass.tan[l - 1];
        grads.weights[l].noalias() = gu * prev_a.transpose();
        grads.weights[l].noalias() += gvu * prev_v.transpose();
        grads.biases[l] = gu.rowwise().sum();
        if (l > 0) {
            ga.noalias() = model.weights[l].transpose() * gu;
            gv.noalias() = model.weights[l].transpose() * gvu;
        }
    }
    return grads;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
    io::Writer w;
    w.raw(kModelMagic, sizeof kModelMagic);
    w.u8(kModelVersion);
    w.u32(static_cast<std::uint32_t>(model.layer_dims.size()));
    for (const int d : model.layer_dims) w.u32(static_cast<std::uint32_t>(d));
    for (int l = 0; l < model.num_layers(); ++l) {
        const Mat& wm = model.weights[l];
        for (Eigen::Index i = 0; i < wm.rows(); ++i) {
            for (Eigen::Index j = 0; j < wm.cols(); ++j) w.f64(wm(i, j));
        }
        for (Eigen::Index i = 0; i < model.biases[l].size(); ++i) w.f64(model.biases[l][i]);
    }
    for (Eigen::Index i = 0; i < model.input_scale.size(); ++i) w.f64(model.input_scale[i]);
    for (Eigen::Index i = 0; i < model.input_shift.size(); ++i) w.f64(model.input_shift[i]);
    w.u64(model.seed);
    w.str(model.provenance);
    w.seal();
    io::write_file(path, w.buffer);
}

MlpModel load_model(const std::filesystem::path& path) {
    const std::string blob = io::read_file(path);
    io::Reader r{blob};
    r.verify_checksum();

    char magic[4];
    r.raw(magic, sizeof magic);
    if (std::memcmp(magic, kModelMagic, sizeof magic) != 0) {
        throw FormatVersionMismatch("not a model file (bad magic)");
    }
    if (const auto version = r.u8(); version != kModelVersion) {
        throw FormatVersionMismatch("unsupported model version " + std::to_string(version));
    }

    MlpModel model;
    const auto n_dims = r.u32();
    if (n_dims < 2) throw FormatVersionMismatch("model file lists fewer than two layers");
    model.layer_dims.resize(n_dims);
    for (auto& d : model.layer_dims) d = static_cast<int>(r.u32());

    for (std::size_t l = 0; l + 1 < model.layer_dims.size(); ++l) {
        Mat w(model.layer_dims[l + 1], model.layer_dims[l]);
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = r.f64();
        }
        model.weights.push_back(std::move(w));
        Vec b(model.layer_dims[l + 1]);
        for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = r.f64();
        model.biases.push_back(std::move(b));
    }
    model.input_scale = Vec(model.layer_dims.front());
    for (Eigen::Index i = 0; i < model.input_scale.size(); ++i) model.input_scale[i] = r.f64();
    model.input_shift = Vec(model.layer_dims.front());
    for (Eigen::Index i = 0; i < model.input_shift.size(); ++i) model.input_shift[i] = r.f64();
    model.seed = r.u64();
    model.provenance = r.str();
    if (r.pos != r.data.size()) {
        throw FormatVersionMismatch("model file has trailing bytes (layout mismatch)");
    }
    return model;
}

}  // namespace pinn
