#pragma once

#include "invsig/curve.hpp"
#include "invsig/invariants.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace invsig {

/// Layer layout of one Siamese arm. Defaults give three stages of
/// (conv, ReLU, conv, ReLU) with a channel max after the first two stages and a
/// pointwise linear head after the third.
struct Architecture {
    std::size_t stages = 3;
    std::size_t convs_per_stage = 2;
    std::size_t filters = 15;
    std::size_t width = 5;
    std::vector<bool> stage_has_channel_max{true, true, false};
    std::size_t input_channels = 2;
    std::size_t output_channels = 1;

    void validate() const;
    std::size_t conv_count() const { return stages * convs_per_stage; }
    std::size_t conv_input_channels(std::size_t layer) const;
    std::size_t head_input_channels() const;
    // Index distance over which one input point can influence an output point.
    std::size_t receptive_radius() const { return conv_count() * (width / 2); }

    friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct ConvLayer {
    std::size_t out_channels = 0;
    std::size_t in_channels = 0;
    std::size_t width = 0;
    std::vector<double> weight;  // [out][in][width], row-major
    std::vector<double> bias;    // [out]

    double& w(std::size_t f, std::size_t c, std::size_t k) {
        return weight[(f * in_channels + c) * width + k];
    }
    double w(std::size_t f, std::size_t c, std::size_t k) const {
        return weight[(f * in_channels + c) * width + k];
    }

    friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

// Every trainable value of one arm. Also used for gradients and Adagrad
// accumulators, which share the parameter shapes.
struct Parameters {
    std::vector<ConvLayer> convs;
    std::vector<double> linear_weight;
    double linear_bias = 0.0;

    static Parameters zeros_like(const Parameters& other);

    // Mutable views over every parameter block in declaration order.
    std::vector<std::span<double>> blocks();
    std::vector<std::span<const double>> blocks() const;
    std::size_t count() const;

    Parameters& operator+=(const Parameters& other);
    Parameters& operator*=(double factor);

    friend bool operator==(const Parameters&, const Parameters&) = default;
};

struct Model {
    Architecture arch;
    Parameters params;

    friend bool operator==(const Model&, const Model&) = default;
};

// Fan-in uniform weights U[-b, b], b = sqrt(1 / (in_channels * width)); zero biases.
Model init_model(const Architecture& arch, std::uint64_t seed);

enum class Padding { Wrap, Reflect };

inline Padding padding_for(const PlanarCurve& curve) {
    return curve.closed() ? Padding::Wrap : Padding::Reflect;
}

// Channel-major activations [channels x length].
struct Tensor {
    std::size_t channels = 0;
    std::size_t length = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::size_t c, std::size_t n, double fill = 0.0) : channels(c), length(n), data(c * n, fill) {}

    std::span<double> channel(std::size_t c) { return {data.data() + c * length, length}; }
    std::span<const double> channel(std::size_t c) const {
        return {data.data() + c * length, length};
    }
    double& at(std::size_t c, std::size_t i) { return data[c * length + i]; }
    double at(std::size_t c, std::size_t i) const { return data[c * length + i]; }
};

Tensor curve_to_tensor(const PlanarCurve& curve);

// Same-length cross-correlation:
// out[f][i] = bias[f] + sum_{c,k} w[f][c][k] * in_padded[c][i + k - (W-1)/2].
Tensor conv1d(const Tensor& input, const ConvLayer& layer, Padding padding);

struct ChannelMax {
    Tensor values;                    // [1 x N]
    std::vector<std::uint32_t> argmax;  // winning channel per point, lowest index on ties
};

ChannelMax channel_max(const Tensor& input);

// Intermediates retained by forward() for backpropagation.
struct ForwardTrace {
    Padding padding = Padding::Wrap;
    std::vector<Tensor> conv_inputs;   // per conv layer
    std::vector<Tensor> conv_outputs;  // pre-activation, per conv layer
    std::vector<std::vector<std::uint32_t>> argmax;  // per stage, empty when no max unit
    Tensor head_input;
};

std::vector<double> forward_values(const Model& model, const PlanarCurve& curve,
                                   ForwardTrace* trace = nullptr);
Signature forward(const Model& model, const PlanarCurve& curve);

// Gradients of sum_i output_grad[i] * S(curve)[i] with respect to every parameter.
Parameters backward(const Model& model, const ForwardTrace& trace,
                    std::span<const double> output_grad);
Parameters backward(const Model& model, const PlanarCurve& curve,
                    std::span<const double> output_grad);

struct OptimizerState {
    Parameters accumulators;
    double learning_rate = 5e-4;
    double epsilon = 1e-8;

    static OptimizerState for_model(const Model& model, double learning_rate = 5e-4,
                                    double epsilon = 1e-8);
};

// acc += g^2; theta -= lr * g / (sqrt(acc) + eps). Throws on non-finite gradients
// before touching either the model or the state.
void adagrad_step(Model& model, const Parameters& grads, OptimizerState& state);

inline constexpr int kModelFormatVersion = 1;

std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace invsig
