#include "invsig/net.hpp"

#include "invsig/error.hpp"
#include "invsig/random.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <type_traits>
#include <sstream>

namespace invsig {

void Architecture::validate() const {
    require(stages >= 1, ErrorCode::InvalidArgument, "architecture needs at least one stage");
    require(convs_per_stage >= 1, ErrorCode::InvalidArgument,
            "architecture needs at least one convolution per stage");
    require(filters >= 1, ErrorCode::InvalidArgument, "architecture needs at least one filter");
    require(width % 2 == 1, ErrorCode::InvalidArgument, "convolution width must be odd");
    require(stage_has_channel_max.size() == stages, ErrorCode::InvalidArgument,
            "stage_has_channel_max must have one entry per stage");
    require(input_channels >= 1, ErrorCode::InvalidArgument, "input_channels must be positive");
    require(output_channels == 1, ErrorCode::InvalidArgument,
            "only single-channel signatures are supported");
}

std::size_t Architecture::conv_input_channels(std::size_t layer) const {
    const std::size_t stage = layer / convs_per_stage;
    if (layer % convs_per_stage != 0) return filters;
    if (stage == 0) return input_channels;
    return stage_has_channel_max[stage - 1] ? 1 : filters;
}

std::size_t Architecture::head_input_channels() const {
    return stage_has_channel_max.back() ? 1 : filters;
}

Parameters Parameters::zeros_like(const Parameters& other) {
    Parameters p = other;
    for (auto block : p.blocks()) std::fill(block.begin(), block.end(), 0.0);
    return p;
}

std::vector<std::span<double>> Parameters::blocks() {
    std::vector<std::span<double>> out;
    for (auto& layer : convs) {
        out.emplace_back(layer.weight);
        out.emplace_back(layer.bias);
    }
    out.emplace_back(linear_weight);
    out.emplace_back(&linear_bias, 1);
    return out;
}

std::vector<std::span<const double>> Parameters::blocks() const {
    std::vector<std::span<const double>> out;
    for (const auto& layer : convs) {
        out.emplace_back(layer.weight);
        out.emplace_back(layer.bias);
    }
    out.emplace_back(linear_weight);
    out.emplace_back(&linear_bias, 1);
    return out;
}

std::size_t Parameters::count() const {
    std::size_t n = 0;
    for (auto block : blocks()) n += block.size();
    return n;
}

namespace {

void require_same_shape(const Parameters& a, const Parameters& b) {
    const auto ba = a.blocks();
    const auto bb = b.blocks();
    require(ba.size() == bb.size(), ErrorCode::ShapeMismatch, "parameter block count mismatch");
    for (std::size_t i = 0; i < ba.size(); ++i) {
        require(ba[i].size() == bb[i].size(), ErrorCode::ShapeMismatch,
                "parameter block " + std::to_string(i) + " size mismatch");
    }
}

}  // namespace

Parameters& Parameters::operator+=(const Parameters& other) {
    require_same_shape(*this, other);
    auto dst = blocks();
    const auto src = other.blocks();
    for (std::size_t b = 0; b < dst.size(); ++b) {
        for (std::size_t i = 0; i < dst[b].size(); ++i) dst[b][i] += src[b][i];
    }
    return *this;
}

Parameters& Parameters::operator*=(double factor) {
    for (auto block : blocks()) {
        for (double& v : block) v *= factor;
    }
    return *this;
}

Model init_model(const Architecture& arch, std::uint64_t seed) {
    arch.validate();
    Rng rng = make_rng(seed);
    Model model{arch, {}};
    for (std::size_t l = 0; l < arch.conv_count(); ++l) {
        ConvLayer layer;
        layer.out_channels = arch.filters;
        layer.in_channels = arch.conv_input_channels(l);
        layer.width = arch.width;
        const double bound = std::sqrt(1.0 / static_cast<double>(layer.in_channels * layer.width));
        std::uniform_real_distribution<double> dist(-bound, bound);
        layer.weight.resize(layer.out_channels * layer.in_channels * layer.width);
        for (double& w : layer.weight) w = dist(rng);
        layer.bias.assign(layer.out_channels, 0.0);
        model.params.convs.push_back(std::move(layer));
    }
    const std::size_t head_in = arch.head_input_channels();
    std::uniform_real_distribution<double> dist(-std::sqrt(1.0 / static_cast<double>(head_in)),
                                                std::sqrt(1.0 / static_cast<double>(head_in)));
    model.params.linear_weight.resize(head_in);
    for (double& w : model.params.linear_weight) w = dist(rng);
    model.params.linear_bias = 0.0;
    return model;
}

Tensor curve_to_tensor(const PlanarCurve& curve) {
    Tensor t(2, curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        t.at(0, i) = curve[i].x;
        t.at(1, i) = curve[i].y;
    }
    return t;
}

namespace {

// Source index of every padded position for a same-length correlation.
std::vector<std::size_t> padding_map(std::size_t n, std::size_t half, Padding padding) {
    std::vector<std::size_t> src(n + 2 * half);
    const auto ln = static_cast<long>(n);
    for (std::size_t p = 0; p < src.size(); ++p) {
        long s = static_cast<long>(p) - static_cast<long>(half);
        if (padding == Padding::Wrap) {
            s = ((s % ln) + ln) % ln;
        } else if (s < 0) {
            s = -s;
        } else if (s >= ln) {
            s = 2 * (ln - 1) - s;
        }
        src[p] = static_cast<std::size_t>(s);
    }
    return src;
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

using StridedMap = Eigen::Map<const RowMatrix, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;
using MutableStridedMap = Eigen::Map<RowMatrix, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;

// C x (N + W - 1) padded copy of the input.
RowMatrix padded(const Tensor& input, std::span<const std::size_t> map) {
    RowMatrix buf(input.channels, map.size());
    for (std::size_t c = 0; c < input.channels; ++c) {
        const auto row = input.channel(c);
        double* dst = buf.data() + c * map.size();
        for (std::size_t p = 0; p < map.size(); ++p) dst[p] = row[map[p]];
    }
    return buf;
}

// The F x C slice of tap k from a [F][C][W] weight array.
template <typename Ptr>
auto tap(Ptr weights, const ConvLayer& layer, std::size_t k) {
    using MapType = std::conditional_t<std::is_const_v<std::remove_pointer_t<Ptr>>, StridedMap,
                                       MutableStridedMap>;
    return MapType(weights + k, static_cast<Eigen::Index>(layer.out_channels),
                   static_cast<Eigen::Index>(layer.in_channels),
                   Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(
                       static_cast<Eigen::Index>(layer.in_channels * layer.width),
                       static_cast<Eigen::Index>(layer.width)));
}

void check_conv_shapes(const Tensor& input, const ConvLayer& layer) {
    require(layer.width % 2 == 1, ErrorCode::ShapeMismatch, "convolution width must be odd");
    require(input.channels == layer.in_channels, ErrorCode::ShapeMismatch,
            "conv1d expects " + std::to_string(layer.in_channels) + " input channels, got " +
                std::to_string(input.channels));
    require(layer.weight.size() == layer.out_channels * layer.in_channels * layer.width &&
                layer.bias.size() == layer.out_channels,
            ErrorCode::ShapeMismatch, "conv1d weight/bias shape mismatch");
    require(input.length > layer.width, ErrorCode::ShapeMismatch,
            "conv1d input of length " + std::to_string(input.length) +
                " must exceed the kernel width " + std::to_string(layer.width));
}

}  // namespace

Tensor conv1d(const Tensor& input, const ConvLayer& layer, Padding padding) {
    check_conv_shapes(input, layer);
    const std::size_t n = input.length;
    const auto map = padding_map(n, layer.width / 2, padding);
    const RowMatrix buf = padded(input, map);
    const auto len = static_cast<Eigen::Index>(n);

    RowMatrix result(static_cast<Eigen::Index>(layer.out_channels), len);
    result.colwise() = Eigen::Map<const Eigen::VectorXd>(
        layer.bias.data(), static_cast<Eigen::Index>(layer.out_channels));
    for (std::size_t k = 0; k < layer.width; ++k) {
        result.noalias() += tap(layer.weight.data(), layer, k) *
                            buf.middleCols(static_cast<Eigen::Index>(k), len);
    }
    Tensor out(layer.out_channels, n);
    RowMap(out.data.data(), result.rows(), result.cols()) = result;
    return out;
}

ChannelMax channel_max(const Tensor& input) {
    require(input.channels >= 1, ErrorCode::ShapeMismatch, "channel_max needs at least one channel");
    ChannelMax result{Tensor(1, input.length), std::vector<std::uint32_t>(input.length, 0)};
    for (std::size_t i = 0; i < input.length; ++i) {
        double best = input.at(0, i);
        std::uint32_t arg = 0;
        for (std::size_t c = 1; c < input.channels; ++c) {
            if (input.at(c, i) > best) {
                best = input.at(c, i);
                arg = static_cast<std::uint32_t>(c);
            }
        }
        result.values.at(0, i) = best;
        result.argmax[i] = arg;
    }
    return result;
}

namespace {

void check_model(const Model& model) {
    const auto& arch = model.arch;
    arch.validate();
    require(model.params.convs.size() == arch.conv_count(), ErrorCode::ShapeMismatch,
            "model has " + std::to_string(model.params.convs.size()) + " conv layers, expected " +
                std::to_string(arch.conv_count()));
    for (std::size_t l = 0; l < arch.conv_count(); ++l) {
        const auto& layer = model.params.convs[l];
        require(layer.out_channels == arch.filters && layer.width == arch.width &&
                    layer.in_channels == arch.conv_input_channels(l),
                ErrorCode::ShapeMismatch, "conv layer " + std::to_string(l) + " shape mismatch");
    }
    require(model.params.linear_weight.size() == arch.head_input_channels(),
            ErrorCode::ShapeMismatch, "linear head shape mismatch");
}

}  // namespace

std::vector<double> forward_values(const Model& model, const PlanarCurve& curve,
                                   ForwardTrace* trace) {
    check_model(model);
    const auto& arch = model.arch;
    const std::size_t min_points = 2 * arch.receptive_radius() + 1;
    require(curve.size() >= min_points && curve.size() > arch.width, ErrorCode::InvalidArgument,
            "curve of " + std::to_string(curve.size()) + " points is shorter than the receptive field (" +
                std::to_string(min_points) + " points)");
    require(arch.input_channels == 2, ErrorCode::ShapeMismatch,
            "curve input requires an architecture with 2 input channels");
    const Padding padding = padding_for(curve);
    if (trace) {
        trace->padding = padding;
        trace->conv_inputs.assign(arch.conv_count(), {});
        trace->conv_outputs.assign(arch.conv_count(), {});
        trace->argmax.assign(arch.stages, {});
    }

    Tensor x = curve_to_tensor(curve);
    for (std::size_t s = 0; s < arch.stages; ++s) {
        for (std::size_t j = 0; j < arch.convs_per_stage; ++j) {
            const std::size_t l = s * arch.convs_per_stage + j;
            Tensor pre = conv1d(x, model.params.convs[l], padding);
            Tensor act = pre;
            for (double& v : act.data) v = std::max(v, 0.0);
            if (trace) {
                trace->conv_inputs[l] = std::move(x);
                trace->conv_outputs[l] = std::move(pre);
            }
            x = std::move(act);
        }
        if (arch.stage_has_channel_max[s]) {
            auto cm = channel_max(x);
            x = std::move(cm.values);
            if (trace) trace->argmax[s] = std::move(cm.argmax);
        }
    }

    const std::size_t n = curve.size();
    std::vector<double> out(n, model.params.linear_bias);
    for (std::size_t c = 0; c < x.channels; ++c) {
        const double w = model.params.linear_weight[c];
        const auto row = x.channel(c);
        for (std::size_t i = 0; i < n; ++i) out[i] += w * row[i];
    }
    if (trace) trace->head_input = std::move(x);
    return out;
}

Signature forward(const Model& model, const PlanarCurve& curve) {
    return {forward_values(model, curve), SignatureMethod::Network, 0.0};
}

Parameters backward(const Model& model, const ForwardTrace& trace,
                    std::span<const double> output_grad) {
    check_model(model);
    const auto& arch = model.arch;
    const std::size_t n = trace.head_input.length;
    require(output_grad.size() == n, ErrorCode::ShapeMismatch,
            "output gradient has length " + std::to_string(output_grad.size()) + ", expected " +
                std::to_string(n));
    require(trace.conv_inputs.size() == arch.conv_count(), ErrorCode::ShapeMismatch,
            "forward trace does not match the model");

    Parameters grads = Parameters::zeros_like(model.params);

    // Linear head.
    Tensor g(trace.head_input.channels, n);
    for (std::size_t c = 0; c < g.channels; ++c) {
        const double w = model.params.linear_weight[c];
        const auto h = trace.head_input.channel(c);
        double dw = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            g.at(c, i) = w * output_grad[i];
            dw += output_grad[i] * h[i];
        }
        grads.linear_weight[c] = dw;
    }
    for (double v : output_grad) grads.linear_bias += v;

    for (std::size_t s = arch.stages; s-- > 0;) {
        if (arch.stage_has_channel_max[s]) {
            Tensor routed(arch.filters, n);
            const auto& argmax = trace.argmax[s];
            for (std::size_t i = 0; i < n; ++i) routed.at(argmax[i], i) = g.at(0, i);
            g = std::move(routed);
        }
        for (std::size_t j = arch.convs_per_stage; j-- > 0;) {
            const std::size_t l = s * arch.convs_per_stage + j;
            const auto& layer = model.params.convs[l];
            auto& dlayer = grads.convs[l];
            const auto& pre = trace.conv_outputs[l];
            for (std::size_t idx = 0; idx < g.data.size(); ++idx) {
                if (!(pre.data[idx] > 0.0)) g.data[idx] = 0.0;
            }

            const auto map = padding_map(n, layer.width / 2, trace.padding);
            const RowMatrix buf = padded(trace.conv_inputs[l], map);
            const auto len = static_cast<Eigen::Index>(n);
            // Owned (aligned) copy: Eigen's matrix-vector and reduction kernels peel
            // unaligned heads, which would make the rounding depend on the heap.
            const RowMatrix go =
                ConstRowMap(g.data.data(), static_cast<Eigen::Index>(layer.out_channels), len);
            for (std::size_t k = 0; k < layer.width; ++k) {
                tap(dlayer.weight.data(), layer, k).noalias() =
                    go * buf.middleCols(static_cast<Eigen::Index>(k), len).transpose();
            }
            Eigen::Map<Eigen::VectorXd>(dlayer.bias.data(),
                                        static_cast<Eigen::Index>(layer.out_channels)) =
                go.rowwise().sum();
            if (l == 0) break;  // no gradient needed for the curve itself

            RowMatrix gbuf = RowMatrix::Zero(static_cast<Eigen::Index>(layer.in_channels),
                                             static_cast<Eigen::Index>(map.size()));
            for (std::size_t k = 0; k < layer.width; ++k) {
                gbuf.middleCols(static_cast<Eigen::Index>(k), len).noalias() +=
                    tap(layer.weight.data(), layer, k).transpose() * go;
            }
            Tensor gin(layer.in_channels, n);
            for (std::size_t c = 0; c < layer.in_channels; ++c) {
                double* dst = gin.data.data() + c * n;
                const double* src = gbuf.data() + c * map.size();
                for (std::size_t p = 0; p < map.size(); ++p) dst[map[p]] += src[p];
            }
            g = std::move(gin);
        }
    }
    return grads;
}

Parameters backward(const Model& model, const PlanarCurve& curve,
                    std::span<const double> output_grad) {
    ForwardTrace trace;
    forward_values(model, curve, &trace);
    return backward(model, trace, output_grad);
}

OptimizerState OptimizerState::for_model(const Model& model, double learning_rate, double epsilon) {
    require(learning_rate > 0.0, ErrorCode::InvalidArgument, "learning rate must be positive");
    require(epsilon >= 0.0, ErrorCode::InvalidArgument, "epsilon must be non-negative");
    return {Parameters::zeros_like(model.params), learning_rate, epsilon};
}

void adagrad_step(Model& model, const Parameters& grads, OptimizerState& state) {
    require_same_shape(model.params, grads);
    require_same_shape(model.params, state.accumulators);
    const auto g = grads.blocks();
    for (std::size_t b = 0; b < g.size(); ++b) {
        for (std::size_t i = 0; i < g[b].size(); ++i) {
            require(std::isfinite(g[b][i]), ErrorCode::NonFinite,
                    "non-finite gradient in parameter block " + std::to_string(b) + " entry " +
                        std::to_string(i));
        }
    }
    auto theta = model.params.blocks();
    auto acc = state.accumulators.blocks();
    for (std::size_t b = 0; b < g.size(); ++b) {
        for (std::size_t i = 0; i < g[b].size(); ++i) {
            const double gi = g[b][i];
            acc[b][i] += gi * gi;
            if (gi != 0.0) {
                theta[b][i] -= state.learning_rate * gi / (std::sqrt(acc[b][i]) + state.epsilon);
            }
        }
    }
}

namespace {

using ordered_json = nlohmann::ordered_json;

std::string layer_name(const Architecture& arch, std::size_t l) {
    return "stage" + std::to_string(l / arch.convs_per_stage + 1) + ".conv" +
           std::to_string(l % arch.convs_per_stage + 1);
}

std::vector<double> read_values(const ordered_json& node, std::size_t expected,
                                const std::string& what) {
    require(node.is_array(), ErrorCode::MalformedFile, what + " must be an array");
    require(node.size() == expected, ErrorCode::MalformedFile,
            what + " has " + std::to_string(node.size()) + " values, expected " +
                std::to_string(expected));
    std::vector<double> out;
    out.reserve(expected);
    for (const auto& v : node) {
        require(v.is_number(), ErrorCode::MalformedFile, what + " contains a non-number");
        const double d = v.get<double>();
        require(std::isfinite(d), ErrorCode::MalformedFile, what + " contains a non-finite value");
        out.push_back(d);
    }
    return out;
}

}  // namespace

std::string model_to_json(const Model& model) {
    check_model(model);
    const auto& arch = model.arch;
    ordered_json j;
    j["format_version"] = kModelFormatVersion;
    ordered_json a;
    a["stages"] = arch.stages;
    a["convs_per_stage"] = arch.convs_per_stage;
    a["filters"] = arch.filters;
    a["width"] = arch.width;
    a["stage_has_channel_max"] = arch.stage_has_channel_max;
    a["input_channels"] = arch.input_channels;
    a["output_channels"] = arch.output_channels;
    j["architecture"] = a;
    ordered_json layers = ordered_json::array();
    for (std::size_t l = 0; l < arch.conv_count(); ++l) {
        const auto& layer = model.params.convs[l];
        ordered_json lj;
        lj["name"] = layer_name(arch, l);
        lj["out_channels"] = layer.out_channels;
        lj["in_channels"] = layer.in_channels;
        lj["width"] = layer.width;
        lj["weight"] = layer.weight;
        lj["bias"] = layer.bias;
        layers.push_back(std::move(lj));
    }
    j["conv_layers"] = std::move(layers);
    j["linear"] = {{"weight", model.params.linear_weight}, {"bias", model.params.linear_bias}};
    return j.dump(1) + "\n";
}

Model model_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::MalformedFile, std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        require(j.is_object() && j.contains("format_version"), ErrorCode::MalformedFile,
                "model file has no format_version");
        const int version = j.at("format_version").get<int>();
        require(version == kModelFormatVersion, ErrorCode::VersionMismatch,
                "model format_version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kModelFormatVersion) + ")");
        const auto& a = j.at("architecture");
        Model model;
        model.arch.stages = a.at("stages").get<std::size_t>();
        model.arch.convs_per_stage = a.at("convs_per_stage").get<std::size_t>();
        model.arch.filters = a.at("filters").get<std::size_t>();
        model.arch.width = a.at("width").get<std::size_t>();
        model.arch.stage_has_channel_max = a.at("stage_has_channel_max").get<std::vector<bool>>();
        model.arch.input_channels = a.at("input_channels").get<std::size_t>();
        model.arch.output_channels = a.at("output_channels").get<std::size_t>();
        model.arch.validate();

        const auto& layers = j.at("conv_layers");
        require(layers.is_array() && layers.size() == model.arch.conv_count(),
                ErrorCode::MalformedFile, "conv_layers does not match the architecture");
        for (std::size_t l = 0; l < model.arch.conv_count(); ++l) {
            const auto& lj = layers[l];
            ConvLayer layer;
            layer.out_channels = model.arch.filters;
            layer.in_channels = model.arch.conv_input_channels(l);
            layer.width = model.arch.width;
            require(lj.at("out_channels").get<std::size_t>() == layer.out_channels &&
                        lj.at("in_channels").get<std::size_t>() == layer.in_channels &&
                        lj.at("width").get<std::size_t>() == layer.width,
                    ErrorCode::MalformedFile, layer_name(model.arch, l) + " shape disagrees with architecture");
            const std::string name = layer_name(model.arch, l);
            layer.weight = read_values(lj.at("weight"),
                                       layer.out_channels * layer.in_channels * layer.width,
                                       name + ".weight");
            layer.bias = read_values(lj.at("bias"), layer.out_channels, name + ".bias");
            model.params.convs.push_back(std::move(layer));
        }
        const auto& lin = j.at("linear");
        model.params.linear_weight =
            read_values(lin.at("weight"), model.arch.head_input_channels(), "linear.weight");
        require(lin.at("bias").is_number(), ErrorCode::MalformedFile, "linear.bias must be a number");
        model.params.linear_bias = lin.at("bias").get<double>();
        require(std::isfinite(model.params.linear_bias), ErrorCode::MalformedFile,
                "linear.bias is not finite");
        return model;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::MalformedFile, std::string("model file is malformed: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::VersionMismatch) throw;
        fail(ErrorCode::MalformedFile, e.what());
    }
}

void save_model(const Model& model, const std::filesystem::path& path) {
    const std::string text = model_to_json(model);
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out << text;
    require(static_cast<bool>(out), ErrorCode::Io, "failed writing " + path.string());
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open model file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return model_from_json(ss.str());
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

}  // namespace invsig
