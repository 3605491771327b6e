#include "ocfer/model.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace ocfer {

std::string_view layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv: return "conv";
        case LayerKind::relu: return "relu";
        case LayerKind::max_pool: return "max_pool";
        case LayerKind::add: return "add";
        case LayerKind::global_avg_pool: return "global_avg_pool";
        case LayerKind::linear: return "linear";
    }
    return "?";
}

Model::Model(std::string id, Shape input_shape) : id_(std::move(id)), input_shape_(std::move(input_shape)) {
    if (input_shape_.size() != 3) throw std::invalid_argument("model input must be [C,H,W]");
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

const Shape& Model::activation_shape(std::size_t index) const {
    if (index == 0) return input_shape_;
    return layers_.at(index - 1).out_shape;
}

std::size_t Model::push(Layer layer) {
    for (auto in : layer.inputs) {
        if (in > layers_.size()) throw std::invalid_argument("layer " + layer.name + " reads a future activation");
    }
    layers_.push_back(std::move(layer));
    return layers_.size();
}

std::size_t Model::add_param(std::string name, Tensor value) {
    params_.push_back(Parameter{std::move(name), std::move(value)});
    return params_.size() - 1;
}

namespace {

// Spatial [C,H,W] view of an activation shape (input shape or a conv output).
struct Chw {
    std::size_t c, h, w;
};

Chw spatial(const Shape& s) {
    if (s.size() == 3) return {s[0], s[1], s[2]};
    if (s.size() == 4 && s[0] == 1) return {s[1], s[2], s[3]};
    throw std::invalid_argument("expected a spatial activation, got " + shape_to_string(s));
}

Tensor glorot_uniform(const Shape& shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t(shape);
    for (auto& v : t.data()) v = rng.uniform(-a, a);
    return t;
}

}  // namespace

std::size_t Model::add_conv(std::string name, std::size_t from, std::size_t out_channels, std::size_t k,
                            ConvSpec spec, bool with_bias, Rng& rng) {
    const Chw in = spatial(activation_shape(from));
    Layer layer;
    layer.kind = LayerKind::conv;
    layer.inputs = {from};
    layer.kernel_size = k;
    layer.conv = spec;
    layer.out_shape = {1, out_channels, conv_output_extent(in.h, k, spec), conv_output_extent(in.w, k, spec)};
    layer.weight = add_param(name + ".weight", glorot_uniform({out_channels, in.c, k, k}, in.c * k * k,
                                                              out_channels * k * k, rng));
    if (with_bias) layer.bias = add_param(name + ".bias", Tensor({out_channels}));
    layer.name = std::move(name);
    return push(std::move(layer));
}

std::size_t Model::add_relu(std::string name, std::size_t from) {
    Layer layer;
    layer.kind = LayerKind::relu;
    layer.name = std::move(name);
    layer.inputs = {from};
    layer.out_shape = activation_shape(from);
    return push(std::move(layer));
}

std::size_t Model::add_max_pool(std::string name, std::size_t from) {
    const Chw in = spatial(activation_shape(from));
    if (in.h % 2 || in.w % 2) throw std::invalid_argument("2x2 max-pool needs even extents");
    Layer layer;
    layer.kind = LayerKind::max_pool;
    layer.name = std::move(name);
    layer.inputs = {from};
    layer.out_shape = {1, in.c, in.h / 2, in.w / 2};
    return push(std::move(layer));
}

std::size_t Model::add_residual(std::string name, std::size_t a, std::size_t b) {
    if (activation_shape(a) != activation_shape(b)) {
        throw std::invalid_argument("residual " + name + " joins " + shape_to_string(activation_shape(a)) + " and " +
                                    shape_to_string(activation_shape(b)));
    }
    Layer layer;
    layer.kind = LayerKind::add;
    layer.name = std::move(name);
    layer.inputs = {a, b};
    layer.out_shape = activation_shape(a);
    return push(std::move(layer));
}

std::size_t Model::add_global_avg_pool(std::string name, std::size_t from) {
    const Chw in = spatial(activation_shape(from));
    Layer layer;
    layer.kind = LayerKind::global_avg_pool;
    layer.name = std::move(name);
    layer.inputs = {from};
    layer.out_shape = {in.c};
    return push(std::move(layer));
}

std::size_t Model::add_linear(std::string name, std::size_t from, std::size_t out_features, Rng& rng) {
    const Shape& in = activation_shape(from);
    if (in.size() != 1) throw std::invalid_argument("linear layer needs a flat input");
    Layer layer;
    layer.kind = LayerKind::linear;
    layer.inputs = {from};
    layer.out_shape = {out_features};
    layer.weight = add_param(name + ".weight", glorot_uniform({out_features, in[0]}, in[0], out_features, rng));
    layer.bias = add_param(name + ".bias", Tensor({out_features}));
    layer.name = std::move(name);
    return push(std::move(layer));
}

void Model::set_ortho_layers(std::vector<std::size_t> layers) {
    for (auto l : layers) {
        if (l >= layers_.size() || layers_[l].kind != LayerKind::conv) {
            throw std::invalid_argument("only convolution layers can be regularized");
        }
    }
    std::sort(layers.begin(), layers.end());
    layers.erase(std::unique(layers.begin(), layers.end()), layers.end());
    ortho_layers_ = std::move(layers);
}

std::vector<Tensor> Model::zero_grads() const {
    std::vector<Tensor> grads;
    grads.reserve(params_.size());
    for (const auto& p : params_) grads.emplace_back(p.value.shape());
    return grads;
}

Tensor Model::forward(const Tensor& image) const {
    Activations acts;
    return forward(image, acts);
}

Tensor Model::forward(const Tensor& image, Activations& acts) const {
    if (image.shape() != input_shape_) {
        throw std::invalid_argument("model input shape " + shape_to_string(image.shape()) + ", expected " +
                                    shape_to_string(input_shape_));
    }
    acts.values.clear();
    acts.values.reserve(layers_.size() + 1);
    acts.values.push_back(image.reshaped({1, input_shape_[0], input_shape_[1], input_shape_[2]}));
    acts.pool_argmax.assign(layers_.size(), {});

    for (std::size_t li = 0; li < layers_.size(); ++li) {
        const Layer& layer = layers_[li];
        const Tensor& x = acts.values[layer.inputs[0]];
        switch (layer.kind) {
            case LayerKind::conv: {
                Tensor y = conv2d_forward(x, params_[layer.weight].value, layer.conv);
                if (layer.bias != Layer::npos) {
                    const Tensor& b = params_[layer.bias].value;
                    const std::size_t plane = y.extent(2) * y.extent(3);
                    for (std::size_t m = 0; m < y.extent(1); ++m)
                        for (std::size_t p = 0; p < plane; ++p) y[m * plane + p] += b[m];
                }
                acts.values.push_back(std::move(y));
                break;
            }
            case LayerKind::relu: {
                Tensor y = x;
                for (auto& v : y.data()) v = v > 0.0 ? v : 0.0;
                acts.values.push_back(std::move(y));
                break;
            }
            case LayerKind::max_pool: {
                const Chw in = spatial(x.shape());
                const std::size_t oh = in.h / 2, ow = in.w / 2;
                Tensor y(layer.out_shape);
                auto& arg = acts.pool_argmax[li];
                arg.resize(y.size());
                for (std::size_t c = 0; c < in.c; ++c) {
                    for (std::size_t i = 0; i < oh; ++i) {
                        for (std::size_t j = 0; j < ow; ++j) {
                            std::size_t best = (c * in.h + 2 * i) * in.w + 2 * j;
                            for (std::size_t di = 0; di < 2; ++di) {
                                for (std::size_t dj = 0; dj < 2; ++dj) {
                                    const std::size_t idx = (c * in.h + 2 * i + di) * in.w + 2 * j + dj;
                                    if (x[idx] > x[best]) best = idx;
                                }
                            }
                            const std::size_t o = (c * oh + i) * ow + j;
                            y[o] = x[best];
                            arg[o] = static_cast<std::uint32_t>(best);
                        }
                    }
                }
                acts.values.push_back(std::move(y));
                break;
            }
            case LayerKind::add: {
                acts.values.push_back(axpy(1.0, acts.values[layer.inputs[1]], x));
                break;
            }
            case LayerKind::global_avg_pool: {
                const Chw in = spatial(x.shape());
                const std::size_t plane = in.h * in.w;
                Tensor y({in.c});
                for (std::size_t c = 0; c < in.c; ++c) {
                    double acc = 0.0;
                    for (std::size_t p = 0; p < plane; ++p) acc += x[c * plane + p];
                    y[c] = acc / static_cast<double>(plane);
                }
                acts.values.push_back(std::move(y));
                break;
            }
            case LayerKind::linear: {
                const Tensor& w = params_[layer.weight].value;
                const Tensor& b = params_[layer.bias].value;
                const std::size_t out = w.extent(0), in = w.extent(1);
                Tensor y({out});
                for (std::size_t o = 0; o < out; ++o) {
                    double acc = b[o];
                    for (std::size_t i = 0; i < in; ++i) acc += w.at(o, i) * x[i];
                    y[o] = acc;
                }
                acts.values.push_back(std::move(y));
                break;
            }
        }
    }
    return acts.values.back();
}

void Model::backward(const Activations& acts, const Tensor& grad_logits, std::vector<Tensor>& param_grads) const {
    if (acts.values.size() != layers_.size() + 1) throw std::invalid_argument("activations do not match model");
    if (param_grads.size() != params_.size()) throw std::invalid_argument("gradient buffers do not match model");
    std::vector<std::optional<Tensor>> grads(acts.values.size());
    grads.back() = grad_logits;

    auto accumulate = [&](std::size_t index, const Tensor& g) {
        if (index == 0) return;  // no gradient w.r.t. the image
        if (!grads[index]) {
            grads[index] = g.reshaped(acts.values[index].shape());
        } else {
            axpy_inplace(1.0, g, *grads[index]);
        }
    };

    for (std::size_t li = layers_.size(); li-- > 0;) {
        if (!grads[li + 1]) continue;
        const Layer& layer = layers_[li];
        const Tensor& gy = *grads[li + 1];
        const Tensor& x = acts.values[layer.inputs[0]];
        switch (layer.kind) {
            case LayerKind::conv: {
                ConvGrads g = conv2d_backward(gy, x, params_[layer.weight].value, layer.conv);
                axpy_inplace(1.0, g.grad_k, param_grads[layer.weight]);
                if (layer.bias != Layer::npos) {
                    Tensor& gb = param_grads[layer.bias];
                    const std::size_t plane = gy.extent(2) * gy.extent(3);
                    for (std::size_t m = 0; m < gy.extent(1); ++m) {
                        double acc = 0.0;
                        for (std::size_t p = 0; p < plane; ++p) acc += gy[m * plane + p];
                        gb[m] += acc;
                    }
                }
                accumulate(layer.inputs[0], g.grad_x);
                break;
            }
            case LayerKind::relu: {
                Tensor gx = gy;
                const Tensor& y = acts.values[li + 1];
                for (std::size_t i = 0; i < gx.size(); ++i)
                    if (!(y[i] > 0.0)) gx[i] = 0.0;
                accumulate(layer.inputs[0], gx);
                break;
            }
            case LayerKind::max_pool: {
                Tensor gx(x.shape());
                const auto& arg = acts.pool_argmax[li];
                for (std::size_t o = 0; o < gy.size(); ++o) gx[arg[o]] += gy[o];
                accumulate(layer.inputs[0], gx);
                break;
            }
            case LayerKind::add: {
                accumulate(layer.inputs[0], gy);
                accumulate(layer.inputs[1], gy);
                break;
            }
            case LayerKind::global_avg_pool: {
                Tensor gx(x.shape());
                const std::size_t plane = gx.size() / gy.size();
                const double scale = 1.0 / static_cast<double>(plane);
                for (std::size_t c = 0; c < gy.size(); ++c)
                    for (std::size_t p = 0; p < plane; ++p) gx[c * plane + p] = gy[c] * scale;
                accumulate(layer.inputs[0], gx);
                break;
            }
            case LayerKind::linear: {
                const Tensor& w = params_[layer.weight].value;
                Tensor& gw = param_grads[layer.weight];
                Tensor& gb = param_grads[layer.bias];
                const std::size_t out = w.extent(0), in = w.extent(1);
                Tensor gx({in});
                for (std::size_t o = 0; o < out; ++o) {
                    gb[o] += gy[o];
                    for (std::size_t i = 0; i < in; ++i) {
                        gw.at(o, i) += gy[o] * x[i];
                        gx[i] += w.at(o, i) * gy[o];
                    }
                }
                accumulate(layer.inputs[0], gx);
                break;
            }
        }
    }
}

}  // namespace ocfer
