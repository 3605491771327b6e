#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ocfer/conv.hpp"
#include "ocfer/random.hpp"
#include "ocfer/tensor.hpp"

namespace ocfer {

inline constexpr std::size_t kImageSide = 48;
inline constexpr std::size_t kNumClasses = 7;

enum class LayerKind { conv, relu, max_pool, add, global_avg_pool, linear };

std::string_view layer_kind_name(LayerKind kind);

/// One node of the network graph. Activation 0 is the model input and
/// activation i+1 is the output of layer i; `inputs` index activations.
struct Layer {
    LayerKind kind = LayerKind::relu;
    std::string name;
    std::vector<std::size_t> inputs;
    Shape out_shape;

    // conv / linear
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t weight = npos;
    std::size_t bias = npos;
    std::size_t kernel_size = 0;
    ConvSpec conv;
};

struct Parameter {
    std::string name;
    Tensor value;
};

/// Per-sample record of a forward pass, consumed by Model::backward.
struct Activations {
    std::vector<Tensor> values;
    std::vector<std::vector<std::uint32_t>> pool_argmax;
};

/// Feed-forward network over a 1x48x48 image producing 7 logits.
///
/// Layers are appended in topological order by the builders below. The model
/// owns its parameters; gradients live in caller-owned buffers shaped like
/// parameters().
class Model {
public:
    Model(std::string id, Shape input_shape);

    const std::string& id() const noexcept { return id_; }
    const Shape& input_shape() const noexcept { return input_shape_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::vector<Parameter>& parameters() noexcept { return params_; }
    const std::vector<Parameter>& parameters() const noexcept { return params_; }
    std::size_t parameter_count() const;

    /// Shape of activation `index` (0 = input).
    const Shape& activation_shape(std::size_t index) const;
    /// Index of the most recently added activation.
    std::size_t last() const noexcept { return layers_.size(); }

    std::size_t add_conv(std::string name, std::size_t from, std::size_t out_channels, std::size_t k,
                         ConvSpec spec, bool with_bias, Rng& rng);
    std::size_t add_relu(std::string name, std::size_t from);
    std::size_t add_max_pool(std::string name, std::size_t from);
    std::size_t add_residual(std::string name, std::size_t a, std::size_t b);
    std::size_t add_global_avg_pool(std::string name, std::size_t from);
    std::size_t add_linear(std::string name, std::size_t from, std::size_t out_features, Rng& rng);

    /// Layers that receive the orthogonality loss, in layer order.
    const std::vector<std::size_t>& ortho_layers() const noexcept { return ortho_layers_; }
    void set_ortho_layers(std::vector<std::size_t> layers);

    /// Logits [7] for an image [1, 48, 48].
    Tensor forward(const Tensor& image) const;
    Tensor forward(const Tensor& image, Activations& acts) const;

    /// Accumulates d(loss)/d(param) into `param_grads` given d(loss)/d(logits).
    void backward(const Activations& acts, const Tensor& grad_logits, std::vector<Tensor>& param_grads) const;

    /// Zero tensors shaped like the parameters.
    std::vector<Tensor> zero_grads() const;

private:
    std::size_t push(Layer layer);
    std::size_t add_param(std::string name, Tensor value);

    std::string id_;
    Shape input_shape_;
    std::vector<Layer> layers_;
    std::vector<Parameter> params_;
    std::vector<std::size_t> ortho_layers_;
};

// ---- model zoo ----

enum class OrthoPolicy { all_conv, stride1_3x3, none };

OrthoPolicy parse_ortho_policy(std::string_view name);
std::string_view ortho_policy_name(OrthoPolicy policy);

/// conv3x3(8) - relu - pool - conv3x3(16) - relu - pool - gap - fc(7).
Model build_tiny_cnn(std::uint64_t seed);

/// ResNet-18 basic-block layout for 1x48x48 input: 3x3 stride-1 stem without
/// max-pool, stages of width 64/128/256/512 with two blocks each, stride-2
/// entry to stages 2-4 with 1x1 projection shortcuts, gap, fc(7).
/// Convolutions carry no bias.
Model build_resnet18_fer(std::uint64_t seed);

/// "tiny_cnn" or "resnet18_fer"; throws std::invalid_argument otherwise.
Model build_model(std::string_view id, std::uint64_t seed);

/// Deterministic subset of convolution layers in layer order.
std::vector<std::size_t> select_ortho_layers(const Model& model, OrthoPolicy policy);
std::vector<std::size_t> select_ortho_layers(const Model& model, std::string_view policy);

}  // namespace ocfer
