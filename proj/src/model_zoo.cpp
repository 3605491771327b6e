#include <stdexcept>
#include <string>

#include "ocfer/model.hpp"

namespace ocfer {

OrthoPolicy parse_ortho_policy(std::string_view name) {
    if (name == "all-conv") return OrthoPolicy::all_conv;
    if (name == "stride1-3x3") return OrthoPolicy::stride1_3x3;
    if (name == "none") return OrthoPolicy::none;
    throw std::invalid_argument("unknown ortho policy '" + std::string(name) + "'");
}

std::string_view ortho_policy_name(OrthoPolicy policy) {
    switch (policy) {
        case OrthoPolicy::all_conv: return "all-conv";
        case OrthoPolicy::stride1_3x3: return "stride1-3x3";
        case OrthoPolicy::none: return "none";
    }
    return "?";
}

Model build_tiny_cnn(std::uint64_t seed) {
    Rng rng(seed);
    Model model("tiny_cnn", {1, kImageSide, kImageSide});
    const ConvSpec same{1, 1, Rounding::exact};
    auto x = model.add_conv("conv1", 0, 8, 3, same, true, rng);
    x = model.add_relu("relu1", x);
    x = model.add_max_pool("pool1", x);
    x = model.add_conv("conv2", x, 16, 3, same, true, rng);
    x = model.add_relu("relu2", x);
    x = model.add_max_pool("pool2", x);
    x = model.add_global_avg_pool("gap", x);
    model.add_linear("fc", x, kNumClasses, rng);
    return model;
}

namespace {

std::size_t basic_block(Model& model, const std::string& name, std::size_t from, std::size_t width,
                        std::size_t stride, Rng& rng) {
    const std::size_t in_width = model.activation_shape(from)[1];
    const ConvSpec entry{1, stride, stride == 1 ? Rounding::exact : Rounding::floor};
    const ConvSpec same{1, 1, Rounding::exact};

    auto y = model.add_conv(name + ".conv1", from, width, 3, entry, false, rng);
    y = model.add_relu(name + ".relu1", y);
    y = model.add_conv(name + ".conv2", y, width, 3, same, false, rng);

    std::size_t shortcut = from;
    if (stride != 1 || in_width != width) {
        shortcut = model.add_conv(name + ".shortcut", from, width, 1, ConvSpec{0, stride, Rounding::floor}, false,
                                  rng);
    }
    y = model.add_residual(name + ".add", y, shortcut);
    return model.add_relu(name + ".relu2", y);
}

}  // namespace

Model build_resnet18_fer(std::uint64_t seed) {
    Rng rng(seed);
    Model model("resnet18_fer", {1, kImageSide, kImageSide});
    auto x = model.add_conv("stem.conv", 0, 64, 3, ConvSpec{1, 1, Rounding::exact}, false, rng);
    x = model.add_relu("stem.relu", x);

    const std::size_t widths[] = {64, 128, 256, 512};
    for (std::size_t stage = 0; stage < 4; ++stage) {
        for (std::size_t block = 0; block < 2; ++block) {
            const std::size_t stride = (stage > 0 && block == 0) ? 2 : 1;
            x = basic_block(model, "layer" + std::to_string(stage + 1) + "." + std::to_string(block), x,
                            widths[stage], stride, rng);
        }
    }
    x = model.add_global_avg_pool("gap", x);
    model.add_linear("fc", x, kNumClasses, rng);
    return model;
}

Model build_model(std::string_view id, std::uint64_t seed) {
    if (id == "tiny_cnn") return build_tiny_cnn(seed);
    if (id == "resnet18_fer") return build_resnet18_fer(seed);
    throw std::invalid_argument("unknown model '" + std::string(id) + "'");
}

std::vector<std::size_t> select_ortho_layers(const Model& model, OrthoPolicy policy) {
    std::vector<std::size_t> out;
    const auto& layers = model.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        if (l.kind != LayerKind::conv) continue;
        switch (policy) {
            case OrthoPolicy::all_conv: out.push_back(i); break;
            case OrthoPolicy::stride1_3x3:
                if (l.kernel_size == 3 && l.conv.stride == 1) out.push_back(i);
                break;
            case OrthoPolicy::none: break;
        }
    }
    return out;
}

std::vector<std::size_t> select_ortho_layers(const Model& model, std::string_view policy) {
    return select_ortho_layers(model, parse_ortho_policy(policy));
}

}  // namespace ocfer
