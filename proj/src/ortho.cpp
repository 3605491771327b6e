#include "ocfer/ortho.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace ocfer {

namespace {

ConvSpec self_conv_spec(const OrthoSpec& spec) { return ConvSpec{spec.self_padding, spec.stride, Rounding::exact}; }

}  // namespace

OrthoSpec OrthoSpec::for_layer(std::size_t k, std::size_t stride) {
    return OrthoSpec{stride, ocfer::self_padding(k, stride)};
}

void OrthoSpec::validate() const {
    if (stride == 0) throw std::invalid_argument("ortho spec: stride must be positive");
    if (self_padding % stride != 0) {
        throw std::invalid_argument("ortho spec: stride " + std::to_string(stride) + " does not divide padding " +
                                    std::to_string(self_padding));
    }
}

std::size_t self_padding(std::size_t k, std::size_t s) {
    if (k == 0 || s == 0) throw std::invalid_argument("self_padding: k and s must be positive");
    return s * ((k - 1) / s);
}

Tensor self_convolution(const Kernel& kernel, const OrthoSpec& spec) {
    spec.validate();
    return conv2d_forward(kernel.weights(), kernel.weights(), self_conv_spec(spec));
}

OrthoTarget::OrthoTarget(std::size_t m, const OrthoSpec& spec) {
    spec.validate();
    if (m == 0) throw std::invalid_argument("ortho target: M must be positive");
    const std::size_t e = spec.extent();
    tensor_ = Tensor({m, m, e, e});
    for (std::size_t i = 0; i < m; ++i) tensor_.at(i, i, spec.center(), spec.center()) = 1.0;
}

OrthoTarget ortho_target(std::size_t m, std::size_t p, std::size_t s) { return OrthoTarget(m, OrthoSpec{s, p}); }

double ortho_loss(const Kernel& kernel, const OrthoSpec& spec) {
    const Tensor z = self_convolution(kernel, spec);
    return frobenius_sq_diff(z, OrthoTarget(kernel.m(), spec).tensor());
}

Tensor ortho_loss_grad(const Kernel& kernel, const OrthoSpec& spec) { return ortho_loss_and_grad(kernel, spec).grad; }

OrthoLossGrad ortho_loss_and_grad(const Kernel& kernel, const OrthoSpec& spec) {
    const Tensor z = self_convolution(kernel, spec);
    const Tensor target = OrthoTarget(kernel.m(), spec).tensor();
    OrthoLossGrad out;
    out.loss = frobenius_sq_diff(z, target);

    Tensor residual = axpy(-1.0, target, z);
    for (auto& v : residual.data()) v *= 2.0;
    ConvGrads g = conv2d_backward(residual, kernel.weights(), kernel.weights(), self_conv_spec(spec));
    axpy_inplace(1.0, g.grad_x, g.grad_k);
    out.grad = std::move(g.grad_k);
    return out;
}

double toeplitz_interior_check(const Kernel& kernel, const OrthoSpec& spec, std::size_t in_h, std::size_t in_w) {
    return toeplitz_interior_check(kernel, self_convolution(kernel, spec), spec, in_h, in_w);
}

double toeplitz_interior_check(const Kernel& kernel, const Tensor& self_conv, const OrthoSpec& spec,
                               std::size_t in_h, std::size_t in_w) {
    spec.validate();
    const std::size_t m = kernel.m(), c = kernel.c(), k = kernel.k();
    const std::size_t e = spec.extent();
    if (self_conv.shape() != Shape{m, m, e, e}) {
        throw std::invalid_argument("toeplitz check: self-convolution shape " + shape_to_string(self_conv.shape()));
    }
    if (in_h < k || in_w < k) {
        throw std::invalid_argument("toeplitz check: input " + std::to_string(in_h) + "x" + std::to_string(in_w) +
                                    " has no interior position for k=" + std::to_string(k));
    }

    const ConvSpec layer{(k - 1) / 2, spec.stride, Rounding::floor};
    const Tensor t = unrolled_conv_matrix(kernel, in_h, in_w, layer);
    const std::size_t out_h = conv_output_extent(in_h, k, layer);
    const std::size_t out_w = conv_output_extent(in_w, k, layer);
    const std::size_t ph = in_h + 2 * layer.padding;
    const std::size_t pw = in_w + 2 * layer.padding;

    // Interior output positions: window entirely inside the unpadded input.
    auto interior = [&](std::size_t o, std::size_t in) {
        const std::size_t start = o * layer.stride;
        return start >= layer.padding && start + k <= layer.padding + in;
    };
    std::vector<std::size_t> rows_h, rows_w;
    for (std::size_t o = 0; o < out_h; ++o)
        if (interior(o, in_h)) rows_h.push_back(o);
    for (std::size_t o = 0; o < out_w; ++o)
        if (interior(o, in_w)) rows_w.push_back(o);
    if (rows_h.empty() || rows_w.empty()) {
        throw std::invalid_argument("toeplitz check: input too small for an interior position");
    }

    // Inner product of two matrix rows restricted to columns of the real input.
    auto row_dot = [&](std::size_t r1, std::size_t r2) {
        double acc = 0.0;
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t y = layer.padding; y < layer.padding + in_h; ++y) {
                for (std::size_t x = layer.padding; x < layer.padding + in_w; ++x) {
                    const std::size_t col = (ch * ph + y) * pw + x;
                    acc += t.at(r1, col) * t.at(r2, col);
                }
            }
        }
        return acc;
    };

    const auto reach = static_cast<std::ptrdiff_t>(spec.center());
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t h1 : rows_h) {
            for (std::size_t w1 : rows_w) {
                const std::size_t r1 = (i * out_h + h1) * out_w + w1;
                for (std::size_t j = 0; j < m; ++j) {
                    for (std::size_t h2 : rows_h) {
                        for (std::size_t w2 : rows_w) {
                            const std::size_t r2 = (j * out_h + h2) * out_w + w2;
                            const auto dh = static_cast<std::ptrdiff_t>(h2) - static_cast<std::ptrdiff_t>(h1);
                            const auto dw = static_cast<std::ptrdiff_t>(w2) - static_cast<std::ptrdiff_t>(w1);
                            double expected = 0.0;
                            if (std::abs(dh) <= reach && std::abs(dw) <= reach) {
                                expected = self_conv.at(i, j, static_cast<std::size_t>(reach + dh),
                                                        static_cast<std::size_t>(reach + dw));
                            }
                            worst = std::max(worst, std::abs(row_dot(r1, r2) - expected));
                        }
                    }
                }
            }
        }
    }
    return worst;
}

}  // namespace ocfer
