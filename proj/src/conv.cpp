#include "ocfer/conv.hpp"

#include <stdexcept>
#include <string>

namespace ocfer {

namespace {

struct Geometry {
    std::size_t n, c, h, w;
    std::size_t m, k;
    std::size_t out_h, out_w;
};

Geometry check_geometry(const Tensor& x, const Tensor& weights, const ConvSpec& spec) {
    validate_kernel_shape(weights);
    if (x.rank() != 4) {
        throw std::invalid_argument("conv2d: input must be [N,C,H,W], got " + shape_to_string(x.shape()));
    }
    Geometry g{};
    g.n = x.extent(0);
    g.c = x.extent(1);
    g.h = x.extent(2);
    g.w = x.extent(3);
    g.m = weights.extent(0);
    g.k = weights.extent(2);
    if (weights.extent(1) != g.c) {
        throw std::invalid_argument("conv2d: input has " + std::to_string(g.c) + " channels, kernel expects " +
                                    std::to_string(weights.extent(1)));
    }
    g.out_h = conv_output_extent(g.h, g.k, spec);
    g.out_w = conv_output_extent(g.w, g.k, spec);
    return g;
}

// Column matrix for one image; `image` points at C*H*W values.
void im2col_into(const double* image, std::size_t c, std::size_t h, std::size_t w, std::size_t k,
                 const ConvSpec& spec, std::size_t out_h, std::size_t out_w, double* cols) {
    const std::size_t positions = out_h * out_w;
    const auto pad = static_cast<std::ptrdiff_t>(spec.padding);
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t dh = 0; dh < k; ++dh) {
            for (std::size_t dw = 0; dw < k; ++dw) {
                double* row = cols + ((ch * k + dh) * k + dw) * positions;
                for (std::size_t oh = 0; oh < out_h; ++oh) {
                    const auto ih = static_cast<std::ptrdiff_t>(oh * spec.stride + dh) - pad;
                    for (std::size_t ow = 0; ow < out_w; ++ow) {
                        const auto iw = static_cast<std::ptrdiff_t>(ow * spec.stride + dw) - pad;
                        const bool inside = ih >= 0 && iw >= 0 && ih < static_cast<std::ptrdiff_t>(h) &&
                                            iw < static_cast<std::ptrdiff_t>(w);
                        row[oh * out_w + ow] =
                            inside ? image[(ch * h + static_cast<std::size_t>(ih)) * w + static_cast<std::size_t>(iw)]
                                   : 0.0;
                    }
                }
            }
        }
    }
}

// Scatter-add of a column matrix back onto the image frame (adjoint of im2col).
void col2im_add(const double* cols, std::size_t c, std::size_t h, std::size_t w, std::size_t k,
                const ConvSpec& spec, std::size_t out_h, std::size_t out_w, double* image) {
    const std::size_t positions = out_h * out_w;
    const auto pad = static_cast<std::ptrdiff_t>(spec.padding);
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t dh = 0; dh < k; ++dh) {
            for (std::size_t dw = 0; dw < k; ++dw) {
                const double* row = cols + ((ch * k + dh) * k + dw) * positions;
                for (std::size_t oh = 0; oh < out_h; ++oh) {
                    const auto ih = static_cast<std::ptrdiff_t>(oh * spec.stride + dh) - pad;
                    if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(h)) continue;
                    for (std::size_t ow = 0; ow < out_w; ++ow) {
                        const auto iw = static_cast<std::ptrdiff_t>(ow * spec.stride + dw) - pad;
                        if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(w)) continue;
                        image[(ch * h + static_cast<std::size_t>(ih)) * w + static_cast<std::size_t>(iw)] +=
                            row[oh * out_w + ow];
                    }
                }
            }
        }
    }
}

}  // namespace

void validate_kernel_shape(const Tensor& weights) {
    if (weights.rank() != 4 || weights.extent(2) != weights.extent(3)) {
        throw std::invalid_argument("kernel must be [M,C,k,k], got " + shape_to_string(weights.shape()));
    }
}

Kernel::Kernel(Tensor weights) : weights_(std::move(weights)) { validate_kernel_shape(weights_); }

std::size_t conv_output_extent(std::size_t in, std::size_t k, const ConvSpec& spec) {
    if (spec.stride == 0) throw std::invalid_argument("conv stride must be positive");
    const std::size_t padded = in + 2 * spec.padding;
    if (padded < k) {
        throw std::invalid_argument("conv window " + std::to_string(k) + " exceeds padded extent " +
                                    std::to_string(padded));
    }
    const std::size_t span = padded - k;
    if (spec.rounding == Rounding::exact && span % spec.stride != 0) {
        throw std::invalid_argument("conv geometry not integral: (" + std::to_string(in) + "+2*" +
                                    std::to_string(spec.padding) + "-" + std::to_string(k) + ")/" +
                                    std::to_string(spec.stride));
    }
    return span / spec.stride + 1;
}

Tensor im2col(const Tensor& x, std::size_t k, const ConvSpec& spec) {
    if (x.rank() != 3) throw std::invalid_argument("im2col: input must be [C,H,W]");
    if (k == 0) throw std::invalid_argument("im2col: kernel size must be positive");
    const std::size_t c = x.extent(0), h = x.extent(1), w = x.extent(2);
    const std::size_t out_h = conv_output_extent(h, k, spec);
    const std::size_t out_w = conv_output_extent(w, k, spec);
    Tensor cols({c * k * k, out_h * out_w});
    im2col_into(x.data().data(), c, h, w, k, spec, out_h, out_w, cols.data().data());
    return cols;
}

Tensor conv2d_forward(const Tensor& x, const Kernel& kernel, const ConvSpec& spec) {
    return conv2d_forward(x, kernel.weights(), spec);
}

Tensor conv2d_forward(const Tensor& x, const Tensor& weights, const ConvSpec& spec) {
    const Geometry g = check_geometry(x, weights, spec);
    const std::size_t rows = g.c * g.k * g.k;
    const std::size_t positions = g.out_h * g.out_w;
    Tensor y({g.n, g.m, g.out_h, g.out_w});
    std::vector<double> cols(rows * positions);
    for (std::size_t b = 0; b < g.n; ++b) {
        im2col_into(x.data().data() + b * g.c * g.h * g.w, g.c, g.h, g.w, g.k, spec, g.out_h, g.out_w,
                    cols.data());
        matmul(weights.data(), cols, y.data().subspan(b * g.m * positions, g.m * positions), g.m, rows,
               positions);
    }
    return y;
}

ConvGrads conv2d_backward(const Tensor& grad_y, const Tensor& x, const Kernel& kernel, const ConvSpec& spec) {
    return conv2d_backward(grad_y, x, kernel.weights(), spec);
}

ConvGrads conv2d_backward(const Tensor& grad_y, const Tensor& x, const Tensor& weights, const ConvSpec& spec) {
    const Geometry g = check_geometry(x, weights, spec);
    const Shape expected{g.n, g.m, g.out_h, g.out_w};
    if (grad_y.shape() != expected) {
        throw std::invalid_argument("conv2d_backward: grad_y shape " + shape_to_string(grad_y.shape()) +
                                    ", expected " + shape_to_string(expected));
    }
    const std::size_t rows = g.c * g.k * g.k;
    const std::size_t positions = g.out_h * g.out_w;
    ConvGrads out{Tensor(x.shape()), Tensor(weights.shape())};
    std::vector<double> cols(rows * positions);
    std::vector<double> grad_cols(rows * positions);
    double* gk = out.grad_k.data().data();
    const double* w = weights.data().data();

    for (std::size_t b = 0; b < g.n; ++b) {
        const double* gy = grad_y.data().data() + b * g.m * positions;
        im2col_into(x.data().data() + b * g.c * g.h * g.w, g.c, g.h, g.w, g.k, spec, g.out_h, g.out_w,
                    cols.data());
        // grad_k[m, r] += sum_p gy[m, p] * cols[r, p]
        for (std::size_t m = 0; m < g.m; ++m) {
            const double* gym = gy + m * positions;
            for (std::size_t r = 0; r < rows; ++r) {
                const double* cr = cols.data() + r * positions;
                double acc = 0.0;
                for (std::size_t p = 0; p < positions; ++p) acc += gym[p] * cr[p];
                gk[m * rows + r] += acc;
            }
        }
        // grad_cols[r, p] = sum_m w[m, r] * gy[m, p]
        std::fill(grad_cols.begin(), grad_cols.end(), 0.0);
        for (std::size_t m = 0; m < g.m; ++m) {
            const double* gym = gy + m * positions;
            for (std::size_t r = 0; r < rows; ++r) {
                const double wv = w[m * rows + r];
                double* gc = grad_cols.data() + r * positions;
                for (std::size_t p = 0; p < positions; ++p) gc[p] += wv * gym[p];
            }
        }
        col2im_add(grad_cols.data(), g.c, g.h, g.w, g.k, spec, g.out_h, g.out_w,
                   out.grad_x.data().data() + b * g.c * g.h * g.w);
    }
    return out;
}

Tensor unrolled_conv_matrix(const Kernel& kernel, std::size_t in_h, std::size_t in_w, const ConvSpec& spec) {
    const std::size_t m = kernel.m(), c = kernel.c(), k = kernel.k();
    const std::size_t out_h = conv_output_extent(in_h, k, spec);
    const std::size_t out_w = conv_output_extent(in_w, k, spec);
    const std::size_t ph = in_h + 2 * spec.padding;
    const std::size_t pw = in_w + 2 * spec.padding;
    Tensor t({m * out_h * out_w, c * ph * pw});
    const Tensor& wts = kernel.weights();
    for (std::size_t f = 0; f < m; ++f) {
        for (std::size_t oh = 0; oh < out_h; ++oh) {
            for (std::size_t ow = 0; ow < out_w; ++ow) {
                const std::size_t row = (f * out_h + oh) * out_w + ow;
                for (std::size_t ch = 0; ch < c; ++ch) {
                    for (std::size_t dh = 0; dh < k; ++dh) {
                        for (std::size_t dw = 0; dw < k; ++dw) {
                            const std::size_t col =
                                (ch * ph + oh * spec.stride + dh) * pw + ow * spec.stride + dw;
                            t.at(row, col) = wts.at(f, ch, dh, dw);
                        }
                    }
                }
            }
        }
    }
    return t;
}

Tensor pad_spatial(const Tensor& x, std::size_t padding) {
    if (x.rank() < 2) throw std::invalid_argument("pad_spatial: rank must be >= 2");
    const std::size_t h = x.extent(x.rank() - 2), w = x.extent(x.rank() - 1);
    const std::size_t ph = h + 2 * padding, pw = w + 2 * padding;
    Shape shape = x.shape();
    shape[shape.size() - 2] = ph;
    shape[shape.size() - 1] = pw;
    Tensor out(shape);
    const std::size_t planes = x.size() / (h * w);
    for (std::size_t p = 0; p < planes; ++p) {
        for (std::size_t i = 0; i < h; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                out[(p * ph + i + padding) * pw + j + padding] = x[(p * h + i) * w + j];
            }
        }
    }
    return out;
}

}  // namespace ocfer
