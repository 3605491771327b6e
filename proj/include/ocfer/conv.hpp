#pragma once

#include <cstddef>

#include "ocfer/tensor.hpp"

namespace ocfer {

/// How output extents are derived from (H + 2P - k) / S.
///
/// `exact` rejects geometries where the division leaves a remainder. `floor`
/// drops trailing input rows/columns that do not fill a complete window; it
/// exists for stride-2 downsampling on even-sized feature maps.
enum class Rounding { exact, floor };

struct ConvSpec {
    std::size_t padding = 0;
    std::size_t stride = 1;
    Rounding rounding = Rounding::exact;
};

/// Convolution weights, shape [M, C, k, k].
class Kernel {
public:
    explicit Kernel(Tensor weights);

    std::size_t m() const noexcept { return weights_.extent(0); }
    std::size_t c() const noexcept { return weights_.extent(1); }
    std::size_t k() const noexcept { return weights_.extent(2); }
    const Tensor& weights() const noexcept { return weights_; }
    Tensor& weights() noexcept { return weights_; }

private:
    Tensor weights_;
};

/// Throws if `weights` is not a square [M, C, k, k] tensor.
void validate_kernel_shape(const Tensor& weights);

/// Output extent of a k-wide window over `in` cells; throws std::invalid_argument
/// when the window does not fit or the geometry is not integral under `exact`.
std::size_t conv_output_extent(std::size_t in, std::size_t k, const ConvSpec& spec);

/// Lowers x[C, H, W] to [C*k*k, H'*W']. Column j is the receptive field of
/// output position j; rows run over (c, dh, dw) row-major.
Tensor im2col(const Tensor& x, std::size_t k, const ConvSpec& spec);

/// Cross-correlation (no kernel flip) with zero padding.
/// x: [N, C, H, W] -> [N, M, H', W'].
Tensor conv2d_forward(const Tensor& x, const Kernel& kernel, const ConvSpec& spec);
Tensor conv2d_forward(const Tensor& x, const Tensor& weights, const ConvSpec& spec);

struct ConvGrads {
    Tensor grad_x;  // [N, C, H, W]
    Tensor grad_k;  // [M, C, k, k]
};

ConvGrads conv2d_backward(const Tensor& grad_y, const Tensor& x, const Kernel& kernel, const ConvSpec& spec);
ConvGrads conv2d_backward(const Tensor& grad_y, const Tensor& x, const Tensor& weights, const ConvSpec& spec);

/// Explicit (doubly block-Toeplitz) matrix of the convolution, expressed over
/// the zero-padded input frame: shape [M*H'*W', C*(in_h+2P)*(in_w+2P)].
/// Multiplying by the flattened padded input reproduces conv2d_forward.
Tensor unrolled_conv_matrix(const Kernel& kernel, std::size_t in_h, std::size_t in_w, const ConvSpec& spec);

/// Zero-pads the two trailing (spatial) axes of a rank-3 or rank-4 tensor.
Tensor pad_spatial(const Tensor& x, std::size_t padding);

}  // namespace ocfer
