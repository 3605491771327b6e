#pragma once

#include <cstddef>

#include "ocfer/conv.hpp"
#include "ocfer/tensor.hpp"

namespace ocfer {

/// Geometry of a kernel's self-convolution: the stride of the regularized
/// layer and the padding applied when the kernel is convolved with itself.
/// The stride must divide the padding so the spatial extent 2P/S+1 is integral.
struct OrthoSpec {
    std::size_t stride = 1;
    std::size_t self_padding = 0;

    /// Spec for a k x k layer of the given stride, padding from self_padding().
    static OrthoSpec for_layer(std::size_t k, std::size_t stride);

    void validate() const;
    std::size_t extent() const { return 2 * self_padding / stride + 1; }
    std::size_t center() const { return self_padding / stride; }
};

/// Largest multiple of `s` not exceeding k-1: every overlapping shift of a
/// k x k kernel with itself at stride s is represented.
std::size_t self_padding(std::size_t k, std::size_t s);

/// Z = Conv(K, K, padding=P, stride=S), shape [M, M, 2P/S+1, 2P/S+1].
/// Z[i, j, a, b] is the inner product of filter i with filter j, the latter
/// shifted by (S*a - P, S*b - P).
Tensor self_convolution(const Kernel& kernel, const OrthoSpec& spec);

/// Zero except an M x M identity at the spatial center.
class OrthoTarget {
public:
    OrthoTarget(std::size_t m, const OrthoSpec& spec);

    const Tensor& tensor() const noexcept { return tensor_; }

private:
    Tensor tensor_;
};

OrthoTarget ortho_target(std::size_t m, std::size_t p, std::size_t s);

/// ||Conv(K, K) - I_r0||_F^2 over the full [M, M, e, e] tensor.
double ortho_loss(const Kernel& kernel, const OrthoSpec& spec);

/// Gradient of ortho_loss. K enters both operands of the self-convolution, so
/// this is the sum of the input-side and weight-side adjoints.
Tensor ortho_loss_grad(const Kernel& kernel, const OrthoSpec& spec);

struct OrthoLossGrad {
    double loss = 0.0;
    Tensor grad;
};

/// Loss and gradient sharing one self-convolution.
OrthoLossGrad ortho_loss_and_grad(const Kernel& kernel, const OrthoSpec& spec);

/// Compares the self-convolution against inner products of rows of the
/// unrolled convolution matrix of a layer applied to an in_h x in_w input.
///
/// The layer uses padding (k-1)/2 and the spec's stride. Only interior rows
/// (receptive field entirely inside the unpadded input) take part. Row pairs
/// whose spatial offset lies within +-P/S output cells must match the
/// corresponding self-convolution entry; all other pairs must be orthogonal.
/// Returns the largest absolute discrepancy.
double toeplitz_interior_check(const Kernel& kernel, const OrthoSpec& spec, std::size_t in_h, std::size_t in_w);

/// Same check against a caller-supplied self-convolution tensor.
double toeplitz_interior_check(const Kernel& kernel, const Tensor& self_conv, const OrthoSpec& spec,
                               std::size_t in_h, std::size_t in_w);

}  // namespace ocfer
