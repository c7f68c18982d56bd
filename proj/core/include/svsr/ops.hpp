#pragma once

#include "svsr/tensor.hpp"

namespace svsr {

enum class Padding { kReplicate, kZero };

// Elementwise binary ops (equal shapes).
template <typename T> TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b);

// Elementwise ops against a plain constant.
template <typename T> TensorT<T> add_scalar(const TensorT<T>& a, double c);
template <typename T> TensorT<T> mul_scalar(const TensorT<T>& a, double c);
template <typename T> TensorT<T> neg(const TensorT<T>& a);

// Elementwise unary ops.
template <typename T> TensorT<T> exp(const TensorT<T>& a);
template <typename T> TensorT<T> sqrt(const TensorT<T>& a);
template <typename T> TensorT<T> reciprocal(const TensorT<T>& a);
template <typename T> TensorT<T> abs(const TensorT<T>& a);       // subgradient 0 at 0
template <typename T> TensorT<T> sigmoid(const TensorT<T>& a);
template <typename T> TensorT<T> softplus(const TensorT<T>& a);  // ln(1 + e^x)
template <typename T> TensorT<T> leaky_relu(const TensorT<T>& a, double slope);
template <typename T> TensorT<T> cos(const TensorT<T>& a);
template <typename T> TensorT<T> sin(const TensorT<T>& a);

// x mod period, mapped into [0, period); gradient passes through unchanged.
template <typename T> TensorT<T> wrap_angle(const TensorT<T>& a, double period);

// Reductions / indexing.
template <typename T> TensorT<T> sum(const TensorT<T>& a);            // -> [1]
template <typename T> TensorT<T> index(const TensorT<T>& a, int i);   // flat -> [1]

// Broadcast against a 1-element tensor (both operands may carry grad).
template <typename T> TensorT<T> scale_by(const TensorT<T>& a, const TensorT<T>& s);
template <typename T> TensorT<T> div_by(const TensorT<T>& a, const TensorT<T>& s);

// Channel ops on H x W x C tensors with [C] vectors.
template <typename T> TensorT<T> channel_mean(const TensorT<T>& x);
template <typename T> TensorT<T> add_channels(const TensorT<T>& x, const TensorT<T>& b);
template <typename T> TensorT<T> mul_channels(const TensorT<T>& x, const TensorT<T>& s);

// Pixelwise product of an H x W x C tensor with an H x W map.
template <typename T> TensorT<T> mul_map(const TensorT<T>& x, const TensorT<T>& map);

template <typename T> TensorT<T> concat_channels(const TensorT<T>& a, const TensorT<T>& b);

// Forward differences along width / height; zero in the last column / row.
// Rank 2 or 3.
template <typename T> TensorT<T> diff_x(const TensorT<T>& a);
template <typename T> TensorT<T> diff_y(const TensorT<T>& a);

// Keeps every s-th pixel starting at offset (0, 0). Spatial dims must divide s.
template <typename T> TensorT<T> downsample(const TensorT<T>& a, int s);

// 2x2 mean pooling / nearest-neighbor 2x upsampling (H, W even for pooling).
template <typename T> TensorT<T> avg_pool2(const TensorT<T>& a);
template <typename T> TensorT<T> upsample_nearest2(const TensorT<T>& a);

// Same-size sliding-window correlation. Input H x W x Ci, kernel
// kh x kw x Ci x Co with odd kh, kw:
//   out[y, x, co] = sum_{ky, kx, ci} pad(in)[y + ky, x + kx, ci] * k[ky, kx, ci, co]
// Differentiable w.r.t. both operands.
template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& kernel,
                  Padding padding = Padding::kReplicate);

// One kh x kw kernel applied independently to every channel of H x W x C.
template <typename T>
TensorT<T> conv2d_shared(const TensorT<T>& input, const TensorT<T>& kernel,
                         Padding padding = Padding::kReplicate);

// Per-channel normalization over the spatial dims followed by a learnable
// affine map: gamma, beta are [C].
template <typename T>
TensorT<T> instance_norm(const TensorT<T>& x, const TensorT<T>& gamma,
                         const TensorT<T>& beta, double eps = 1e-5);

}  // namespace svsr
