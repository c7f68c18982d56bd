#pragma once

#include "svsr/tensor.hpp"

namespace svsr {

// Real/imaginary pair over the same shape; both parts live on the tape.
template <typename T>
struct ComplexTensorT {
    TensorT<T> re;
    TensorT<T> im;
};

using ComplexTensor = ComplexTensorT<double>;

// Orthonormal 2-D DFT (scale 1/sqrt(HW) both directions, so Parseval holds
// exactly and ifft2(fft2(x)) == x). Accepts H x W or H x W x C; rank-3 input
// is transformed channel by channel. Linear, hence exactly differentiable.
template <typename T>
ComplexTensorT<T> fft2(const TensorT<T>& x);

// Real part of the orthonormal inverse 2-D DFT.
template <typename T>
TensorT<T> ifft2_real(const ComplexTensorT<T>& x);

}  // namespace svsr
