#pragma once

#include <array>

#include "mgan/tensor.hpp"

namespace mgan::conv {

// im2col + GEMM 3D convolution primitives on [C,D,H,W] tensors with cubic
// kernels and zero padding. All loops run in a fixed order and BLAS is pinned
// to one thread, so results are bitwise reproducible.

int conv_out_dim(int n, int k, int stride, int pad);

// x [Cin,D,H,W], w [Cout,Cin,k,k,k] -> [Cout,Do,Ho,Wo]
Tensor conv3d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad);

// grad wrt input: grad_out [Cout,Do,Ho,Wo] -> [Cin,D,H,W]
Tensor conv3d_backward_input(const Tensor& grad_out, const Tensor& w, const std::array<int, 4>& in_shape,
                             int stride, int pad);

// grad wrt weight: -> [Cout,Cin,k,k,k]
Tensor conv3d_backward_weight(const Tensor& grad_out, const Tensor& x, int k, int stride, int pad);

// grad wrt bias: -> [Cout]
Tensor conv3d_backward_bias(const Tensor& grad_out);

// Transposed convolution, weight layout [Cin,Cout,k,k,k].
// Output dim: (n-1)*stride - 2*pad + k + out_pad.
Tensor conv_transpose3d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad,
                                int out_pad);
Tensor conv_transpose3d_backward_input(const Tensor& grad_out, const Tensor& w, const std::array<int, 4>& in_shape,
                                       int stride, int pad);
Tensor conv_transpose3d_backward_weight(const Tensor& grad_out, const Tensor& x, int k, int stride, int pad);

}  // namespace mgan::conv
