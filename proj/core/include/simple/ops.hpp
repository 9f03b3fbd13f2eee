#pragma once

#include <cstddef>
#include <vector>

#include "simple/tensor.hpp"

namespace simple {

// Differentiable ops. Each works on detached and tracked tensors alike: if
// any input is tracked the result is recorded on that tape (all tracked
// inputs must share one tape), otherwise the result is detached. Gradients
// never flow into detached inputs.

// Same storage viewed under a new shape of equal element count.
Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);

// Elementwise, shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

// Full reductions to a scalar of shape [1].
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// a [m,k] x b [k,n] -> [m,n].
Tensor matmul(const Tensor& a, const Tensor& b);

// a [n,l] + v [l] broadcast over rows.
Tensor add_rowvec(const Tensor& a, const Tensor& v);

Tensor relu(const Tensor& a);

// Elementwise max(a, c). Gradient passes only where a > c.
Tensor clamp_min(const Tensor& a, double c);

// Elementwise square root. Inputs must be >= 0; the gradient is 1/(2*sqrt(a))
// so differentiating at exact zeros is the caller's responsibility to avoid.
Tensor sqrt_t(const Tensor& a);

// Elementwise natural log. Inputs must be strictly positive; clamp_min first
// when zeros are possible.
Tensor log_t(const Tensor& a);

// Row-wise softmax of a [n,l] matrix, numerically stabilized by the row max.
Tensor softmax_rows(const Tensor& a);

// Cross-correlation of x [b,c,h,w] with filters w [f,c,kh,kw], zero padding,
// output [b,f,h',w'] where h' = (h+2*pad-kh)/stride + 1. Throws ConfigError
// when the output size is not integral. No bias; see add_chanvec.
Tensor conv2d(const Tensor& x, const Tensor& w, std::size_t stride,
              std::size_t pad);

// x [b,c,h,w] + v [c] broadcast over batch and space.
Tensor add_chanvec(const Tensor& x, const Tensor& v);

// 2x2 max pooling with stride 2; h and w must be even. Ties break to the
// first element in scan order.
Tensor maxpool2x2(const Tensor& x);

// Row-wise argmax of [n,l]; ties break to the lowest index.
std::vector<std::size_t> argmax_rows(const Tensor& a);

namespace kernels {

// Raw accumulating matmul microkernels. C is never cleared.
// C[m,n] += A[m,k] * B[k,n]
void mm_nn_acc(const double* A, const double* B, double* C, std::size_t m,
               std::size_t k, std::size_t n);
// C[m,k] += A[m,n] * B[k,n]^T
void mm_nt_acc(const double* A, const double* B, double* C, std::size_t m,
               std::size_t n, std::size_t k);
// C[k,n] += A[m,k]^T * B[m,n]
void mm_tn_acc(const double* A, const double* B, double* C, std::size_t m,
               std::size_t k, std::size_t n);

// Unfold one c*h*w image into patch columns [c*kh*kw, hout*wout] for
// convolution with zero padding.
void im2col(const double* img, std::size_t c, std::size_t h, std::size_t w,
            std::size_t kh, std::size_t kw, std::size_t stride,
            std::size_t pad, double* cols);
// Scatter-add of patch-column gradients back onto the image.
void col2im_acc(const double* cols, std::size_t c, std::size_t h,
                std::size_t w, std::size_t kh, std::size_t kw,
                std::size_t stride, std::size_t pad, double* img);

}  // namespace kernels

}  // namespace simple
