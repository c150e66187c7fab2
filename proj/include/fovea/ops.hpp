// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "fovea/tensor.hpp"

namespace fovea::ops {

// All forward kernels are OpenMP-parallel over disjoint output slices and all
// backward kernels accumulate (+=) into caller-owned gradient buffers, each
// element summed in a fixed order, so results are bit-identical for any
// thread count. A serial reference lives in reference/serial_kernels.hpp.

// Cross-correlation, NCHW. in: (N,Ci,H,W), w: (Co,Ci,k,k), b: (Co).
// Kernel must be 1x1 or 3x3.
Tensor conv2d(const Tensor& in, const Tensor& w, const Tensor& b, int stride,
              int pad);

// Accumulates into din.g / dw.g / db.g (any may be nullptr to skip).
void conv2d_backward(const Tensor& in, const Tensor& w, const Tensor& dout,
                     int stride, int pad, Tensor* din, Tensor* dw, Tensor* db);

Tensor relu(const Tensor& in);
void relu_backward(const Tensor& in, const Tensor& dout, Tensor* din);

// Overflow-safe elementwise logistic.
Tensor sigmoid(const Tensor& in);
void sigmoid_backward(const Tensor& out, const Tensor& dout, Tensor* din);
double sigmoid_scalar(double z);

// Nearest-neighbour 2x upsampling; backward is the 2x2 block-sum adjoint.
Tensor upsample2x_nearest(const Tensor& in);
void upsample2x_nearest_backward(const Tensor& dout, Tensor* din);

// a.v += b.v elementwise (shapes must match).
void add_inplace(Tensor& a, const Tensor& b);

}  // namespace fovea::ops
