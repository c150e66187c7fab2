// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "fovea/tensor.hpp"

// Single-threaded straight-loop kernels. These stay deliberately naive and
// independent of the OpenMP implementations in ops.cpp; tests compare the two
// and the bench target times them against each other.
namespace fovea::ref {

// Per output element: bias first, then taps summed in (ci, ky, kx) order,
// which is the same per-element order ops::conv2d uses.
Tensor conv2d(const Tensor& in, const Tensor& w, const Tensor& b, int stride,
              int pad);

// Scatter-form adjoint. Accumulates into din/dw/db grad buffers.
void conv2d_backward(const Tensor& in, const Tensor& w, const Tensor& dout,
                     int stride, int pad, Tensor* din, Tensor* dw, Tensor* db);

Tensor upsample2x_nearest(const Tensor& in);

}  // namespace fovea::ref
