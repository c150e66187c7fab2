// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "serial_kernels.hpp"

namespace fovea::ref {

Tensor conv2d(const Tensor& in, const Tensor& w, const Tensor& b, int stride,
              int pad) {
  const int N = in.dim(0), Ci = in.dim(1), H = in.dim(2), W = in.dim(3);
  const int Co = w.dim(0), K = w.dim(2);
  const int Ho = (H + 2 * pad - K) / stride + 1;
  const int Wo = (W + 2 * pad - K) / stride + 1;
  Tensor out({N, Co, Ho, Wo});
  for (int n = 0; n < N; ++n)
    for (int co = 0; co < Co; ++co)
      for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox) {
          double acc = b.v[static_cast<size_t>(co)];
          for (int ci = 0; ci < Ci; ++ci)
            for (int ky = 0; ky < K; ++ky)
              for (int kx = 0; kx < K; ++kx) {
                const int iy = oy * stride + ky - pad;
                const int ix = ox * stride + kx - pad;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                acc += w.v[((static_cast<size_t>(co) * Ci + ci) * K + ky) * K +
                           kx] *
                       in.at(n, ci, iy, ix);
              }
          out.at(n, co, oy, ox) = acc;
        }
  return out;
}

void conv2d_backward(const Tensor& in, const Tensor& w, const Tensor& dout,
                     int stride, int pad, Tensor* din, Tensor* dw,
                     Tensor* db) {
  const int N = in.dim(0), Ci = in.dim(1), H = in.dim(2), W = in.dim(3);
  const int Co = w.dim(0), K = w.dim(2);
  const int Ho = dout.dim(2), Wo = dout.dim(3);
  if (din) din->ensure_grad();
  if (dw) dw->ensure_grad();
  if (db) db->ensure_grad();
  for (int n = 0; n < N; ++n)
    for (int co = 0; co < Co; ++co)
      for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox) {
          const double d = dout.at(n, co, oy, ox);
          if (db) db->g[static_cast<size_t>(co)] += d;
          for (int ci = 0; ci < Ci; ++ci)
            for (int ky = 0; ky < K; ++ky)
              for (int kx = 0; kx < K; ++kx) {
                const int iy = oy * stride + ky - pad;
                const int ix = ox * stride + kx - pad;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                const size_t wi =
                    ((static_cast<size_t>(co) * Ci + ci) * K + ky) * K + kx;
                if (dw) dw->g[wi] += in.at(n, ci, iy, ix) * d;
                if (din) din->g[din->offset(n, ci, iy, ix)] += w.v[wi] * d;
              }
        }
}

Tensor upsample2x_nearest(const Tensor& in) {
  const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
  Tensor out({N, C, 2 * H, 2 * W});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < 2 * H; ++y)
        for (int x = 0; x < 2 * W; ++x)
          out.at(n, c, y, x) = in.at(n, c, y / 2, x / 2);
  return out;
}

}  // namespace fovea::ref
