// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fovea/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fovea::ops {

namespace {

void check_conv_shapes(const Tensor& in, const Tensor& w, const Tensor& b,
                       int stride, int pad) {
  if (in.shape.size() != 4 || w.shape.size() != 4 || b.shape.size() != 1)
    throw std::invalid_argument("conv2d: bad tensor ranks");
  if (w.dim(2) != w.dim(3) || (w.dim(2) != 1 && w.dim(2) != 3))
    throw std::invalid_argument("conv2d: kernel must be 1x1 or 3x3");
  if (in.dim(1) != w.dim(1))
    throw std::invalid_argument("conv2d: channel mismatch");
  if (b.dim(0) != w.dim(0))
    throw std::invalid_argument("conv2d: bias size mismatch");
  if (stride < 1 || pad < 0) throw std::invalid_argument("conv2d: bad params");
}

inline int out_extent(int in_extent, int k, int stride, int pad) {
  return (in_extent + 2 * pad - k) / stride + 1;
}

}  // namespace

Tensor conv2d(const Tensor& in, const Tensor& w, const Tensor& b, int stride,
              int pad) {
  check_conv_shapes(in, w, b, stride, pad);
  const int N = in.dim(0), Ci = in.dim(1), H = in.dim(2), W = in.dim(3);
  const int Co = w.dim(0), K = w.dim(2);
  const int Ho = out_extent(H, K, stride, pad);
  const int Wo = out_extent(W, K, stride, pad);
  Tensor out({N, Co, Ho, Wo});

#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n) {
    for (int co = 0; co < Co; ++co) {
      double* op = &out.v[out.offset(n, co, 0, 0)];
      const double bias = b.v[static_cast<size_t>(co)];
      for (int i = 0; i < Ho * Wo; ++i) op[i] = bias;
      for (int ci = 0; ci < Ci; ++ci) {
        for (int ky = 0; ky < K; ++ky) {
          for (int kx = 0; kx < K; ++kx) {
            const double wv =
                w.v[((static_cast<size_t>(co) * Ci + ci) * K + ky) * K + kx];
            // ox range with ix = ox*stride + kx - pad inside [0, W)
            int ox_lo = 0;
            while (ox_lo < Wo && ox_lo * stride + kx - pad < 0) ++ox_lo;
            int ox_hi = Wo - 1;
            while (ox_hi >= 0 && ox_hi * stride + kx - pad >= W) --ox_hi;
            for (int oy = 0; oy < Ho; ++oy) {
              const int iy = oy * stride + ky - pad;
              if (iy < 0 || iy >= H) continue;
              const double* ip = &in.v[in.offset(n, ci, iy, 0)];
              double* orow = op + static_cast<size_t>(oy) * Wo;
              if (stride == 1) {
                const int shift = kx - pad;
                for (int ox = ox_lo; ox <= ox_hi; ++ox)
                  orow[ox] += wv * ip[ox + shift];
              } else {
                for (int ox = ox_lo; ox <= ox_hi; ++ox)
                  orow[ox] += wv * ip[ox * stride + kx - pad];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

void conv2d_backward(const Tensor& in, const Tensor& w, const Tensor& dout,
                     int stride, int pad, Tensor* din, Tensor* dw,
                     Tensor* db) {
  const int N = in.dim(0), Ci = in.dim(1), H = in.dim(2), W = in.dim(3);
  const int Co = w.dim(0), K = w.dim(2);
  const int Ho = dout.dim(2), Wo = dout.dim(3);

  if (din) {
    din->ensure_grad();
    // Scatter over output coords within a plane each thread owns; every din
    // element still accumulates in fixed (co, ky, kx) order.
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < N; ++n) {
      for (int ci = 0; ci < Ci; ++ci) {
        double* dp = &din->g[din->offset(n, ci, 0, 0)];
        for (int co = 0; co < Co; ++co) {
          for (int ky = 0; ky < K; ++ky) {
            for (int kx = 0; kx < K; ++kx) {
              const double wv =
                  w.v[((static_cast<size_t>(co) * Ci + ci) * K + ky) * K + kx];
              int ox_lo = 0;
              while (ox_lo < Wo && ox_lo * stride + kx - pad < 0) ++ox_lo;
              int ox_hi = Wo - 1;
              while (ox_hi >= 0 && ox_hi * stride + kx - pad >= W) --ox_hi;
              for (int oy = 0; oy < Ho; ++oy) {
                const int iy = oy * stride + ky - pad;
                if (iy < 0 || iy >= H) continue;
                const double* drow = &dout.v[dout.offset(n, co, oy, 0)];
                double* dirow = dp + static_cast<size_t>(iy) * W;
                if (stride == 1) {
                  const int shift = kx - pad;
                  for (int ox = ox_lo; ox <= ox_hi; ++ox)
                    dirow[ox + shift] += wv * drow[ox];
                } else {
                  for (int ox = ox_lo; ox <= ox_hi; ++ox)
                    dirow[ox * stride + kx - pad] += wv * drow[ox];
                }
              }
            }
          }
        }
      }
    }
  }

  if (dw) {
    dw->ensure_grad();
#pragma omp parallel for schedule(static)
    for (int co = 0; co < Co; ++co) {
      for (int ci = 0; ci < Ci; ++ci) {
        for (int ky = 0; ky < K; ++ky) {
          for (int kx = 0; kx < K; ++kx) {
            double acc = 0.0;
            for (int n = 0; n < N; ++n) {
              for (int oy = 0; oy < Ho; ++oy) {
                const int iy = oy * stride + ky - pad;
                if (iy < 0 || iy >= H) continue;
                const double* ip = &in.v[in.offset(n, ci, iy, 0)];
                const double* drow = &dout.v[dout.offset(n, co, oy, 0)];
                for (int ox = 0; ox < Wo; ++ox) {
                  const int ix = ox * stride + kx - pad;
                  if (ix < 0 || ix >= W) continue;
                  acc += ip[ix] * drow[ox];
                }
              }
            }
            dw->g[((static_cast<size_t>(co) * Ci + ci) * K + ky) * K + kx] +=
                acc;
          }
        }
      }
    }
  }

  if (db) {
    db->ensure_grad();
#pragma omp parallel for schedule(static)
    for (int co = 0; co < Co; ++co) {
      double acc = 0.0;
      for (int n = 0; n < N; ++n) {
        const double* dp = &dout.v[dout.offset(n, co, 0, 0)];
        for (int i = 0; i < Ho * Wo; ++i) acc += dp[i];
      }
      db->g[static_cast<size_t>(co)] += acc;
    }
  }
}

Tensor relu(const Tensor& in) {
  Tensor out = in;
  out.g.clear();
  const std::int64_t n = out.numel();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i)
    out.v[static_cast<size_t>(i)] = std::max(0.0, out.v[static_cast<size_t>(i)]);
  return out;
}

void relu_backward(const Tensor& in, const Tensor& dout, Tensor* din) {
  din->ensure_grad();
  const std::int64_t n = in.numel();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const size_t k = static_cast<size_t>(i);
    if (in.v[k] > 0.0) din->g[k] += dout.v[k];
  }
}

double sigmoid_scalar(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& in) {
  Tensor out = in;
  out.g.clear();
  const std::int64_t n = out.numel();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const size_t k = static_cast<size_t>(i);
    out.v[k] = sigmoid_scalar(out.v[k]);
  }
  return out;
}

void sigmoid_backward(const Tensor& out, const Tensor& dout, Tensor* din) {
  din->ensure_grad();
  const std::int64_t n = out.numel();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const size_t k = static_cast<size_t>(i);
    din->g[k] += dout.v[k] * out.v[k] * (1.0 - out.v[k]);
  }
}

Tensor upsample2x_nearest(const Tensor& in) {
  const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
  Tensor out({N, C, 2 * H, 2 * W});
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      for (int y = 0; y < H; ++y) {
        const double* ip = &in.v[in.offset(n, c, y, 0)];
        double* o0 = &out.v[out.offset(n, c, 2 * y, 0)];
        double* o1 = &out.v[out.offset(n, c, 2 * y + 1, 0)];
        for (int x = 0; x < W; ++x) {
          o0[2 * x] = o0[2 * x + 1] = ip[x];
          o1[2 * x] = o1[2 * x + 1] = ip[x];
        }
      }
    }
  }
  return out;
}

void upsample2x_nearest_backward(const Tensor& dout, Tensor* din) {
  din->ensure_grad();
  const int N = din->dim(0), C = din->dim(1), H = din->dim(2), W = din->dim(3);
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      for (int y = 0; y < H; ++y) {
        const double* d0 = &dout.v[dout.offset(n, c, 2 * y, 0)];
        const double* d1 = &dout.v[dout.offset(n, c, 2 * y + 1, 0)];
        double* dp = &din->g[din->offset(n, c, y, 0)];
        for (int x = 0; x < W; ++x)
          dp[x] += (d0[2 * x] + d0[2 * x + 1]) + (d1[2 * x] + d1[2 * x + 1]);
      }
    }
  }
}

void add_inplace(Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) throw std::invalid_argument("add: shape mismatch");
  const std::int64_t n = a.numel();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i)
    a.v[static_cast<size_t>(i)] += b.v[static_cast<size_t>(i)];
}

}  // namespace fovea::ops
