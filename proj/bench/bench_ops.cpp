// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

// Times the OpenMP conv kernels against the serial reference at the shapes
// the detector actually runs.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "fovea/ops.hpp"
#include "fovea/rng.hpp"
#include "fovea/threads.hpp"
#include "serial_kernels.hpp"

using fovea::Rng;
using fovea::Tensor;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.v) v = rng.normal();
  return t;
}

double time_of(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / reps;
}

void bench_case(const char* name, int n, int ci, int co, int hw, int k,
                int stride, int reps) {
  Rng rng(42);
  const Tensor in = random_tensor({n, ci, hw, hw}, rng);
  const Tensor w = random_tensor({co, ci, k, k}, rng);
  const Tensor b = random_tensor({co}, rng);
  const int pad = k / 2;

  const double t_omp =
      time_of([&] { fovea::ops::conv2d(in, w, b, stride, pad); }, reps);
  const double t_ref =
      time_of([&] { fovea::ref::conv2d(in, w, b, stride, pad); }, reps);

  const Tensor out = fovea::ops::conv2d(in, w, b, stride, pad);
  const double macs = static_cast<double>(out.numel()) * ci * k * k;
  std::printf("%-28s omp %8.3f ms (%6.2f GFLOP/s)   serial %8.3f ms   speedup %.2fx\n",
              name, t_omp * 1e3, 2.0 * macs / t_omp / 1e9, t_ref * 1e3,
              t_ref / t_omp);

  Tensor din(in.shape), dw(w.shape), db(b.shape);
  const double t_bwd = time_of(
      [&] {
        din.zero_grad();
        dw.zero_grad();
        db.zero_grad();
        fovea::ops::conv2d_backward(in, w, out, stride, pad, &din, &dw, &db);
      },
      reps);
  std::printf("%-28s backward %5.3f ms\n", name, t_bwd * 1e3);
}

}  // namespace

int main() {
  const int threads = fovea::configure_threads_from_env();
  std::printf("threads: %d\n", threads);
  bench_case("head 3x3 32ch 32x32 (P2)", 8, 32, 32, 32, 3, 1, 5);
  bench_case("backbone 3x3 s2 64->32", 8, 32, 32, 64, 3, 2, 5);
  bench_case("lateral 1x1 32ch 32x32", 8, 32, 32, 32, 1, 1, 20);
  bench_case("tiny 3x3 4ch 16x16", 1, 4, 4, 16, 3, 1, 50);
  return 0;
}
