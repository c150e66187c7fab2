// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace fovea {

// Dense double-precision array in NCHW order with an optional paired
// gradient buffer. Plain value type; ops are free functions in ops.hpp.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;  // values
  std::vector<double> g;  // gradient, empty until ensure_grad()

  Tensor() = default;
  explicit Tensor(std::vector<int> s);
  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

  std::int64_t numel() const;
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  bool has_grad() const { return !g.empty(); }
  void ensure_grad();
  void zero_grad();

  // NCHW accessors (4-d tensors).
  double& at(int n, int c, int y, int x) { return v[offset(n, c, y, x)]; }
  double at(int n, int c, int y, int x) const { return v[offset(n, c, y, x)]; }
  std::size_t offset(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + y) *
               shape[3] +
           x;
  }
};

// Throws unless every value is finite.
void check_finite(const Tensor& t, const char* what);

}  // namespace fovea
