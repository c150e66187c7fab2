// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fovea/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fovea {

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative tensor dimension");
    n *= d;
  }
  v.assign(static_cast<size_t>(n), 0.0);
}

std::int64_t Tensor::numel() const {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

void Tensor::ensure_grad() {
  if (g.size() != v.size()) g.assign(v.size(), 0.0);
}

void Tensor::zero_grad() {
  ensure_grad();
  std::fill(g.begin(), g.end(), 0.0);
}

void check_finite(const Tensor& t, const char* what) {
  for (double x : t.v)
    if (!std::isfinite(x))
      throw std::runtime_error(std::string("non-finite value in ") + what);
}

}  // namespace fovea
