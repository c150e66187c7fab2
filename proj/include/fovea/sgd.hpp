// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "fovea/tensor.hpp"

namespace fovea {

struct SgdConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0001;
};

// A named trainable tensor with its momentum buffer.
struct Param {
  std::string name;
  Tensor t;                      // values + grad
  std::vector<double> velocity;  // momentum state, lazily sized

  Param() = default;
  Param(std::string n, Tensor tensor) : name(std::move(n)), t(std::move(tensor)) {
    t.ensure_grad();
  }
};

// v <- momentum*v + grad + weight_decay*param; param <- param - lr*v.
// Throws (without touching any parameter) if any gradient is non-finite,
// naming the offending parameter.
void sgd_step(std::vector<Param>& params, const SgdConfig& cfg);

}  // namespace fovea
