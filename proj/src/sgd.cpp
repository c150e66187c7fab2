// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fovea/sgd.hpp"

#include <cmath>
#include <stdexcept>

namespace fovea {

void sgd_step(std::vector<Param>& params, const SgdConfig& cfg) {
  if (!(cfg.learning_rate > 0.0))
    throw std::invalid_argument("sgd: learning_rate must be > 0");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    throw std::invalid_argument("sgd: momentum must be in [0, 1)");
  if (cfg.weight_decay < 0.0)
    throw std::invalid_argument("sgd: weight_decay must be >= 0");

  for (const Param& p : params) {
    if (p.t.g.size() != p.t.v.size())
      throw std::runtime_error("sgd: missing gradient for " + p.name);
    for (double g : p.t.g)
      if (!std::isfinite(g))
        throw std::runtime_error("sgd: non-finite gradient in " + p.name +
                                 ", step aborted");
  }

  for (Param& p : params) {
    if (p.velocity.size() != p.t.v.size()) p.velocity.assign(p.t.v.size(), 0.0);
    for (size_t i = 0; i < p.t.v.size(); ++i) {
      p.velocity[i] = cfg.momentum * p.velocity[i] + p.t.g[i] +
                      cfg.weight_decay * p.t.v[i];
      p.t.v[i] -= cfg.learning_rate * p.velocity[i];
    }
  }
}

}  // namespace fovea
