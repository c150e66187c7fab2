// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fovea/sgd.hpp"

namespace fovea {

// Checkpoint file layout: one line of JSON (names, shapes, hyperparameters,
// seed) terminated by '\n', followed by the raw little-endian 64-bit float
// value buffers concatenated in header order.
void save_checkpoint(const std::string& path, const std::vector<Param>& params,
                     const nlohmann::json& hyper, std::uint64_t seed);

struct LoadedCheckpoint {
  nlohmann::json hyper;
  std::uint64_t seed = 0;
  std::vector<std::string> names;
  std::vector<Tensor> tensors;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace fovea
