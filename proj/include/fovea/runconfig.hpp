// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include <json.hpp>

#include "fovea/dataset.hpp"
#include "fovea/detector.hpp"
#include "fovea/inference.hpp"
#include "fovea/trainer.hpp"

namespace fovea {

// One config schema shared by every CLI command; the resolved form is written
// into each output directory.
struct RunConfig {
  DatasetSpec dataset;
  DetectorConfig detector;
  AssignConfig assign;
  TrainConfig train;
  InferenceParams inference;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_file(const std::string& path);
  void write(const std::string& path) const;
};

}  // namespace fovea
