// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fovea/assignment.hpp"
#include "fovea/loss.hpp"
#include "fovea/sgd.hpp"
#include "fovea/tensor.hpp"

namespace fovea {

struct DetectorConfig {
  int num_classes = 3;
  std::vector<int> levels = {2, 3, 4};  // pyramid level indices, stride 2^l
  int channels = 32;
  int head_depth = 2;  // convs per head branch before the output conv
  bool class_agnostic = false;
  double prior_prob = 0.01;  // initial P(positive) for the cls output bias

  int cls_channels() const { return class_agnostic ? 1 : num_classes; }
  void validate() const;
};

void to_json(nlohmann::json& j, const DetectorConfig& c);
void from_json(const nlohmann::json& j, DetectorConfig& c);

// Raw head outputs, one entry per pyramid level, batched NCHW.
struct HeadOutputs {
  std::vector<Tensor> cls;  // (N, C, H, W) logits
  std::vector<Tensor> box;  // (N, 4, H, W) offsets
};

// Backbone (stem + one down/refine stage per level) + FPN (1x1 lateral,
// 2x nearest top-down sum, 3x3 smoothing) + a two-branch head shared across
// all levels.
class Detector {
 public:
  Detector(const DetectorConfig& cfg, std::uint64_t seed);

  const DetectorConfig& config() const { return cfg_; }
  PyramidSpec pyramid_for(int image_w, int image_h) const;

  // images: (N, 1, H, W) with H, W divisible by the largest stride.
  HeadOutputs forward(const Tensor& images) const;

  // Forward, shared-normalizer loss, backward, SGD step. targets[n] holds the
  // per-level maps for image n. Deterministic given identical inputs.
  LossReport train_step(const Tensor& images,
                        const std::vector<std::vector<TargetMaps>>& targets,
                        const LossParams& loss_params, const SgdConfig& sgd);

  // Loss and parameter gradients without the SGD update (gradient checks).
  LossReport compute_gradients(
      const Tensor& images, const std::vector<std::vector<TargetMaps>>& targets,
      const LossParams& loss_params);

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  Param& param(const std::string& name);
  const Param& param(const std::string& name) const;

  void save(const std::string& path, std::uint64_t seed,
            const nlohmann::json& extra_hyper = nlohmann::json::object()) const;
  static Detector load(const std::string& path);

 private:
  struct Trace;

  void init_params(std::uint64_t seed);
  void run_forward(const Tensor& images, Trace& trace) const;
  void run_backward(Trace& trace, std::vector<Tensor>& dcls,
                    std::vector<Tensor>& dbox);

  DetectorConfig cfg_;
  std::vector<Param> params_;
};

}  // namespace fovea
