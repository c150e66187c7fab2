// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fovea/detector.hpp"
#include "fovea/image.hpp"

namespace fovea {

struct TrainSample {
  Image image;
  std::vector<LabeledBox> gts;
};

struct TrainConfig {
  SgdConfig sgd;  // learning_rate is the base lr
  LossParams loss;
  AssignConfig assign;
  int batch_size = 8;
  int epochs = 24;
  std::uint64_t seed = 7;
  bool flip_augment = true;
};

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double cls_loss = 0.0;
  double box_loss = 0.0;
  double total = 0.0;
  double wall_seconds = 0.0;
};

// Learning rate for a 0-based epoch index: base lr divided by 10 at 2/3 and
// again at 11/12 of the schedule.
double scheduled_lr(double base_lr, int epoch, int total_epochs);

// Mirror the boxes of a sample about the vertical image axis.
std::vector<LabeledBox> flip_gts(const std::vector<LabeledBox>& gts,
                                 int image_w);

// SGD training with horizontal-flip augmentation as the only transform.
// When out_dir is non-empty, writes checkpoint.fov after every epoch (and
// once for an empty schedule) plus train_log.jsonl with one entry per epoch.
std::vector<EpochStats> train_detector(
    Detector& det, const std::vector<TrainSample>& data, const TrainConfig& cfg,
    const std::string& out_dir = "",
    const std::function<void(const EpochStats&)>& on_epoch = {});

}  // namespace fovea
