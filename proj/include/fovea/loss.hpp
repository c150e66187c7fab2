// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <utility>
#include <vector>

#include "fovea/assignment.hpp"
#include "fovea/tensor.hpp"

namespace fovea {

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

struct LossParams {
  FocalParams focal;
  double smooth_l1_beta = 0.11;
  double box_weight = 1.0;  // lambda on the box term
};

struct LossReport {
  double cls_loss = 0.0;
  double box_loss = 0.0;
  double total = 0.0;
  int num_pos = 0;
};

// Focal loss over per-class sigmoid maps. cls_logits is (C,H,W); labels has
// one entry per cell (Ignore cells are excluded for every class). The sum is
// divided by max(1, num_pos_norm). Returns the loss and d(loss)/d(logits),
// both computed in overflow-safe log-space form.
std::pair<double, Tensor> focal_loss(const Tensor& cls_logits,
                                     const std::vector<CellLabel>& labels,
                                     const FocalParams& params,
                                     int num_pos_norm);

// Elementwise smooth-L1 pieces: 0.5*d^2/beta inside the knee, |d| - 0.5*beta
// outside.
double smooth_l1_value(double d, double beta);
double smooth_l1_grad(double d, double beta);

// Smooth-L1 over the 4 offset channels at Positive cells only. box_pred is
// (4,H,W); targets supplies the labels and encoded offsets. Sum divided by
// max(1, num_pos_norm). Returns loss and d(loss)/d(pred).
std::pair<double, Tensor> smooth_l1(const Tensor& box_pred,
                                    const TargetMaps& targets, double beta,
                                    int num_pos_norm);

// Composite per-image objective over all levels with a shared positive-count
// normalizer: total = focal + box_weight * smooth_l1. Gradients are written
// into dcls/dbox (one tensor per level) when non-null.
LossReport total_loss(const std::vector<Tensor>& cls_logits,
                      const std::vector<Tensor>& box_pred,
                      const std::vector<TargetMaps>& targets,
                      const LossParams& params, std::vector<Tensor>* dcls,
                      std::vector<Tensor>* dbox);

}  // namespace fovea
