// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fovea/detector.hpp"
#include "fovea/geometry.hpp"

namespace fovea {

struct Detection {
  BBox box;          // image pixels
  int category = 0;  // dense class id
  double score = 0.0;
};

struct InferenceParams {
  double score_thresh = 0.05;
  int per_level_topk = 1000;
  double nms_iou = 0.5;
  int max_detections = 100;

  void validate(size_t level_count) const;
};

// Greedy non-maximum suppression. Returns the kept indices (into the input)
// in descending score order; score ties resolve to the lower original index.
std::vector<int> nms(const std::vector<BBox>& boxes,
                     const std::vector<double>& scores, double iou_thresh);

// Full pipeline for one image of a batched HeadOutputs: sigmoid scores,
// threshold, per-level top-k over (cell, class) pairs, decode, per-class NMS,
// global top max_detections.
std::vector<Detection> postprocess(const HeadOutputs& outputs, int image_index,
                                   const PyramidSpec& pyramid,
                                   const InferenceParams& params);

// Class-agnostic proposal mode: same pipeline with C = 1, up to k boxes.
// Rejects outputs whose classification branch has more than one channel.
std::vector<Detection> propose(const HeadOutputs& outputs, int image_index,
                               const PyramidSpec& pyramid, int k,
                               const InferenceParams& params);

// COCO results array: [{image_id, category_id, bbox:[x,y,w,h], score}].
// category_ids maps dense class id -> emitted category id.
nlohmann::json detections_to_coco(
    const std::vector<std::pair<int, std::vector<Detection>>>& per_image,
    const std::vector<int>& category_ids);

}  // namespace fovea
