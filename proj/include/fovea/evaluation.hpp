// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fovea/geometry.hpp"

namespace fovea {

struct GtRecord {
  int id = 0;
  int image_id = 0;
  int category = 0;  // dense class id
  BBox box;
};

struct DetRecord {
  int id = 0;
  int image_id = 0;
  int category = 0;
  BBox box;
  double score = 0.0;
};

// IoU thresholds .50:.05:.95.
std::vector<double> coco_iou_thresholds();

struct EvalResult {
  double ap = 0.0;    // mean over classes and thresholds
  double ap50 = 0.0;  // at IoU 0.5
  double ap75 = 0.0;  // at IoU 0.75
  std::optional<double> ap_small, ap_medium, ap_large;  // COCO area buckets
  std::map<int, double> per_class_ap;  // classes with ground truth only
  std::map<int, double> ar_by_k;       // filled by average_recall
};

// COCO-style evaluation: per class and threshold, detections sorted by score
// are greedily matched to the unmatched same-image gt with highest IoU >=
// threshold; AP is 101-point interpolated; results average over classes that
// have ground truth. Throws on duplicate detection or gt ids.
EvalResult evaluate(const std::vector<DetRecord>& dets,
                    const std::vector<GtRecord>& gts,
                    const std::vector<double>& iou_thresholds =
                        coco_iou_thresholds());

// Class-agnostic recall of gts by the top-k proposals per image, averaged
// over the COCO IoU thresholds, for each k.
std::map<int, double> average_recall(const std::vector<DetRecord>& proposals,
                                     const std::vector<GtRecord>& gts,
                                     const std::vector<int>& ks = {100, 300,
                                                                   1000});

// AP restricted to gt aspect-ratio buckets of u = max(h/w, w/h):
// u < 3, 3 <= u <= 5, u > 5. Out-of-bucket gts are ignored (detections
// matching them count neither as TP nor FP). Empty buckets report absent.
struct AspectBucketReport {
  double ap_all = 0.0;
  std::optional<double> ap_u_lt3, ap_u_3to5, ap_u_gt5;
};
AspectBucketReport aspect_report(const std::vector<DetRecord>& dets,
                                 const std::vector<GtRecord>& gts);

// Per-class AP_a - AP_b, sorted by delta descending (ties by class id).
// Throws when the class sets differ.
std::vector<std::pair<int, double>> per_class_delta(const EvalResult& a,
                                                    const EvalResult& b);

}  // namespace fovea
