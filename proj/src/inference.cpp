// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fovea/inference.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "fovea/codec.hpp"
#include "fovea/ops.hpp"

namespace fovea {

void InferenceParams::validate(size_t level_count) const {
  if (!(score_thresh > 0.0) || per_level_topk <= 0 || !(nms_iou > 0.0) ||
      max_detections <= 0)
    throw std::invalid_argument("inference params must be positive");
  if (static_cast<size_t>(max_detections) >
      static_cast<size_t>(per_level_topk) * level_count)
    throw std::invalid_argument(
        "max_detections exceeds per_level_topk * level count");
}

std::vector<int> nms(const std::vector<BBox>& boxes,
                     const std::vector<double>& scores, double iou_thresh) {
  const size_t n = boxes.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
  });
  std::vector<char> suppressed(n, 0);
  std::vector<int> kept;
  for (size_t i = 0; i < n; ++i) {
    const int a = order[i];
    if (suppressed[static_cast<size_t>(a)]) continue;
    kept.push_back(a);
    for (size_t j = i + 1; j < n; ++j) {
      const int b = order[j];
      if (suppressed[static_cast<size_t>(b)]) continue;
      if (iou(boxes[static_cast<size_t>(a)], boxes[static_cast<size_t>(b)]) >
          iou_thresh)
        suppressed[static_cast<size_t>(b)] = 1;
    }
  }
  return kept;
}

namespace {

struct Candidate {
  double score;
  int level;      // index into pyramid.levels
  int cell;       // row-major cell index
  int category;   // dense class id
  BoxOffsets offsets;
};

}  // namespace

std::vector<Detection> postprocess(const HeadOutputs& outputs, int image_index,
                                   const PyramidSpec& pyramid,
                                   const InferenceParams& params) {
  if (outputs.cls.size() != pyramid.levels.size())
    throw std::invalid_argument("postprocess: level count mismatch");
  params.validate(pyramid.levels.size());

  std::vector<Candidate> pool;
  for (size_t i = 0; i < pyramid.levels.size(); ++i) {
    const Tensor& cls = outputs.cls[i];
    const Tensor& box = outputs.box[i];
    const int C = cls.dim(1), H = cls.dim(2), W = cls.dim(3);
    if (H != pyramid.levels[i].grid_h || W != pyramid.levels[i].grid_w)
      throw std::invalid_argument("postprocess: grid mismatch with pyramid");

    std::vector<Candidate> level_cands;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        for (int c = 0; c < C; ++c) {
          const double score =
              ops::sigmoid_scalar(cls.at(image_index, c, y, x));
          if (score < params.score_thresh) continue;
          Candidate cand;
          cand.score = score;
          cand.level = static_cast<int>(i);
          cand.cell = y * W + x;
          cand.category = c;
          cand.offsets = {box.at(image_index, 0, y, x),
                          box.at(image_index, 1, y, x),
                          box.at(image_index, 2, y, x),
                          box.at(image_index, 3, y, x)};
          level_cands.push_back(cand);
        }
      }
    }
    // Per-level top-k over all (cell, class) pairs; ties keep enumeration
    // order (cell row-major, then class).
    auto better = [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.cell != b.cell) return a.cell < b.cell;
      return a.category < b.category;
    };
    if (level_cands.size() > static_cast<size_t>(params.per_level_topk)) {
      std::nth_element(level_cands.begin(),
                       level_cands.begin() + params.per_level_topk - 1,
                       level_cands.end(), better);
      level_cands.resize(static_cast<size_t>(params.per_level_topk));
    }
    pool.insert(pool.end(), level_cands.begin(), level_cands.end());
  }

  // Deterministic pooled order: score, then (level, cell, class).
  std::sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.level != b.level) return a.level < b.level;
    if (a.cell != b.cell) return a.cell < b.cell;
    return a.category < b.category;
  });

  std::vector<Detection> decoded;
  decoded.reserve(pool.size());
  for (const Candidate& cand : pool) {
    const PyramidLevel& level = pyramid.levels[static_cast<size_t>(cand.level)];
    Detection det;
    det.box = decode_box(cand.cell % level.grid_w, cand.cell / level.grid_w,
                         cand.offsets, level, pyramid.image_w, pyramid.image_h);
    det.category = cand.category;
    det.score = cand.score;
    decoded.push_back(det);
  }

  // Per-class greedy NMS over the pooled candidates.
  std::vector<Detection> surviving;
  int num_classes = 0;
  for (const Detection& d : decoded)
    num_classes = std::max(num_classes, d.category + 1);
  for (int c = 0; c < num_classes; ++c) {
    std::vector<BBox> boxes;
    std::vector<double> scores;
    std::vector<int> src;
    for (size_t k = 0; k < decoded.size(); ++k) {
      if (decoded[k].category != c) continue;
      boxes.push_back(decoded[k].box);
      scores.push_back(decoded[k].score);
      src.push_back(static_cast<int>(k));
    }
    for (int idx : nms(boxes, scores, params.nms_iou))
      surviving.push_back(decoded[static_cast<size_t>(src[static_cast<size_t>(idx)])]);
  }

  std::stable_sort(surviving.begin(), surviving.end(),
                   [](const Detection& a, const Detection& b) {
                     return a.score > b.score;
                   });
  if (surviving.size() > static_cast<size_t>(params.max_detections))
    surviving.resize(static_cast<size_t>(params.max_detections));
  return surviving;
}

std::vector<Detection> propose(const HeadOutputs& outputs, int image_index,
                               const PyramidSpec& pyramid, int k,
                               const InferenceParams& params) {
  for (const Tensor& cls : outputs.cls)
    if (cls.dim(1) != 1)
      throw std::invalid_argument(
          "propose requires class-agnostic outputs (one cls channel)");
  if (k < 0) throw std::invalid_argument("propose: k must be >= 0");
  if (k == 0) return {};
  InferenceParams p = params;
  p.max_detections = k;
  p.per_level_topk = std::max(p.per_level_topk, k);
  return postprocess(outputs, image_index, pyramid, p);
}

nlohmann::json detections_to_coco(
    const std::vector<std::pair<int, std::vector<Detection>>>& per_image,
    const std::vector<int>& category_ids) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [image_id, dets] : per_image) {
    for (const Detection& d : dets) {
      arr.push_back({{"image_id", image_id},
                     {"category_id",
                      category_ids[static_cast<size_t>(d.category)]},
                     {"bbox",
                      {d.box.x1, d.box.y1, d.box.width(), d.box.height()}},
                     {"score", d.score}});
    }
  }
  return arr;
}

}  // namespace fovea
