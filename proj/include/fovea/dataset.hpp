// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fovea/evaluation.hpp"
#include "fovea/geometry.hpp"
#include "fovea/image.hpp"

namespace fovea {

struct DatasetSpec {
  int num_images = 500;
  int image_w = 128, image_h = 128;
  int min_objects = 1, max_objects = 4;
  double min_size = 12.0, max_size = 80.0;  // object scale sqrt(w*h), pixels
  double aspect_max = 1.0;  // > 1 stretches shapes for aspect-ratio studies
  double noise = 10.0;      // background noise amplitude, gray levels
  std::uint64_t seed = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const DatasetSpec& s);
void from_json(const nlohmann::json& j, DatasetSpec& s);

// In-memory view of a COCO-style annotation file.
struct CocoDataset {
  struct ImageInfo {
    int id = 0;
    std::string file_name;
    int width = 0, height = 0;
  };
  std::vector<ImageInfo> images;
  std::map<int, std::vector<LabeledBox>> gts_by_image;  // dense categories
  std::vector<int> category_ids;          // dense index -> original id
  std::vector<std::string> category_names;

  int num_classes() const { return static_cast<int>(category_ids.size()); }
  std::map<int, int> category_remap() const;  // original id -> dense index
};

// Renders the shapes dataset (classes disk/square/triangle) into
// out_dir/images/*.png plus out_dir/annotations.json and returns the written
// ground truth. Deterministic for a fixed spec.
CocoDataset generate_dataset(const DatasetSpec& spec, const std::string& out_dir);

// Draws one anti-aliased filled shape (0 disk, 1 square, 2 triangle) with its
// tight bbox b onto the image, alpha-compositing by pixel coverage.
void render_shape(Image& img, int kind, const BBox& b, double intensity);

// Loads a COCO annotation file: bboxes become corner form, categories remap
// to dense [0, C). Malformed entries are reported with their annotation id.
CocoDataset load_coco(const std::string& annotation_path);

// Flat records for the evaluator; gt ids are the annotation ids.
std::vector<GtRecord> to_gt_records(const CocoDataset& ds);

// Detections from a COCO results JSON, categories remapped via the dataset.
std::vector<DetRecord> load_coco_results(const std::string& path,
                                         const CocoDataset& ds);

}  // namespace fovea
