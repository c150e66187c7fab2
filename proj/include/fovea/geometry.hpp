// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

namespace fovea {

// Axis-aligned box in continuous image-pixel coordinates.
struct BBox {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool valid() const { return x2 >= x1 && y2 >= y1; }
};

struct LabeledBox {
  BBox box;
  int category = 0;  // dense class id in [0, C)
};

// One feature-pyramid level. stride = 2^l pixels per cell, basic_scale = 4*stride.
struct PyramidLevel {
  int l = 0;
  int stride = 1;
  double basic_scale = 4.0;
  int grid_w = 0, grid_h = 0;
};

struct PyramidSpec {
  std::vector<PyramidLevel> levels;  // contiguous, strictly increasing l
  int image_w = 0, image_h = 0;

  // Builds levels for the given indices; grid dims = ceil(image dim / stride).
  static PyramidSpec make(const std::vector<int>& level_indices, int image_w,
                          int image_h);
};

// Box coordinates divided by the level stride, in feature-plane cells.
struct ProjectedBox {
  double x1, y1, x2, y2;
  double cx, cy;
  double w, h;
};

// Shrunk positive area on the feature plane, centered on the projected box.
struct FoveaRegion {
  double x1, y1, x2, y2;
};

struct AssignConfig {
  double sigma = 0.4;  // shrink factor, 0 < sigma <= 1
  double eta = 2.0;    // scale-range factor, eta >= 1
};

// Intersection over union of two boxes; 0 when the union has zero area.
double iou(const BBox& a, const BBox& b);

ProjectedBox project_box(const BBox& box, const PyramidLevel& level);

FoveaRegion fovea_region(const ProjectedBox& p, double sigma);

// Object scale in image pixels: sqrt(width * height).
double object_scale(const BBox& box);

// Indices into pyramid.levels whose valid range [r/eta, r*eta] (closed at
// both ends) contains the object scale. May be empty.
std::vector<int> assigned_levels(const BBox& box, const PyramidSpec& pyramid,
                                 double eta);

}  // namespace fovea
