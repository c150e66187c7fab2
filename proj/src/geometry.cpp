// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fovea/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fovea {

PyramidSpec PyramidSpec::make(const std::vector<int>& level_indices,
                              int image_w, int image_h) {
  if (level_indices.empty()) throw std::invalid_argument("no pyramid levels");
  PyramidSpec spec;
  spec.image_w = image_w;
  spec.image_h = image_h;
  int prev = -1;
  for (int l : level_indices) {
    if (l < 0 || l > 16) throw std::invalid_argument("bad pyramid level");
    if (prev >= 0 && l != prev + 1)
      throw std::invalid_argument("pyramid levels must be contiguous ascending");
    prev = l;
    PyramidLevel level;
    level.l = l;
    level.stride = 1 << l;
    level.basic_scale = 4.0 * level.stride;
    level.grid_w = (image_w + level.stride - 1) / level.stride;
    level.grid_h = (image_h + level.stride - 1) / level.stride;
    spec.levels.push_back(level);
  }
  return spec;
}

double iou(const BBox& a, const BBox& b) {
  const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

ProjectedBox project_box(const BBox& box, const PyramidLevel& level) {
  const double s = static_cast<double>(level.stride);
  ProjectedBox p;
  p.x1 = box.x1 / s;
  p.y1 = box.y1 / s;
  p.x2 = box.x2 / s;
  p.y2 = box.y2 / s;
  p.cx = 0.5 * (p.x1 + p.x2);
  p.cy = 0.5 * (p.y1 + p.y2);
  p.w = p.x2 - p.x1;
  p.h = p.y2 - p.y1;
  return p;
}

FoveaRegion fovea_region(const ProjectedBox& p, double sigma) {
  FoveaRegion r;
  r.x1 = p.cx - 0.5 * sigma * p.w;
  r.y1 = p.cy - 0.5 * sigma * p.h;
  r.x2 = p.cx + 0.5 * sigma * p.w;
  r.y2 = p.cy + 0.5 * sigma * p.h;
  return r;
}

double object_scale(const BBox& box) {
  return std::sqrt(box.width() * box.height());
}

std::vector<int> assigned_levels(const BBox& box, const PyramidSpec& pyramid,
                                 double eta) {
  const double scale = object_scale(box);
  std::vector<int> out;
  for (size_t i = 0; i < pyramid.levels.size(); ++i) {
    const double r = pyramid.levels[i].basic_scale;
    if (scale >= r / eta && scale <= r * eta) out.push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace fovea
