// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fovea/codec.hpp"

#include <algorithm>
#include <cmath>

namespace fovea {

BoxOffsets encode_box(int cell_x, int cell_y, const BBox& gt,
                      const PyramidLevel& level, double eps) {
  const double s = static_cast<double>(level.stride);
  const double r = level.basic_scale;
  const double px = s * (cell_x + 0.5);
  const double py = s * (cell_y + 0.5);
  BoxOffsets t;
  t.t_x1 = std::log(std::max(eps, px - gt.x1) / r);
  t.t_y1 = std::log(std::max(eps, py - gt.y1) / r);
  t.t_x2 = std::log(std::max(eps, gt.x2 - px) / r);
  t.t_y2 = std::log(std::max(eps, gt.y2 - py) / r);
  return t;
}

BBox decode_box(int cell_x, int cell_y, const BoxOffsets& t,
                const PyramidLevel& level, double image_w, double image_h) {
  const double s = static_cast<double>(level.stride);
  const double r = level.basic_scale;
  const double px = s * (cell_x + 0.5);
  const double py = s * (cell_y + 0.5);
  double x1 = px - r * std::exp(t.t_x1);
  double y1 = py - r * std::exp(t.t_y1);
  double x2 = px + r * std::exp(t.t_x2);
  double y2 = py + r * std::exp(t.t_y2);
  x1 = std::clamp(x1, 0.0, image_w);
  x2 = std::clamp(x2, 0.0, image_w);
  y1 = std::clamp(y1, 0.0, image_h);
  y2 = std::clamp(y2, 0.0, image_h);
  BBox box{std::min(x1, x2), std::min(y1, y2), std::max(x1, x2),
           std::max(y1, y2)};
  return box;
}

}  // namespace fovea
