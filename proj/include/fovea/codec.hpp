// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "fovea/geometry.hpp"

namespace fovea {

// Dimensionless log-space offsets from a cell's projected center to the four
// box boundaries.
struct BoxOffsets {
  double t_x1 = 0.0, t_y1 = 0.0, t_x2 = 0.0, t_y2 = 0.0;
};

// Clamp for the log argument; absorbs cells sitting on or outside a gt edge.
inline constexpr double kCodecEps = 1e-6;

BoxOffsets encode_box(int cell_x, int cell_y, const BBox& gt,
                      const PyramidLevel& level, double eps = kCodecEps);

// Inverse of encode_box, clipped to [0, image_w] x [0, image_h] and reordered
// so the result is a valid box.
BBox decode_box(int cell_x, int cell_y, const BoxOffsets& t,
                const PyramidLevel& level, double image_w, double image_h);

}  // namespace fovea
