// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fovea/geometry.hpp"

namespace fovea {

enum class CellTag : std::uint8_t { Negative = 0, Ignore = 1, Positive = 2 };

struct CellLabel {
  CellTag tag = CellTag::Negative;
  std::int16_t category = -1;     // valid when Positive
  std::int32_t object_index = -1; // index of the owning ground-truth object
};

// Per-level training targets: one class label per cell plus 4-channel box
// offsets, defined only at Positive cells.
struct TargetMaps {
  PyramidLevel level;
  std::vector<CellLabel> cls;  // grid_h * grid_w, row-major
  std::vector<double> box;     // grid_h * grid_w * 4: (t_x1, t_y1, t_x2, t_y2)
  int pos_count = 0;

  const CellLabel& at(int x, int y) const {
    return cls[static_cast<size_t>(y) * level.grid_w + x];
  }
  const double* box_at(int x, int y) const {
    return &box[(static_cast<size_t>(y) * level.grid_w + x) * 4];
  }
};

// Cell-center membership: true iff (x+0.5, y+0.5) lies in the closed region.
bool cell_is_positive(int x, int y, const FoveaRegion& region);

// Cell whose center is nearest to (cx, cy), ties broken toward smaller x,
// then smaller y; clamped to the grid.
std::pair<int, int> snap_cell(double cx, double cy, int grid_w, int grid_h);

// Builds one TargetMaps per pyramid level. Contested cells go to the gt with
// the smaller image-plane area (ties keep the earlier gt). A gt in scale
// range at a level whose fovea region contains no cell center claims the
// snapped nearest cell instead. Throws on gts with non-positive width/height.
std::vector<TargetMaps> build_targets(const std::vector<LabeledBox>& gts,
                                      const PyramidSpec& pyramid,
                                      const AssignConfig& cfg,
                                      int num_classes);

}  // namespace fovea
