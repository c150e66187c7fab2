// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fovea/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fovea/codec.hpp"

namespace fovea {

bool cell_is_positive(int x, int y, const FoveaRegion& region) {
  const double cx = x + 0.5;
  const double cy = y + 0.5;
  return cx >= region.x1 && cx <= region.x2 && cy >= region.y1 &&
         cy <= region.y2;
}

std::pair<int, int> snap_cell(double cx, double cy, int grid_w, int grid_h) {
  // Nearest cell center to c is at x minimizing |x + 0.5 - c|; a midpoint tie
  // resolves to the smaller index via ceil(c - 1).
  auto snap1 = [](double c, int n) {
    int x = static_cast<int>(std::ceil(c - 1.0));
    return std::clamp(x, 0, n - 1);
  };
  return {snap1(cx, grid_w), snap1(cy, grid_h)};
}

namespace {

// Ownership resolution: smaller image-plane area wins a contested cell,
// ties keep the earlier gt index.
struct Claim {
  double area;
  int gt_index;
  bool beats(const Claim& other) const {
    if (area != other.area) return area < other.area;
    return gt_index < other.gt_index;
  }
};

}  // namespace

std::vector<TargetMaps> build_targets(const std::vector<LabeledBox>& gts,
                                      const PyramidSpec& pyramid,
                                      const AssignConfig& cfg,
                                      int num_classes) {
  if (num_classes < 1) throw std::invalid_argument("num_classes must be >= 1");
  if (!(cfg.sigma > 0.0 && cfg.sigma <= 1.0))
    throw std::invalid_argument("sigma must be in (0, 1]");
  if (!(cfg.eta >= 1.0)) throw std::invalid_argument("eta must be >= 1");
  for (size_t g = 0; g < gts.size(); ++g) {
    const BBox& b = gts[g].box;
    if (!(b.width() > 0.0) || !(b.height() > 0.0))
      throw std::invalid_argument("ground-truth box " + std::to_string(g) +
                                  " has non-positive width or height");
    if (gts[g].category < 0 || gts[g].category >= num_classes)
      throw std::invalid_argument("ground-truth box " + std::to_string(g) +
                                  " has out-of-range category");
  }

  std::vector<TargetMaps> out;
  out.reserve(pyramid.levels.size());
  for (const PyramidLevel& level : pyramid.levels) {
    TargetMaps maps;
    maps.level = level;
    const size_t n_cells =
        static_cast<size_t>(level.grid_w) * static_cast<size_t>(level.grid_h);
    maps.cls.assign(n_cells, CellLabel{});
    maps.box.assign(n_cells * 4, 0.0);

    std::vector<Claim> owner(n_cells, Claim{0.0, -1});
    auto claim = [&](int x, int y, int g) {
      const size_t idx = static_cast<size_t>(y) * level.grid_w + x;
      Claim c{gts[g].box.area(), g};
      if (owner[idx].gt_index < 0 || c.beats(owner[idx])) owner[idx] = c;
    };

    for (size_t g = 0; g < gts.size(); ++g) {
      const BBox& box = gts[g].box;
      const double scale = object_scale(box);
      const double r = level.basic_scale;
      if (scale < r / cfg.eta || scale > r * cfg.eta) continue;

      const ProjectedBox p = project_box(box, level);
      const FoveaRegion region = fovea_region(p, cfg.sigma);

      // Candidate cells: centers inside the region, clipped to the grid.
      const int x_lo = std::max(0, static_cast<int>(std::ceil(region.x1 - 0.5)));
      const int x_hi = std::min(level.grid_w - 1,
                                static_cast<int>(std::floor(region.x2 - 0.5)));
      const int y_lo = std::max(0, static_cast<int>(std::ceil(region.y1 - 0.5)));
      const int y_hi = std::min(level.grid_h - 1,
                                static_cast<int>(std::floor(region.y2 - 0.5)));
      bool any = false;
      for (int y = y_lo; y <= y_hi; ++y)
        for (int x = x_lo; x <= x_hi; ++x)
          if (cell_is_positive(x, y, region)) {
            claim(x, y, static_cast<int>(g));
            any = true;
          }
      if (!any) {
        auto [fx, fy] = snap_cell(p.cx, p.cy, level.grid_w, level.grid_h);
        claim(fx, fy, static_cast<int>(g));
      }
    }

    for (int y = 0; y < level.grid_h; ++y) {
      for (int x = 0; x < level.grid_w; ++x) {
        const size_t idx = static_cast<size_t>(y) * level.grid_w + x;
        const int g = owner[idx].gt_index;
        if (g < 0) continue;
        maps.cls[idx].tag = CellTag::Positive;
        maps.cls[idx].category = static_cast<std::int16_t>(gts[g].category);
        maps.cls[idx].object_index = g;
        const BoxOffsets t = encode_box(x, y, gts[g].box, level);
        maps.box[idx * 4 + 0] = t.t_x1;
        maps.box[idx * 4 + 1] = t.t_y1;
        maps.box[idx * 4 + 2] = t.t_x2;
        maps.box[idx * 4 + 3] = t.t_y2;
        ++maps.pos_count;
      }
    }
    out.push_back(std::move(maps));
  }
  return out;
}

}  // namespace fovea
