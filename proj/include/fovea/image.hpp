// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fovea/tensor.hpp"

namespace fovea {

// 8-bit grayscale image.
struct Image {
  int w = 0, h = 0;
  std::vector<std::uint8_t> px;  // row-major, w*h

  std::uint8_t at(int x, int y) const {
    return px[static_cast<size_t>(y) * w + x];
  }
  std::uint8_t& at(int x, int y) { return px[static_cast<size_t>(y) * w + x]; }
};

void write_png_gray(const std::string& path, const Image& img);
Image read_png_gray(const std::string& path);

// (1,1,H,W) tensor with values scaled to [-0.5, 0.5).
Tensor image_to_tensor(const Image& img);

// Horizontal mirror.
Image flip_horizontal(const Image& img);

}  // namespace fovea
