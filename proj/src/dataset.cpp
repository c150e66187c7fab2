// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fovea/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "fovea/rng.hpp"

namespace fovea {

namespace fs = std::filesystem;

void DatasetSpec::validate() const {
  if (num_images < 0) throw std::invalid_argument("num_images must be >= 0");
  if (image_w < 16 || image_h < 16)
    throw std::invalid_argument("image dims too small");
  if (min_objects < 1 || max_objects < min_objects)
    throw std::invalid_argument("bad object count range");
  if (!(min_size > 0.0) || max_size < min_size)
    throw std::invalid_argument("bad size range");
  if (max_size * std::sqrt(std::max(1.0, aspect_max)) >
      std::min(image_w, image_h) - 2.0)
    throw std::invalid_argument("size range does not fit the image");
  if (aspect_max < 1.0) throw std::invalid_argument("aspect_max must be >= 1");
  if (noise < 0.0) throw std::invalid_argument("noise must be >= 0");
}

void to_json(nlohmann::json& j, const DatasetSpec& s) {
  j = nlohmann::json{{"num_images", s.num_images}, {"image_w", s.image_w},
                     {"image_h", s.image_h},       {"min_objects", s.min_objects},
                     {"max_objects", s.max_objects}, {"min_size", s.min_size},
                     {"max_size", s.max_size},     {"aspect_max", s.aspect_max},
                     {"noise", s.noise},           {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, DatasetSpec& s) {
  s.num_images = j.value("num_images", s.num_images);
  s.image_w = j.value("image_w", s.image_w);
  s.image_h = j.value("image_h", s.image_h);
  s.min_objects = j.value("min_objects", s.min_objects);
  s.max_objects = j.value("max_objects", s.max_objects);
  s.min_size = j.value("min_size", s.min_size);
  s.max_size = j.value("max_size", s.max_size);
  s.aspect_max = j.value("aspect_max", s.aspect_max);
  s.noise = j.value("noise", s.noise);
  s.seed = j.value("seed", s.seed);
}

std::map<int, int> CocoDataset::category_remap() const {
  std::map<int, int> remap;
  for (size_t i = 0; i < category_ids.size(); ++i)
    remap[category_ids[i]] = static_cast<int>(i);
  return remap;
}

namespace {

constexpr const char* kClassNames[3] = {"disk", "square", "triangle"};

// Coverage in [0,1] of one pixel by the shape, via 4x4 supersampling.
// kind: 0 ellipse, 1 rectangle, 2 triangle (apex top-center, base bottom).
double pixel_coverage(int px, int py, int kind, const BBox& b) {
  const double cx = 0.5 * (b.x1 + b.x2);
  const double rx = 0.5 * b.width();
  const double ry = 0.5 * b.height();
  const double cy = 0.5 * (b.y1 + b.y2);
  int hit = 0;
  for (int sy = 0; sy < 4; ++sy) {
    for (int sx = 0; sx < 4; ++sx) {
      const double x = px + (sx + 0.5) / 4.0;
      const double y = py + (sy + 0.5) / 4.0;
      bool inside = false;
      switch (kind) {
        case 0: {
          const double dx = (x - cx) / rx;
          const double dy = (y - cy) / ry;
          inside = dx * dx + dy * dy <= 1.0;
          break;
        }
        case 1:
          inside = x >= b.x1 && x <= b.x2 && y >= b.y1 && y <= b.y2;
          break;
        default: {
          // Half-plane tests against (apex, bottom-left) and (apex,
          // bottom-right) edges, plus the base.
          if (y < b.y1 || y > b.y2) break;
          const double t = (y - b.y1) / (b.y2 - b.y1);  // 0 at apex
          const double half = t * rx;
          inside = x >= cx - half && x <= cx + half;
          break;
        }
      }
      hit += inside;
    }
  }
  return hit / 16.0;
}

}  // namespace

void render_shape(Image& img, int kind, const BBox& b, double intensity) {
  const int x_lo = std::max(0, static_cast<int>(std::floor(b.x1)) - 1);
  const int x_hi = std::min(img.w - 1, static_cast<int>(std::ceil(b.x2)) + 1);
  const int y_lo = std::max(0, static_cast<int>(std::floor(b.y1)) - 1);
  const int y_hi = std::min(img.h - 1, static_cast<int>(std::ceil(b.y2)) + 1);
  for (int y = y_lo; y <= y_hi; ++y) {
    for (int x = x_lo; x <= x_hi; ++x) {
      const double cov = pixel_coverage(x, y, kind, b);
      if (cov <= 0.0) continue;
      const double mixed = (1.0 - cov) * img.at(x, y) + cov * intensity;
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(mixed, 0.0, 255.0));
    }
  }
}

CocoDataset generate_dataset(const DatasetSpec& spec,
                             const std::string& out_dir) {
  spec.validate();
  const fs::path root(out_dir);
  const fs::path img_dir = root / "images";
  std::error_code ec;
  fs::create_directories(img_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + img_dir.string());

  CocoDataset ds;
  for (int c = 0; c < 3; ++c) {
    ds.category_ids.push_back(c + 1);
    ds.category_names.push_back(kClassNames[c]);
  }

  Rng rng(spec.seed);
  nlohmann::json images = nlohmann::json::array();
  nlohmann::json annotations = nlohmann::json::array();
  int next_ann_id = 1;

  for (int i = 0; i < spec.num_images; ++i) {
    const int image_id = i + 1;
    char name[32];
    std::snprintf(name, sizeof(name), "img_%06d.png", image_id);

    Image img;
    img.w = spec.image_w;
    img.h = spec.image_h;
    img.px.resize(static_cast<size_t>(img.w) * img.h);
    const double base = rng.uniform(20.0, 60.0);
    for (auto& p : img.px) {
      const double v = base + rng.uniform(-spec.noise, spec.noise);
      p = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }

    const int n_obj = rng.uniform_int(spec.min_objects, spec.max_objects);
    std::vector<LabeledBox> placed;
    for (int k = 0; k < n_obj; ++k) {
      int kind = 0;
      BBox box;
      // Sample until the box fits; prefer placements with bounded overlap but
      // accept a crowded one after enough tries so the count stays in range.
      for (int attempt = 0; attempt < 50; ++attempt) {
        kind = rng.uniform_int(0, 2);
        const double scale = rng.uniform(spec.min_size, spec.max_size);
        double u = rng.uniform(1.0, std::max(1.0, spec.aspect_max));
        if (rng.bernoulli(0.5)) u = 1.0 / u;  // tall vs wide
        const double w = scale * std::sqrt(u);
        const double h = scale / std::sqrt(u);
        if (w > spec.image_w - 2.0 || h > spec.image_h - 2.0) continue;
        const double x1 = rng.uniform(1.0, spec.image_w - 1.0 - w);
        const double y1 = rng.uniform(1.0, spec.image_h - 1.0 - h);
        box = BBox{x1, y1, x1 + w, y1 + h};
        bool crowded = false;
        for (const LabeledBox& other : placed)
          if (iou(box, other.box) > 0.3) crowded = true;
        if (!crowded || attempt == 49) break;
      }
      if (!(box.width() > 0.0)) continue;  // size range never fit the image

      const double intensity = rng.uniform(120.0, 240.0);
      render_shape(img, kind, box, intensity);
      placed.push_back({box, kind});
      annotations.push_back({{"id", next_ann_id++},
                             {"image_id", image_id},
                             {"category_id", kind + 1},
                             {"bbox", {box.x1, box.y1, box.width(), box.height()}},
                             {"area", box.area()},
                             {"iscrowd", 0}});
    }

    write_png_gray((img_dir / name).string(), img);
    images.push_back({{"id", image_id},
                      {"file_name", std::string("images/") + name},
                      {"width", img.w},
                      {"height", img.h}});
    ds.images.push_back({image_id, std::string("images/") + name, img.w, img.h});
    ds.gts_by_image[image_id] = placed;  // categories already dense 0..2
  }

  nlohmann::json categories = nlohmann::json::array();
  for (size_t c = 0; c < ds.category_ids.size(); ++c)
    categories.push_back(
        {{"id", ds.category_ids[c]}, {"name", ds.category_names[c]}});
  nlohmann::json root_json = {{"images", images},
                              {"annotations", annotations},
                              {"categories", categories}};
  std::ofstream out(root / "annotations.json");
  if (!out) throw std::runtime_error("cannot write annotations in " + out_dir);
  out << root_json.dump(2) << '\n';
  return ds;
}

CocoDataset load_coco(const std::string& annotation_path) {
  std::ifstream in(annotation_path);
  if (!in) throw std::runtime_error("cannot open " + annotation_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed JSON in " + annotation_path + ": " +
                             e.what());
  }

  CocoDataset ds;
  std::map<int, std::pair<int, int>> image_dims;
  for (const auto& img : j.at("images")) {
    CocoDataset::ImageInfo info;
    info.id = img.at("id").get<int>();
    info.file_name = img.at("file_name").get<std::string>();
    info.width = img.at("width").get<int>();
    info.height = img.at("height").get<int>();
    ds.images.push_back(info);
    image_dims[info.id] = {info.width, info.height};
    ds.gts_by_image[info.id];  // images with no objects still appear
  }

  std::set<int> cat_ids;
  std::map<int, std::string> cat_names;
  for (const auto& cat : j.at("categories")) {
    const int id = cat.at("id").get<int>();
    cat_ids.insert(id);
    cat_names[id] = cat.value("name", std::string());
  }
  std::map<int, int> remap;
  for (int id : cat_ids) {
    remap[id] = static_cast<int>(ds.category_ids.size());
    ds.category_ids.push_back(id);
    ds.category_names.push_back(cat_names[id]);
  }

  for (const auto& ann : j.at("annotations")) {
    const int ann_id = ann.value("id", -1);
    auto fail = [&](const std::string& why) {
      throw std::runtime_error("annotation " + std::to_string(ann_id) + ": " +
                               why);
    };
    if (!ann.contains("image_id") || !ann.contains("category_id") ||
        !ann.contains("bbox"))
      fail("missing required field");
    const int image_id = ann.at("image_id").get<int>();
    const auto dims = image_dims.find(image_id);
    if (dims == image_dims.end())
      fail("references unknown image id " + std::to_string(image_id));
    const int cat = ann.at("category_id").get<int>();
    if (!remap.count(cat))
      fail("references unknown category id " + std::to_string(cat));
    const auto& bb = ann.at("bbox");
    if (!bb.is_array() || bb.size() != 4) fail("bbox must be [x,y,w,h]");
    const double x = bb[0].get<double>(), y = bb[1].get<double>();
    const double w = bb[2].get<double>(), h = bb[3].get<double>();
    const double eps = 1e-6;
    if (x < -eps || y < -eps || w < 0.0 || h < 0.0 ||
        x + w > dims->second.first + eps || y + h > dims->second.second + eps)
      fail("bbox out of image bounds");
    ds.gts_by_image[image_id].push_back(
        {BBox{x, y, x + w, y + h}, remap.at(cat)});
  }
  return ds;
}

std::vector<GtRecord> to_gt_records(const CocoDataset& ds) {
  std::vector<GtRecord> out;
  int next_id = 1;
  for (const auto& [image_id, gts] : ds.gts_by_image)
    for (const LabeledBox& g : gts)
      out.push_back({next_id++, image_id, g.category, g.box});
  return out;
}

std::vector<DetRecord> load_coco_results(const std::string& path,
                                         const CocoDataset& ds) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed JSON in " + path + ": " + e.what());
  }
  if (!j.is_array()) throw std::runtime_error("results must be a JSON array");
  const std::map<int, int> remap = ds.category_remap();
  std::vector<DetRecord> out;
  int next_id = 1;
  for (const auto& d : j) {
    DetRecord r;
    r.id = next_id++;
    r.image_id = d.at("image_id").get<int>();
    const int cat = d.at("category_id").get<int>();
    const auto it = remap.find(cat);
    if (it == remap.end())
      throw std::runtime_error("result " + std::to_string(r.id) +
                               ": unknown category id " + std::to_string(cat));
    r.category = it->second;
    const auto& bb = d.at("bbox");
    const double x = bb[0].get<double>(), y = bb[1].get<double>();
    r.box = BBox{x, y, x + bb[2].get<double>(), y + bb[3].get<double>()};
    r.score = d.at("score").get<double>();
    out.push_back(r);
  }
  return out;
}

}  // namespace fovea
