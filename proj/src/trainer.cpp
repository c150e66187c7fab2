// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fovea/trainer.hpp"

#include <chrono>
#include <filesystem>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "fovea/rng.hpp"

namespace fovea {

double scheduled_lr(double base_lr, int epoch, int total_epochs) {
  const int s1 = static_cast<int>(std::lround(total_epochs * 2.0 / 3.0));
  const int s2 = static_cast<int>(std::lround(total_epochs * 11.0 / 12.0));
  double lr = base_lr;
  if (epoch >= s1) lr *= 0.1;
  if (epoch >= s2) lr *= 0.1;
  return lr;
}

std::vector<LabeledBox> flip_gts(const std::vector<LabeledBox>& gts,
                                 int image_w) {
  std::vector<LabeledBox> out;
  out.reserve(gts.size());
  for (const LabeledBox& g : gts) {
    LabeledBox f = g;
    f.box.x1 = image_w - g.box.x2;
    f.box.x2 = image_w - g.box.x1;
    out.push_back(f);
  }
  return out;
}

std::vector<EpochStats> train_detector(
    Detector& det, const std::vector<TrainSample>& data, const TrainConfig& cfg,
    const std::string& out_dir,
    const std::function<void(const EpochStats&)>& on_epoch) {
  if (data.empty()) throw std::invalid_argument("train: dataset is empty");
  const int W = data[0].image.w;
  const int H = data[0].image.h;
  for (const TrainSample& s : data)
    if (s.image.w != W || s.image.h != H)
      throw std::invalid_argument("train: images must share dimensions");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: bad batch size");
  if (cfg.epochs < 0) throw std::invalid_argument("train: bad epoch count");

  const PyramidSpec pyramid = det.pyramid_for(W, H);
  // A class-agnostic head trains a single objectness channel: every gt
  // becomes category 0 for target building.
  const bool agnostic = det.config().class_agnostic;
  const int num_classes = agnostic ? 1 : det.config().num_classes;

  std::ofstream log;
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    log.open(out_dir + "/train_log.jsonl");
    if (!log) throw std::runtime_error("cannot write train log in " + out_dir);
  }
  auto save = [&]() {
    if (!out_dir.empty())
      det.save(out_dir + "/checkpoint.fov", cfg.seed,
               {{"epochs", cfg.epochs}, {"batch_size", cfg.batch_size}});
  };

  Rng rng(cfg.seed);
  std::vector<EpochStats> stats;
  std::vector<int> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    SgdConfig sgd = cfg.sgd;
    sgd.learning_rate = scheduled_lr(cfg.sgd.learning_rate, epoch, cfg.epochs);

    // Fisher-Yates with the run rng; fixed visit order per (seed, epoch).
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }

    EpochStats ep;
    ep.epoch = epoch;
    ep.lr = sgd.learning_rate;
    int steps = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t n = std::min(static_cast<size_t>(cfg.batch_size),
                                order.size() - start);
      Tensor images({static_cast<int>(n), 1, H, W});
      std::vector<std::vector<TargetMaps>> targets(n);
      for (size_t k = 0; k < n; ++k) {
        const TrainSample& s = data[static_cast<size_t>(order[start + k])];
        const bool flip = cfg.flip_augment && rng.bernoulli(0.5);
        const Image img = flip ? flip_horizontal(s.image) : s.image;
        std::vector<LabeledBox> gts = flip ? flip_gts(s.gts, W) : s.gts;
        if (agnostic)
          for (LabeledBox& g : gts) g.category = 0;
        for (size_t p = 0; p < img.px.size(); ++p)
          images.v[k * img.px.size() + p] = img.px[p] / 255.0 - 0.5;
        targets[k] = build_targets(gts, pyramid, cfg.assign, num_classes);
      }
      const LossReport r = det.train_step(images, targets, cfg.loss, sgd);
      ep.cls_loss += r.cls_loss;
      ep.box_loss += r.box_loss;
      ep.total += r.total;
      ++steps;
    }
    ep.cls_loss /= steps;
    ep.box_loss /= steps;
    ep.total /= steps;
    ep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    stats.push_back(ep);
    if (log) {
      nlohmann::json j = {{"epoch", ep.epoch},         {"lr", ep.lr},
                          {"cls_loss", ep.cls_loss},   {"box_loss", ep.box_loss},
                          {"total", ep.total},         {"wall_seconds", ep.wall_seconds}};
      log << j.dump() << '\n';
      log.flush();
    }
    save();
    if (on_epoch) on_epoch(ep);
  }
  if (cfg.epochs == 0) save();
  return stats;
}

}  // namespace fovea
