// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fovea/runconfig.hpp"

#include <fstream>
#include <stdexcept>

namespace fovea {

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["dataset"] = dataset;
  j["detector"] = detector;
  j["assign"] = {{"sigma", assign.sigma}, {"eta", assign.eta}};
  j["train"] = {{"lr", train.sgd.learning_rate},
                {"momentum", train.sgd.momentum},
                {"weight_decay", train.sgd.weight_decay},
                {"batch_size", train.batch_size},
                {"epochs", train.epochs},
                {"seed", train.seed},
                {"flip", train.flip_augment},
                {"focal_alpha", train.loss.focal.alpha},
                {"focal_gamma", train.loss.focal.gamma},
                {"smooth_l1_beta", train.loss.smooth_l1_beta},
                {"box_weight", train.loss.box_weight}};
  j["inference"] = {{"score_thresh", inference.score_thresh},
                    {"per_level_topk", inference.per_level_topk},
                    {"nms_iou", inference.nms_iou},
                    {"max_detections", inference.max_detections}};
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  if (j.contains("dataset")) c.dataset = j.at("dataset").get<DatasetSpec>();
  if (j.contains("detector")) c.detector = j.at("detector").get<DetectorConfig>();
  if (j.contains("assign")) {
    const auto& a = j.at("assign");
    c.assign.sigma = a.value("sigma", c.assign.sigma);
    c.assign.eta = a.value("eta", c.assign.eta);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    c.train.sgd.learning_rate = t.value("lr", c.train.sgd.learning_rate);
    c.train.sgd.momentum = t.value("momentum", c.train.sgd.momentum);
    c.train.sgd.weight_decay = t.value("weight_decay", c.train.sgd.weight_decay);
    c.train.batch_size = t.value("batch_size", c.train.batch_size);
    c.train.epochs = t.value("epochs", c.train.epochs);
    c.train.seed = t.value("seed", c.train.seed);
    c.train.flip_augment = t.value("flip", c.train.flip_augment);
    c.train.loss.focal.alpha = t.value("focal_alpha", c.train.loss.focal.alpha);
    c.train.loss.focal.gamma = t.value("focal_gamma", c.train.loss.focal.gamma);
    c.train.loss.smooth_l1_beta =
        t.value("smooth_l1_beta", c.train.loss.smooth_l1_beta);
    c.train.loss.box_weight = t.value("box_weight", c.train.loss.box_weight);
  }
  if (j.contains("inference")) {
    const auto& i = j.at("inference");
    c.inference.score_thresh = i.value("score_thresh", c.inference.score_thresh);
    c.inference.per_level_topk =
        i.value("per_level_topk", c.inference.per_level_topk);
    c.inference.nms_iou = i.value("nms_iou", c.inference.nms_iou);
    c.inference.max_detections =
        i.value("max_detections", c.inference.max_detections);
  }
  c.train.assign = c.assign;
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed config " + path + ": " + e.what());
  }
  return from_json(j);
}

void RunConfig::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config " + path);
  out << to_json().dump(2) << '\n';
}

}  // namespace fovea
