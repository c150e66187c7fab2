// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fovea/detector.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "fovea/checkpoint.hpp"
#include "fovea/ops.hpp"
#include "fovea/rng.hpp"

namespace fovea {

void DetectorConfig::validate() const {
  if (num_classes < 1) throw std::invalid_argument("num_classes must be >= 1");
  if (channels < 1) throw std::invalid_argument("channels must be >= 1");
  if (head_depth < 0) throw std::invalid_argument("head_depth must be >= 0");
  if (!(prior_prob > 0.0 && prior_prob < 1.0))
    throw std::invalid_argument("prior_prob must be in (0,1)");
  if (levels.empty()) throw std::invalid_argument("levels must be non-empty");
  for (size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 2)
      throw std::invalid_argument("levels must start at 2 or higher");
    if (i > 0 && levels[i] != levels[i - 1] + 1)
      throw std::invalid_argument("levels must be contiguous ascending");
  }
}

void to_json(nlohmann::json& j, const DetectorConfig& c) {
  j = nlohmann::json{{"num_classes", c.num_classes},
                     {"levels", c.levels},
                     {"channels", c.channels},
                     {"head_depth", c.head_depth},
                     {"class_agnostic", c.class_agnostic},
                     {"prior_prob", c.prior_prob}};
}

void from_json(const nlohmann::json& j, DetectorConfig& c) {
  c.num_classes = j.value("num_classes", c.num_classes);
  c.levels = j.value("levels", c.levels);
  c.channels = j.value("channels", c.channels);
  c.head_depth = j.value("head_depth", c.head_depth);
  c.class_agnostic = j.value("class_agnostic", c.class_agnostic);
  c.prior_prob = j.value("prior_prob", c.prior_prob);
}

namespace {

// Moves an accumulated gradient buffer out of a holder into value position so
// it can feed the next backward op as dout.
Tensor take_grad(Tensor& holder) {
  Tensor out;
  out.shape = holder.shape;
  out.v = std::move(holder.g);
  holder.g.clear();
  return out;
}

Tensor slice_image(const Tensor& batched, int n) {
  const int C = batched.dim(1), H = batched.dim(2), W = batched.dim(3);
  Tensor out({C, H, W});
  const size_t plane = static_cast<size_t>(C) * H * W;
  std::copy_n(batched.v.begin() + static_cast<std::ptrdiff_t>(plane) * n, plane,
              out.v.begin());
  return out;
}

void scatter_image(Tensor& batched, int n, const Tensor& grad3d, double scale) {
  const size_t plane = grad3d.v.size();
  double* dst = batched.v.data() + plane * static_cast<size_t>(n);
  for (size_t i = 0; i < plane; ++i) dst[i] = grad3d.v[i] * scale;
}

}  // namespace

struct Detector::Trace {
  Tensor input;
  Tensor stem_act;
  std::map<int, Tensor> down_act;    // level -> post-relu down conv
  std::map<int, Tensor> refine_act;  // level -> post-relu refine conv (taps)
  std::vector<Tensor> td;            // per level index, pre-smooth merge
  std::vector<Tensor> pyr;           // per level index, smoothed P_l
  std::vector<std::vector<Tensor>> cls_act, box_act;  // [level][depth]
  HeadOutputs out;
};

Detector::Detector(const DetectorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  init_params(seed);
}

void Detector::init_params(std::uint64_t seed) {
  Rng rng(seed);
  const int C = cfg_.channels;
  const int l_max = cfg_.levels.back();
  const int l_min = cfg_.levels.front();

  auto he_conv = [&](const std::string& name, int co, int ci, int k) {
    Tensor w({co, ci, k, k});
    const double std = std::sqrt(2.0 / (ci * k * k));
    for (double& x : w.v) x = rng.normal() * std;
    params_.emplace_back(name + ".w", std::move(w));
    params_.emplace_back(name + ".b", Tensor({co}));
  };

  he_conv("backbone.stem", C, 1, 3);
  for (int l = 2; l <= l_max; ++l) {
    he_conv("backbone.down" + std::to_string(l), C, C, 3);
    if (l >= l_min) he_conv("backbone.refine" + std::to_string(l), C, C, 3);
  }
  for (int l : cfg_.levels) he_conv("fpn.lateral" + std::to_string(l), C, C, 1);
  for (int l : cfg_.levels) he_conv("fpn.smooth" + std::to_string(l), C, C, 3);
  for (int d = 0; d < cfg_.head_depth; ++d)
    he_conv("head.cls" + std::to_string(d), C, C, 3);
  he_conv("head.cls_out", cfg_.cls_channels(), C, 3);
  for (int d = 0; d < cfg_.head_depth; ++d)
    he_conv("head.box" + std::to_string(d), C, C, 3);
  he_conv("head.box_out", 4, C, 3);

  // Prior bias keeps early focal loss from being swamped by negatives.
  Param& cls_bias = param("head.cls_out.b");
  const double b0 = std::log(cfg_.prior_prob / (1.0 - cfg_.prior_prob));
  std::fill(cls_bias.t.v.begin(), cls_bias.t.v.end(), b0);
}

Param& Detector::param(const std::string& name) {
  for (Param& p : params_)
    if (p.name == name) return p;
  throw std::logic_error("unknown parameter: " + name);
}

const Param& Detector::param(const std::string& name) const {
  for (const Param& p : params_)
    if (p.name == name) return p;
  throw std::logic_error("unknown parameter: " + name);
}

PyramidSpec Detector::pyramid_for(int image_w, int image_h) const {
  return PyramidSpec::make(cfg_.levels, image_w, image_h);
}

void Detector::run_forward(const Tensor& images, Trace& trace) const {
  if (images.shape.size() != 4 || images.dim(1) != 1)
    throw std::invalid_argument("forward: images must be (N,1,H,W)");
  const int stride_max = 1 << cfg_.levels.back();
  if (images.dim(2) % stride_max != 0 || images.dim(3) % stride_max != 0)
    throw std::invalid_argument(
        "forward: image dims must be divisible by the largest stride");

  auto W = [&](const std::string& n) -> const Tensor& {
    return param(n + ".w").t;
  };
  auto B = [&](const std::string& n) -> const Tensor& {
    return param(n + ".b").t;
  };

  const int l_max = cfg_.levels.back();
  const int l_min = cfg_.levels.front();

  trace.input = images;
  trace.stem_act =
      ops::relu(ops::conv2d(images, W("backbone.stem"), B("backbone.stem"), 2, 1));
  const Tensor* prev = &trace.stem_act;
  for (int l = 2; l <= l_max; ++l) {
    const std::string dn = "backbone.down" + std::to_string(l);
    trace.down_act[l] = ops::relu(ops::conv2d(*prev, W(dn), B(dn), 2, 1));
    prev = &trace.down_act[l];
    if (l >= l_min) {
      const std::string rn = "backbone.refine" + std::to_string(l);
      trace.refine_act[l] = ops::relu(ops::conv2d(*prev, W(rn), B(rn), 1, 1));
      prev = &trace.refine_act[l];
    }
  }

  const size_t L = cfg_.levels.size();
  std::vector<Tensor> lat(L);
  for (size_t i = 0; i < L; ++i) {
    const int l = cfg_.levels[i];
    const std::string ln = "fpn.lateral" + std::to_string(l);
    lat[i] = ops::conv2d(trace.refine_act.at(l), W(ln), B(ln), 1, 0);
  }
  trace.td.resize(L);
  trace.td[L - 1] = std::move(lat[L - 1]);
  for (size_t i = L - 1; i-- > 0;) {
    trace.td[i] = std::move(lat[i]);
    ops::add_inplace(trace.td[i], ops::upsample2x_nearest(trace.td[i + 1]));
  }
  trace.pyr.resize(L);
  for (size_t i = 0; i < L; ++i) {
    const int l = cfg_.levels[i];
    const std::string sn = "fpn.smooth" + std::to_string(l);
    trace.pyr[i] = ops::conv2d(trace.td[i], W(sn), B(sn), 1, 1);
  }

  trace.cls_act.assign(L, {});
  trace.box_act.assign(L, {});
  trace.out.cls.resize(L);
  trace.out.box.resize(L);
  for (size_t i = 0; i < L; ++i) {
    const Tensor* h = &trace.pyr[i];
    for (int d = 0; d < cfg_.head_depth; ++d) {
      const std::string hn = "head.cls" + std::to_string(d);
      trace.cls_act[i].push_back(ops::relu(ops::conv2d(*h, W(hn), B(hn), 1, 1)));
      h = &trace.cls_act[i].back();
    }
    trace.out.cls[i] = ops::conv2d(*h, W("head.cls_out"), B("head.cls_out"), 1, 1);

    h = &trace.pyr[i];
    for (int d = 0; d < cfg_.head_depth; ++d) {
      const std::string hn = "head.box" + std::to_string(d);
      trace.box_act[i].push_back(ops::relu(ops::conv2d(*h, W(hn), B(hn), 1, 1)));
      h = &trace.box_act[i].back();
    }
    trace.out.box[i] = ops::conv2d(*h, W("head.box_out"), B("head.box_out"), 1, 1);
  }
}

HeadOutputs Detector::forward(const Tensor& images) const {
  Trace trace;
  run_forward(images, trace);
  return std::move(trace.out);
}

void Detector::run_backward(Trace& trace, std::vector<Tensor>& dcls,
                            std::vector<Tensor>& dbox) {
  const size_t L = cfg_.levels.size();
  const int l_max = cfg_.levels.back();
  const int l_min = cfg_.levels.front();

  std::vector<Tensor> dpyr_holder(L);
  for (size_t i = 0; i < L; ++i) dpyr_holder[i] = Tensor(trace.pyr[i].shape);

  auto branch_backward = [&](size_t i, const std::vector<Tensor>& acts,
                             Tensor dout_val, const std::string& prefix) {
    Param& wout = param(prefix + "_out.w");
    Param& bout = param(prefix + "_out.b");
    const Tensor& in_last = acts.empty() ? trace.pyr[i] : acts.back();
    if (acts.empty()) {
      ops::conv2d_backward(in_last, wout.t, dout_val, 1, 1, &dpyr_holder[i],
                           &wout.t, &bout.t);
      return;
    }
    Tensor dh(in_last.shape);
    ops::conv2d_backward(in_last, wout.t, dout_val, 1, 1, &dh, &wout.t, &bout.t);
    for (int d = cfg_.head_depth - 1; d >= 0; --d) {
      Tensor dact = take_grad(dh);
      Tensor dpre_holder(acts[static_cast<size_t>(d)].shape);
      ops::relu_backward(acts[static_cast<size_t>(d)], dact, &dpre_holder);
      Tensor dpre = take_grad(dpre_holder);
      Param& wd = param(prefix + std::to_string(d) + ".w");
      Param& bd = param(prefix + std::to_string(d) + ".b");
      const Tensor& in_d = d > 0 ? acts[static_cast<size_t>(d) - 1] : trace.pyr[i];
      if (d > 0) {
        dh = Tensor(in_d.shape);
        ops::conv2d_backward(in_d, wd.t, dpre, 1, 1, &dh, &wd.t, &bd.t);
      } else {
        ops::conv2d_backward(in_d, wd.t, dpre, 1, 1, &dpyr_holder[i], &wd.t,
                             &bd.t);
      }
    }
  };

  for (size_t i = 0; i < L; ++i) {
    branch_backward(i, trace.cls_act[i], std::move(dcls[i]), "head.cls");
    branch_backward(i, trace.box_act[i], std::move(dbox[i]), "head.box");
  }

  // FPN: smoothing convs, then the top-down chain in ascending level order so
  // each dtd is complete before it is consumed.
  std::vector<Tensor> dtd_holder(L);
  for (size_t i = 0; i < L; ++i) dtd_holder[i] = Tensor(trace.td[i].shape);
  for (size_t i = 0; i < L; ++i) {
    const int l = cfg_.levels[i];
    Param& sw = param("fpn.smooth" + std::to_string(l) + ".w");
    Param& sb = param("fpn.smooth" + std::to_string(l) + ".b");
    Tensor dpyr = take_grad(dpyr_holder[i]);
    ops::conv2d_backward(trace.td[i], sw.t, dpyr, 1, 1, &dtd_holder[i], &sw.t,
                         &sb.t);
  }
  std::map<int, Tensor> dnode_holder;
  for (int l : cfg_.levels) dnode_holder[l] = Tensor(trace.refine_act.at(l).shape);
  for (size_t i = 0; i < L; ++i) {
    const int l = cfg_.levels[i];
    Tensor dtd = take_grad(dtd_holder[i]);
    if (i + 1 < L) ops::upsample2x_nearest_backward(dtd, &dtd_holder[i + 1]);
    Param& lw = param("fpn.lateral" + std::to_string(l) + ".w");
    Param& lb = param("fpn.lateral" + std::to_string(l) + ".b");
    ops::conv2d_backward(trace.refine_act.at(l), lw.t, dtd, 1, 0,
                         &dnode_holder[l], &lw.t, &lb.t);
  }

  // Backbone, top level first; each tap already carries its lateral gradient.
  Tensor dstem_holder(trace.stem_act.shape);
  std::map<int, Tensor> ddown_holder;
  for (int l = 2; l <= l_max; ++l) ddown_holder[l] = Tensor(trace.down_act.at(l).shape);

  for (int l = l_max; l >= 2; --l) {
    if (l >= l_min) {
      // node(l) = refine_act; backtrack through refine conv first.
      Tensor dnode = take_grad(dnode_holder[l]);
      Tensor dpre_holder(trace.refine_act.at(l).shape);
      ops::relu_backward(trace.refine_act.at(l), dnode, &dpre_holder);
      Tensor dpre = take_grad(dpre_holder);
      Param& rw = param("backbone.refine" + std::to_string(l) + ".w");
      Param& rb = param("backbone.refine" + std::to_string(l) + ".b");
      ops::conv2d_backward(trace.down_act.at(l), rw.t, dpre, 1, 1,
                           &ddown_holder[l], &rw.t, &rb.t);
    }
    Tensor ddown = take_grad(ddown_holder[l]);
    Tensor dpre_holder(trace.down_act.at(l).shape);
    ops::relu_backward(trace.down_act.at(l), ddown, &dpre_holder);
    Tensor dpre = take_grad(dpre_holder);
    Param& dw = param("backbone.down" + std::to_string(l) + ".w");
    Param& db = param("backbone.down" + std::to_string(l) + ".b");
    const bool prev_is_stem = (l == 2);
    const bool prev_has_refine = !prev_is_stem && (l - 1 >= l_min);
    const Tensor& prev_act = prev_is_stem
                                 ? trace.stem_act
                                 : (prev_has_refine ? trace.refine_act.at(l - 1)
                                                    : trace.down_act.at(l - 1));
    Tensor* prev_holder = prev_is_stem
                              ? &dstem_holder
                              : (prev_has_refine ? &dnode_holder[l - 1]
                                                 : &ddown_holder[l - 1]);
    ops::conv2d_backward(prev_act, dw.t, dpre, 2, 1, prev_holder, &dw.t, &db.t);
  }

  Tensor dstem = take_grad(dstem_holder);
  Tensor dpre_holder(trace.stem_act.shape);
  ops::relu_backward(trace.stem_act, dstem, &dpre_holder);
  Tensor dpre = take_grad(dpre_holder);
  Param& sw = param("backbone.stem.w");
  Param& sb = param("backbone.stem.b");
  ops::conv2d_backward(trace.input, sw.t, dpre, 2, 1, nullptr, &sw.t, &sb.t);
}

LossReport Detector::compute_gradients(
    const Tensor& images, const std::vector<std::vector<TargetMaps>>& targets,
    const LossParams& loss_params) {
  const int N = images.dim(0);
  if (targets.size() != static_cast<size_t>(N))
    throw std::invalid_argument("train_step: one target set per image required");

  for (Param& p : params_) p.t.zero_grad();

  Trace trace;
  run_forward(images, trace);
  const size_t L = cfg_.levels.size();
  for (int n = 0; n < N; ++n) {
    if (targets[static_cast<size_t>(n)].size() != L)
      throw std::invalid_argument("train_step: target level count mismatch");
    for (size_t i = 0; i < L; ++i) {
      const TargetMaps& t = targets[static_cast<size_t>(n)][i];
      if (t.level.grid_h != trace.out.cls[i].dim(2) ||
          t.level.grid_w != trace.out.cls[i].dim(3))
        throw std::invalid_argument("train_step: targets built for a different pyramid");
    }
  }

  LossReport report;
  for (const auto& per_image : targets)
    for (const TargetMaps& t : per_image) report.num_pos += t.pos_count;

  std::vector<Tensor> dcls(L), dbox(L);
  for (size_t i = 0; i < L; ++i) {
    dcls[i] = Tensor(trace.out.cls[i].shape);
    dbox[i] = Tensor(trace.out.box[i].shape);
  }
  for (int n = 0; n < N; ++n) {
    for (size_t i = 0; i < L; ++i) {
      const TargetMaps& t = targets[static_cast<size_t>(n)][i];
      auto [cls_l, cls_g] = focal_loss(slice_image(trace.out.cls[i], n), t.cls,
                                       loss_params.focal, report.num_pos);
      auto [box_l, box_g] = smooth_l1(slice_image(trace.out.box[i], n), t,
                                      loss_params.smooth_l1_beta, report.num_pos);
      report.cls_loss += cls_l;
      report.box_loss += box_l;
      scatter_image(dcls[i], n, cls_g, 1.0);
      scatter_image(dbox[i], n, box_g, loss_params.box_weight);
    }
  }
  report.total = report.cls_loss + loss_params.box_weight * report.box_loss;

  if (!std::isfinite(report.total)) {
    // Identify the worst head cell for the error message.
    std::ostringstream msg;
    msg << "non-finite loss (cls=" << report.cls_loss
        << ", box=" << report.box_loss << ")";
    for (size_t i = 0; i < L; ++i) {
      for (size_t k = 0; k < trace.out.cls[i].v.size(); ++k)
        if (!std::isfinite(trace.out.cls[i].v[k])) {
          msg << "; first non-finite cls logit at level " << cfg_.levels[i]
              << " flat index " << k;
          throw std::runtime_error(msg.str());
        }
      for (size_t k = 0; k < trace.out.box[i].v.size(); ++k)
        if (!std::isfinite(trace.out.box[i].v[k])) {
          msg << "; first non-finite box offset at level " << cfg_.levels[i]
              << " flat index " << k;
          throw std::runtime_error(msg.str());
        }
    }
    throw std::runtime_error(msg.str());
  }

  run_backward(trace, dcls, dbox);
  return report;
}

LossReport Detector::train_step(
    const Tensor& images, const std::vector<std::vector<TargetMaps>>& targets,
    const LossParams& loss_params, const SgdConfig& sgd) {
  LossReport report = compute_gradients(images, targets, loss_params);
  sgd_step(params_, sgd);
  return report;
}

void Detector::save(const std::string& path, std::uint64_t seed,
                    const nlohmann::json& extra_hyper) const {
  nlohmann::json hyper = extra_hyper;
  hyper["detector"] = cfg_;
  save_checkpoint(path, params_, hyper, seed);
}

Detector Detector::load(const std::string& path) {
  LoadedCheckpoint ck = load_checkpoint(path);
  DetectorConfig cfg = ck.hyper.at("detector").get<DetectorConfig>();
  Detector det(cfg, ck.seed);
  if (ck.names.size() != det.params_.size())
    throw std::runtime_error("checkpoint parameter count mismatch in " + path);
  for (size_t i = 0; i < ck.names.size(); ++i) {
    Param& p = det.param(ck.names[i]);
    if (p.t.shape != ck.tensors[i].shape)
      throw std::runtime_error("checkpoint shape mismatch for " + ck.names[i]);
    p.t.v = std::move(ck.tensors[i].v);
  }
  return det;
}

}  // namespace fovea
