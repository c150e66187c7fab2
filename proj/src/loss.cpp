// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fovea/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace fovea {

namespace {

// log(1 + e^z) without overflow.
double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::pair<double, Tensor> focal_loss(const Tensor& cls_logits,
                                     const std::vector<CellLabel>& labels,
                                     const FocalParams& params,
                                     int num_pos_norm) {
  if (cls_logits.shape.size() != 3)
    throw std::invalid_argument("focal_loss: logits must be (C,H,W)");
  const int C = cls_logits.dim(0), H = cls_logits.dim(1), W = cls_logits.dim(2);
  if (labels.size() != static_cast<size_t>(H) * W)
    throw std::invalid_argument("focal_loss: label map size mismatch");
  if (!(params.alpha > 0.0 && params.alpha < 1.0) || params.gamma < 0.0)
    throw std::invalid_argument("focal_loss: bad parameters");
  check_finite(cls_logits, "focal_loss logits");

  const double alpha = params.alpha;
  const double gamma = params.gamma;
  const double norm = 1.0 / std::max(1, num_pos_norm);
  Tensor grad(cls_logits.shape);
  double loss = 0.0;

  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const CellLabel& lab = labels[static_cast<size_t>(y) * W + x];
      if (lab.tag == CellTag::Ignore) continue;
      for (int c = 0; c < C; ++c) {
        const size_t idx = (static_cast<size_t>(c) * H + y) * W + x;
        const double z = cls_logits.v[idx];
        const double p = stable_sigmoid(z);
        const bool positive =
            lab.tag == CellTag::Positive && lab.category == c;
        if (positive) {
          const double log_p = -softplus(-z);   // log(p)
          const double one_m_p = 1.0 - p;
          const double mod = std::pow(one_m_p, gamma);
          loss += -alpha * mod * log_p;
          grad.v[idx] = alpha * mod * (gamma * p * log_p - one_m_p) * norm;
        } else {
          const double log_1mp = -softplus(z);  // log(1-p)
          const double mod = std::pow(p, gamma);
          loss += -(1.0 - alpha) * mod * log_1mp;
          grad.v[idx] =
              (1.0 - alpha) * mod * (p - gamma * (1.0 - p) * log_1mp) * norm;
        }
      }
    }
  }
  return {loss * norm, std::move(grad)};
}

double smooth_l1_value(double d, double beta) {
  const double a = std::fabs(d);
  if (a < beta) return 0.5 * d * d / beta;
  return a - 0.5 * beta;
}

double smooth_l1_grad(double d, double beta) {
  if (std::fabs(d) < beta) return d / beta;
  return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
}

std::pair<double, Tensor> smooth_l1(const Tensor& box_pred,
                                    const TargetMaps& targets, double beta,
                                    int num_pos_norm) {
  if (box_pred.shape.size() != 3 || box_pred.dim(0) != 4)
    throw std::invalid_argument("smooth_l1: pred must be (4,H,W)");
  if (!(beta > 0.0)) throw std::invalid_argument("smooth_l1: beta must be > 0");
  const int H = box_pred.dim(1), W = box_pred.dim(2);
  if (targets.level.grid_h != H || targets.level.grid_w != W)
    throw std::invalid_argument("smooth_l1: grid mismatch");
  check_finite(box_pred, "smooth_l1 pred");

  const double norm = 1.0 / std::max(1, num_pos_norm);
  Tensor grad(box_pred.shape);
  double loss = 0.0;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const size_t cell = static_cast<size_t>(y) * W + x;
      if (targets.cls[cell].tag != CellTag::Positive) continue;
      for (int c = 0; c < 4; ++c) {
        const size_t idx = (static_cast<size_t>(c) * H + y) * W + x;
        const double d = box_pred.v[idx] - targets.box[cell * 4 + c];
        loss += smooth_l1_value(d, beta);
        grad.v[idx] = smooth_l1_grad(d, beta) * norm;
      }
    }
  }
  return {loss * norm, std::move(grad)};
}

LossReport total_loss(const std::vector<Tensor>& cls_logits,
                      const std::vector<Tensor>& box_pred,
                      const std::vector<TargetMaps>& targets,
                      const LossParams& params, std::vector<Tensor>* dcls,
                      std::vector<Tensor>* dbox) {
  if (cls_logits.size() != targets.size() || box_pred.size() != targets.size())
    throw std::invalid_argument("total_loss: level count mismatch");
  LossReport report;
  for (const TargetMaps& t : targets) report.num_pos += t.pos_count;
  const int norm = report.num_pos;
  if (dcls) dcls->clear();
  if (dbox) dbox->clear();
  for (size_t i = 0; i < targets.size(); ++i) {
    auto [cls_l, cls_g] =
        focal_loss(cls_logits[i], targets[i].cls, params.focal, norm);
    auto [box_l, box_g] =
        smooth_l1(box_pred[i], targets[i], params.smooth_l1_beta, norm);
    report.cls_loss += cls_l;
    report.box_loss += box_l;
    if (dcls) dcls->push_back(std::move(cls_g));
    if (dbox) {
      for (double& v : box_g.v) v *= params.box_weight;
      dbox->push_back(std::move(box_g));
    }
  }
  report.total = report.cls_loss + params.box_weight * report.box_loss;
  return report;
}

}  // namespace fovea
