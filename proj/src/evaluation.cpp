// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fovea/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <stdexcept>

namespace fovea {

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

namespace {

constexpr int kRecallPoints = 101;

struct MatchedDet {
  double score;
  int id;
  bool tp;
};

// Greedy matching of one image's detections (already score-sorted) against
// its gts at one threshold. Returns tp flags aligned with dets; detections
// absorbed by ignored gts get dropped (flag -1).
void match_image(const std::vector<const DetRecord*>& dets,
                 const std::vector<const GtRecord*>& gts,
                 const std::vector<bool>& gt_ignored, double thresh,
                 std::vector<int>* det_flags) {
  std::vector<bool> gt_matched(gts.size(), false);
  det_flags->assign(dets.size(), 0);
  for (size_t d = 0; d < dets.size(); ++d) {
    double best_iou = -1.0;
    int best_g = -1;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (gt_ignored[g] || gt_matched[g]) continue;
      const double v = iou(dets[d]->box, gts[g]->box);
      if (v < thresh) continue;
      if (v > best_iou) {  // ties keep the earlier (lower-id) gt
        best_iou = v;
        best_g = static_cast<int>(g);
      }
    }
    if (best_g >= 0) {
      gt_matched[static_cast<size_t>(best_g)] = true;
      (*det_flags)[d] = 1;
      continue;
    }
    // No regular match; an overlapping ignored gt absorbs the detection.
    for (size_t g = 0; g < gts.size(); ++g) {
      if (!gt_ignored[g]) continue;
      if (iou(dets[d]->box, gts[g]->box) >= thresh) {
        (*det_flags)[d] = -1;
        break;
      }
    }
  }
}

// 101-point interpolated AP from per-detection (score, tp) pairs.
double interpolated_ap(std::vector<MatchedDet>& entries, int n_gt) {
  if (n_gt == 0) return 0.0;
  std::sort(entries.begin(), entries.end(),
            [](const MatchedDet& a, const MatchedDet& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.id < b.id;
            });
  std::vector<double> recall, precision;
  int tp = 0, fp = 0;
  for (const MatchedDet& e : entries) {
    if (e.tp) ++tp; else ++fp;
    recall.push_back(static_cast<double>(tp) / n_gt);
    precision.push_back(static_cast<double>(tp) / (tp + fp));
  }
  // Precision envelope, then sample at 0, 0.01, ..., 1.00.
  for (size_t i = precision.size(); i-- > 1;)
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0;
  for (int k = 0; k < kRecallPoints; ++k) {
    const double r = k / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end())
      ap += precision[static_cast<size_t>(it - recall.begin())];
  }
  return ap / kRecallPoints;
}

using GtFilter = std::function<bool(const GtRecord&)>;  // true = counted

struct Indexed {
  std::vector<int> classes;  // sorted distinct gt categories
  // per class: per image id: records
  std::map<int, std::map<int, std::vector<const GtRecord*>>> gts;
  std::map<int, std::map<int, std::vector<const DetRecord*>>> dets;
};

Indexed build_index(const std::vector<DetRecord>& dets,
                    const std::vector<GtRecord>& gts) {
  Indexed ix;
  std::set<int> det_ids, gt_ids, classes;
  for (const GtRecord& g : gts) {
    if (!gt_ids.insert(g.id).second)
      throw std::invalid_argument("duplicate gt id " + std::to_string(g.id));
    classes.insert(g.category);
    ix.gts[g.category][g.image_id].push_back(&g);
  }
  for (const DetRecord& d : dets) {
    if (!det_ids.insert(d.id).second)
      throw std::invalid_argument("duplicate detection id " +
                                  std::to_string(d.id));
    ix.dets[d.category][d.image_id].push_back(&d);
  }
  ix.classes.assign(classes.begin(), classes.end());
  for (auto& [c, per_image] : ix.dets)
    for (auto& [img, v] : per_image)
      std::sort(v.begin(), v.end(), [](const DetRecord* a, const DetRecord* b) {
        if (a->score != b->score) return a->score > b->score;
        return a->id < b->id;
      });
  // Gts iterate in ascending id order for deterministic tie-breaks.
  for (auto& [c, per_image] : ix.gts)
    for (auto& [img, v] : per_image)
      std::sort(v.begin(), v.end(),
                [](const GtRecord* a, const GtRecord* b) { return a->id < b->id; });
  return ix;
}

// AP of one class at one threshold under a gt filter; nullopt when the class
// has no counted gts.
std::optional<double> class_threshold_ap(const Indexed& ix, int cls,
                                         double thresh,
                                         const GtFilter& counted) {
  int n_gt = 0;
  std::vector<MatchedDet> entries;
  const auto git = ix.gts.find(cls);
  const auto dit = ix.dets.find(cls);

  std::set<int> image_ids;
  if (git != ix.gts.end())
    for (const auto& [img, v] : git->second) image_ids.insert(img);
  if (dit != ix.dets.end())
    for (const auto& [img, v] : dit->second) image_ids.insert(img);

  static const std::vector<const GtRecord*> no_gts;
  static const std::vector<const DetRecord*> no_dets;
  for (int img : image_ids) {
    const auto& img_gts = (git != ix.gts.end() && git->second.count(img))
                              ? git->second.at(img)
                              : no_gts;
    const auto& img_dets = (dit != ix.dets.end() && dit->second.count(img))
                               ? dit->second.at(img)
                               : no_dets;
    std::vector<bool> ignored(img_gts.size());
    for (size_t g = 0; g < img_gts.size(); ++g) {
      ignored[g] = !counted(*img_gts[g]);
      if (!ignored[g]) ++n_gt;
    }
    std::vector<int> flags;
    match_image(img_dets, img_gts, ignored, thresh, &flags);
    for (size_t d = 0; d < img_dets.size(); ++d) {
      if (flags[d] < 0) continue;  // absorbed by an ignored gt
      entries.push_back({img_dets[d]->score, img_dets[d]->id, flags[d] == 1});
    }
  }
  if (n_gt == 0) return std::nullopt;
  return interpolated_ap(entries, n_gt);
}

// Mean AP over classes (with counted gts) per threshold, and per-class means.
struct FilteredEval {
  std::optional<double> mean_ap;              // over thresholds and classes
  std::vector<double> ap_at;                  // per threshold (classes meaned)
  std::map<int, double> per_class;            // per class (thresholds meaned)
};

FilteredEval run_eval(const Indexed& ix, const std::vector<double>& thresholds,
                      const GtFilter& counted) {
  FilteredEval out;
  std::map<int, std::vector<double>> per_class_aps;
  for (double t : thresholds) {
    double sum = 0.0;
    int n = 0;
    for (int c : ix.classes) {
      const auto ap = class_threshold_ap(ix, c, t, counted);
      if (!ap) continue;
      sum += *ap;
      ++n;
      per_class_aps[c].push_back(*ap);
    }
    out.ap_at.push_back(n > 0 ? sum / n : 0.0);
  }
  if (!per_class_aps.empty()) {
    double total = 0.0;
    for (const auto& [c, aps] : per_class_aps) {
      double m = 0.0;
      for (double a : aps) m += a;
      m /= static_cast<double>(aps.size());
      out.per_class[c] = m;
      total += m;
    }
    out.mean_ap = total / static_cast<double>(per_class_aps.size());
  }
  return out;
}

}  // namespace

EvalResult evaluate(const std::vector<DetRecord>& dets,
                    const std::vector<GtRecord>& gts,
                    const std::vector<double>& iou_thresholds) {
  if (iou_thresholds.empty())
    throw std::invalid_argument("evaluate: need at least one IoU threshold");
  const Indexed ix = build_index(dets, gts);
  const GtFilter all = [](const GtRecord&) { return true; };

  EvalResult result;
  const FilteredEval main = run_eval(ix, iou_thresholds, all);
  result.ap = main.mean_ap.value_or(0.0);
  result.per_class_ap = main.per_class;
  for (size_t i = 0; i < iou_thresholds.size(); ++i) {
    if (std::fabs(iou_thresholds[i] - 0.5) < 1e-12) result.ap50 = main.ap_at[i];
    if (std::fabs(iou_thresholds[i] - 0.75) < 1e-12) result.ap75 = main.ap_at[i];
  }

  const double small_max = 32.0 * 32.0, medium_max = 96.0 * 96.0;
  result.ap_small =
      run_eval(ix, iou_thresholds,
               [&](const GtRecord& g) { return g.box.area() < small_max; })
          .mean_ap;
  result.ap_medium = run_eval(ix, iou_thresholds,
                              [&](const GtRecord& g) {
                                const double a = g.box.area();
                                return a >= small_max && a < medium_max;
                              })
                         .mean_ap;
  result.ap_large =
      run_eval(ix, iou_thresholds,
               [&](const GtRecord& g) { return g.box.area() >= medium_max; })
          .mean_ap;
  return result;
}

std::map<int, double> average_recall(const std::vector<DetRecord>& proposals,
                                     const std::vector<GtRecord>& gts,
                                     const std::vector<int>& ks) {
  // Class-agnostic: flatten categories before indexing.
  std::vector<GtRecord> g1(gts);
  for (GtRecord& g : g1) g.category = 0;

  std::map<int, double> out;
  const std::vector<double> thresholds = coco_iou_thresholds();
  for (int k : ks) {
    std::map<int, std::vector<DetRecord>> by_image;
    for (const DetRecord& p : proposals) by_image[p.image_id].push_back(p);
    std::vector<DetRecord> top;
    for (auto& [img, v] : by_image) {
      std::sort(v.begin(), v.end(), [](const DetRecord& a, const DetRecord& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
      });
      if (v.size() > static_cast<size_t>(k)) v.resize(static_cast<size_t>(k));
      top.insert(top.end(), v.begin(), v.end());
    }
    for (DetRecord& d : top) d.category = 0;

    const Indexed ix = build_index(top, g1);
    const int n_gt = static_cast<int>(g1.size());
    double ar = 0.0;
    if (n_gt > 0) {
      for (double t : thresholds) {
        int matched = 0;
        if (ix.gts.count(0)) {
          for (const auto& [img, img_gts] : ix.gts.at(0)) {
            static const std::vector<const DetRecord*> none;
            const auto& img_dets =
                (ix.dets.count(0) && ix.dets.at(0).count(img))
                    ? ix.dets.at(0).at(img)
                    : none;
            std::vector<int> flags;
            std::vector<bool> ignored(img_gts.size(), false);
            match_image(img_dets, img_gts, ignored, t, &flags);
            for (int f : flags) matched += (f == 1);
          }
        }
        ar += static_cast<double>(matched) / n_gt;
      }
      ar /= static_cast<double>(thresholds.size());
    }
    out[k] = ar;
  }
  return out;
}

AspectBucketReport aspect_report(const std::vector<DetRecord>& dets,
                                 const std::vector<GtRecord>& gts) {
  for (const GtRecord& g : gts)
    if (!(g.box.width() > 0.0) || !(g.box.height() > 0.0))
      throw std::invalid_argument("aspect_report: degenerate gt box id " +
                                  std::to_string(g.id));
  auto aspect = [](const GtRecord& g) {
    return std::max(g.box.height() / g.box.width(),
                    g.box.width() / g.box.height());
  };
  const Indexed ix = build_index(dets, gts);
  const std::vector<double> thresholds = coco_iou_thresholds();

  AspectBucketReport report;
  report.ap_all =
      run_eval(ix, thresholds, [](const GtRecord&) { return true; })
          .mean_ap.value_or(0.0);
  report.ap_u_lt3 =
      run_eval(ix, thresholds,
               [&](const GtRecord& g) { return aspect(g) < 3.0; })
          .mean_ap;
  report.ap_u_3to5 = run_eval(ix, thresholds,
                              [&](const GtRecord& g) {
                                const double u = aspect(g);
                                return u >= 3.0 && u <= 5.0;
                              })
                         .mean_ap;
  report.ap_u_gt5 =
      run_eval(ix, thresholds,
               [&](const GtRecord& g) { return aspect(g) > 5.0; })
          .mean_ap;
  return report;
}

std::vector<std::pair<int, double>> per_class_delta(const EvalResult& a,
                                                    const EvalResult& b) {
  if (a.per_class_ap.size() != b.per_class_ap.size())
    throw std::invalid_argument("per_class_delta: class sets differ");
  std::vector<std::pair<int, double>> out;
  for (const auto& [c, ap_a] : a.per_class_ap) {
    const auto it = b.per_class_ap.find(c);
    if (it == b.per_class_ap.end())
      throw std::invalid_argument("per_class_delta: class sets differ");
    out.emplace_back(c, ap_a - it->second);
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  return out;
}

}  // namespace fovea
