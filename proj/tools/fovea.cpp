// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "fovea/dataset.hpp"
#include "fovea/detector.hpp"
#include "fovea/inference.hpp"
#include "fovea/runconfig.hpp"
#include "fovea/threads.hpp"
#include "fovea/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void prepare_out(const std::string& out_dir, const fovea::RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output dir " + out_dir);
  cfg.write(out_dir + "/config.json");
}

std::vector<fovea::TrainSample> load_samples(const std::string& data_dir,
                                             const fovea::CocoDataset& ds) {
  std::vector<fovea::TrainSample> samples;
  for (const auto& info : ds.images) {
    fovea::TrainSample s;
    s.image = fovea::read_png_gray(data_dir + "/" + info.file_name);
    const auto it = ds.gts_by_image.find(info.id);
    if (it != ds.gts_by_image.end()) s.gts = it->second;
    samples.push_back(std::move(s));
  }
  return samples;
}

// Forward + postprocess over a whole dataset directory.
std::vector<std::pair<int, std::vector<fovea::Detection>>> detect_dataset(
    const fovea::Detector& det, const std::string& data_dir,
    const fovea::CocoDataset& ds, const fovea::InferenceParams& params,
    bool proposals, int topk) {
  std::vector<std::pair<int, std::vector<fovea::Detection>>> out;
  if (ds.images.empty()) return out;
  const fovea::PyramidSpec pyr =
      det.pyramid_for(ds.images[0].width, ds.images[0].height);
  const int batch = 8;
  for (size_t start = 0; start < ds.images.size(); start += batch) {
    const size_t n = std::min<size_t>(batch, ds.images.size() - start);
    fovea::Tensor images(
        {static_cast<int>(n), 1, ds.images[0].height, ds.images[0].width});
    for (size_t k = 0; k < n; ++k) {
      const auto& info = ds.images[start + k];
      if (info.width != ds.images[0].width || info.height != ds.images[0].height)
        throw std::runtime_error("images in a batch run must share dimensions");
      const fovea::Image img = fovea::read_png_gray(data_dir + "/" + info.file_name);
      for (size_t p = 0; p < img.px.size(); ++p)
        images.v[k * img.px.size() + p] = img.px[p] / 255.0 - 0.5;
    }
    const fovea::HeadOutputs outputs = det.forward(images);
    for (size_t k = 0; k < n; ++k) {
      auto dets = proposals
                      ? fovea::propose(outputs, static_cast<int>(k), pyr, topk, params)
                      : fovea::postprocess(outputs, static_cast<int>(k), pyr, params);
      out.push_back({ds.images[start + k].id, std::move(dets)});
    }
  }
  return out;
}

json eval_to_json(const fovea::EvalResult& r, const fovea::CocoDataset& ds) {
  json j;
  j["ap"] = r.ap;
  j["ap50"] = r.ap50;
  j["ap75"] = r.ap75;
  if (r.ap_small) j["ap_small"] = *r.ap_small;
  if (r.ap_medium) j["ap_medium"] = *r.ap_medium;
  if (r.ap_large) j["ap_large"] = *r.ap_large;
  json per_class = json::object();
  for (const auto& [c, ap] : r.per_class_ap) {
    const std::string name =
        c < ds.num_classes() && !ds.category_names[static_cast<size_t>(c)].empty()
            ? ds.category_names[static_cast<size_t>(c)]
            : std::to_string(c);
    per_class[name] = ap;
  }
  j["per_class_ap"] = per_class;
  if (!r.ar_by_k.empty()) {
    json ar = json::object();
    for (const auto& [k, v] : r.ar_by_k) ar[std::to_string(k)] = v;
    j["ar_by_k"] = ar;
  }
  return j;
}

void write_eval_table(const std::string& path, const fovea::EvalResult& r,
                      const fovea::AspectBucketReport& aspect,
                      const fovea::CocoDataset& ds) {
  std::ofstream out(path);
  auto cell = [](const std::optional<double>& v) {
    char buf[16];
    if (v)
      std::snprintf(buf, sizeof(buf), "%6.3f", *v);
    else
      std::snprintf(buf, sizeof(buf), "%6s", "-");
    return std::string(buf);
  };
  char line[128];
  out << "metric   AP     AP50   AP75   AP_S   AP_M   AP_L\n";
  std::snprintf(line, sizeof(line), "all     %6.3f %6.3f %6.3f %s %s %s\n",
                r.ap, r.ap50, r.ap75, cell(r.ap_small).c_str(),
                cell(r.ap_medium).c_str(), cell(r.ap_large).c_str());
  out << line << "\n";
  out << "aspect buckets (u = max(h/w, w/h))\n";
  out << "AP_all  AP_u<3  AP_3..5  AP_u>5\n";
  std::snprintf(line, sizeof(line), "%6.3f %s  %s   %s\n", aspect.ap_all,
                cell(aspect.ap_u_lt3).c_str(), cell(aspect.ap_u_3to5).c_str(),
                cell(aspect.ap_u_gt5).c_str());
  out << line << "\n";
  out << "per-class AP\n";
  for (const auto& [c, ap] : r.per_class_ap) {
    const std::string name =
        c < ds.num_classes() ? ds.category_names[static_cast<size_t>(c)]
                             : std::to_string(c);
    std::snprintf(line, sizeof(line), "%-10s %6.3f\n", name.c_str(), ap);
    out << line;
  }
  if (!r.ar_by_k.empty()) {
    out << "\nproposal average recall\n";
    for (const auto& [k, v] : r.ar_by_k) {
      std::snprintf(line, sizeof(line), "AR@%-5d %6.3f\n", k, v);
      out << line;
    }
  }
}

int cmd_gen_data(const fovea::RunConfig& cfg, const std::string& out_dir) {
  prepare_out(out_dir, cfg);
  const fovea::CocoDataset ds = fovea::generate_dataset(cfg.dataset, out_dir);
  std::printf("wrote %zu images and %s/annotations.json\n", ds.images.size(),
              out_dir.c_str());
  return 0;
}

int cmd_targets(const fovea::RunConfig& cfg, const std::string& data_dir,
                const std::string& out_dir, int viz_limit) {
  prepare_out(out_dir, cfg);
  const fovea::CocoDataset ds = fovea::load_coco(data_dir + "/annotations.json");
  json dump;
  dump["sigma"] = cfg.assign.sigma;
  dump["eta"] = cfg.assign.eta;
  json images = json::array();
  long total_pos = 0;
  std::map<int, long> per_level;
  int rendered = 0;

  for (const auto& info : ds.images) {
    const fovea::PyramidSpec pyr =
        fovea::PyramidSpec::make(cfg.detector.levels, info.width, info.height);
    const auto& gts = ds.gts_by_image.at(info.id);
    const auto maps = fovea::build_targets(gts, pyr, cfg.assign, ds.num_classes());

    json jimg;
    jimg["image_id"] = info.id;
    json jlevels = json::array();
    for (const auto& m : maps) {
      json jl;
      jl["level"] = m.level.l;
      jl["pos_count"] = m.pos_count;
      json pos = json::array();
      for (int y = 0; y < m.level.grid_h; ++y)
        for (int x = 0; x < m.level.grid_w; ++x) {
          const fovea::CellLabel& lab = m.at(x, y);
          if (lab.tag != fovea::CellTag::Positive) continue;
          const double* t = m.box_at(x, y);
          pos.push_back({{"x", x},
                         {"y", y},
                         {"category", lab.category},
                         {"object", lab.object_index},
                         {"offsets", {t[0], t[1], t[2], t[3]}}});
        }
      jl["positives"] = pos;
      jlevels.push_back(jl);
      total_pos += m.pos_count;
      per_level[m.level.l] += m.pos_count;

      if (rendered < viz_limit) {
        for (int c = 0; c < ds.num_classes(); ++c) {
          fovea::Image heat;
          heat.w = m.level.grid_w;
          heat.h = m.level.grid_h;
          heat.px.assign(static_cast<size_t>(heat.w) * heat.h, 0);
          bool any = false;
          for (int y = 0; y < heat.h; ++y)
            for (int x = 0; x < heat.w; ++x)
              if (m.at(x, y).tag == fovea::CellTag::Positive &&
                  m.at(x, y).category == c) {
                heat.at(x, y) = 255;  // per-map max normalization
                any = true;
              }
          if (!any) continue;
          char name[64];
          std::snprintf(name, sizeof(name), "heat_img%06d_l%d_c%d.png",
                        info.id, m.level.l, c);
          fovea::write_png_gray(out_dir + "/" + name, heat);
        }
      }
    }
    if (rendered < viz_limit) ++rendered;
    jimg["levels"] = jlevels;
    images.push_back(jimg);
  }
  dump["images"] = images;
  dump["total_positives"] = total_pos;
  json jpl = json::object();
  for (const auto& [l, n] : per_level) jpl[std::to_string(l)] = n;
  dump["per_level_positives"] = jpl;
  std::ofstream(out_dir + "/targets.json") << dump.dump(2) << '\n';
  std::printf("total positives: %ld\n", total_pos);
  return 0;
}

int cmd_train(fovea::RunConfig cfg, const std::string& data_dir,
              const std::string& out_dir) {
  prepare_out(out_dir, cfg);
  const fovea::CocoDataset ds = fovea::load_coco(data_dir + "/annotations.json");
  if (ds.images.empty()) throw std::runtime_error("training dataset is empty");
  cfg.detector.num_classes = ds.num_classes();
  const auto samples = load_samples(data_dir, ds);

  fovea::Detector det(cfg.detector, cfg.train.seed);
  cfg.train.assign = cfg.assign;
  fovea::train_detector(det, samples, cfg.train, out_dir,
                        [](const fovea::EpochStats& e) {
                          std::printf(
                              "epoch %2d lr %.5f cls %.4f box %.4f total %.4f "
                              "(%.1fs)\n",
                              e.epoch, e.lr, e.cls_loss, e.box_loss, e.total,
                              e.wall_seconds);
                          std::fflush(stdout);
                        });
  std::printf("checkpoint: %s/checkpoint.fov\n", out_dir.c_str());
  return 0;
}

int cmd_detect(const fovea::RunConfig& cfg, const std::string& ckpt,
               const std::string& images_dir, const std::string& out_dir,
               bool proposals, int topk) {
  prepare_out(out_dir, cfg);
  const fovea::Detector det = fovea::Detector::load(ckpt);

  fovea::CocoDataset ds;
  if (fs::exists(images_dir + "/annotations.json")) {
    ds = fovea::load_coco(images_dir + "/annotations.json");
  } else {
    // bare directory of PNGs: ids assigned in sorted filename order
    std::vector<std::string> names;
    if (fs::exists(images_dir))
      for (const auto& entry : fs::directory_iterator(images_dir))
        if (entry.path().extension() == ".png")
          names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    for (size_t i = 0; i < names.size(); ++i) {
      const fovea::Image img = fovea::read_png_gray(images_dir + "/" + names[i]);
      ds.images.push_back({static_cast<int>(i) + 1, names[i], img.w, img.h});
    }
    for (int c = 0; c < det.config().num_classes; ++c) {
      ds.category_ids.push_back(c + 1);
      ds.category_names.push_back("class" + std::to_string(c));
    }
    json index = json::array();
    for (const auto& info : ds.images)
      index.push_back({{"id", info.id}, {"file_name", info.file_name}});
    std::ofstream(out_dir + "/images_index.json") << index.dump(2) << '\n';
  }

  const auto per_image =
      detect_dataset(det, images_dir, ds, cfg.inference, proposals, topk);
  const json results = fovea::detections_to_coco(per_image, ds.category_ids);
  std::ofstream(out_dir + "/results.json") << results.dump() << '\n';
  std::printf("wrote %zu detections for %zu images\n", results.size(),
              per_image.size());
  return 0;
}

int cmd_eval(const fovea::RunConfig& cfg, const std::string& gt_path,
             const std::string& dets_path, const std::string& out_dir,
             bool agnostic) {
  prepare_out(out_dir, cfg);
  const fovea::CocoDataset ds = fovea::load_coco(gt_path);
  std::vector<fovea::GtRecord> gts = to_gt_records(ds);
  std::vector<fovea::DetRecord> dets = fovea::load_coco_results(dets_path, ds);

  fovea::EvalResult result;
  fovea::AspectBucketReport aspect;
  if (agnostic) {
    for (auto& g : gts) g.category = 0;
    for (auto& d : dets) d.category = 0;
    result = fovea::evaluate(dets, gts);
    result.ar_by_k = fovea::average_recall(dets, gts);
    aspect.ap_all = result.ap;
  } else {
    result = fovea::evaluate(dets, gts);
    aspect = fovea::aspect_report(dets, gts);
  }
  std::ofstream(out_dir + "/eval.json") << eval_to_json(result, ds).dump(2) << '\n';
  write_eval_table(out_dir + "/table.txt", result, aspect, ds);
  std::printf("AP %.3f AP50 %.3f AP75 %.3f\n", result.ap, result.ap50, result.ap75);
  return 0;
}

int cmd_delta(const fovea::RunConfig& cfg, const std::string& a_path,
              const std::string& b_path, const std::string& out_dir) {
  prepare_out(out_dir, cfg);
  std::ifstream fa(a_path), fb(b_path);
  if (!fa) throw std::runtime_error("cannot open " + a_path);
  if (!fb) throw std::runtime_error("cannot open " + b_path);
  json ja, jb;
  fa >> ja;
  fb >> jb;
  const json& pa = ja.at("per_class_ap");
  const json& pb = jb.at("per_class_ap");
  if (pa.size() != pb.size())
    throw std::runtime_error("per-class AP tables have different class sets");
  std::vector<std::pair<std::string, double>> deltas;
  for (const auto& [name, ap] : pa.items()) {
    if (!pb.contains(name))
      throw std::runtime_error("class " + name + " missing from " + b_path);
    deltas.emplace_back(name, ap.get<double>() - pb.at(name).get<double>());
  }
  std::sort(deltas.begin(), deltas.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  json out = json::array();
  std::ofstream table(out_dir + "/delta.txt");
  table << "class       AP_a - AP_b\n";
  for (const auto& [name, d] : deltas) {
    out.push_back({{"class", name}, {"delta", d}});
    char line[96];
    std::snprintf(line, sizeof(line), "%-12s %+.4f\n", name.c_str(), d);
    table << line;
  }
  std::ofstream(out_dir + "/delta.json") << out.dump(2) << '\n';
  std::printf("wrote per-class AP deltas for %zu classes\n", deltas.size());
  return 0;
}

int cmd_sweep(const fovea::RunConfig& cfg, const std::string& param,
              const std::vector<double>& values, const std::string& data_dir,
              const std::string& val_dir, const std::string& out_dir) {
  prepare_out(out_dir, cfg);
  const std::string val = val_dir.empty() ? data_dir : val_dir;
  const fovea::CocoDataset train_ds = fovea::load_coco(data_dir + "/annotations.json");
  const fovea::CocoDataset val_ds = fovea::load_coco(val + "/annotations.json");
  const auto samples = load_samples(data_dir, train_ds);

  json rows = json::array();
  std::ofstream table(out_dir + "/sweep.txt");
  table << param << "      AP     AP50   AP75\n";
  for (double v : values) {
    fovea::RunConfig run = cfg;
    if (param == "sigma")
      run.assign.sigma = v;
    else
      run.assign.eta = v;
    run.train.assign = run.assign;
    run.detector.num_classes = train_ds.num_classes();

    fovea::Detector det(run.detector, run.train.seed);
    fovea::train_detector(det, samples, run.train);

    const auto per_image = detect_dataset(det, val, val_ds, run.inference, false, 0);
    std::vector<fovea::DetRecord> dets;
    int next_id = 1;
    for (const auto& [image_id, image_dets] : per_image)
      for (const fovea::Detection& d : image_dets)
        dets.push_back({next_id++, image_id, d.category, d.box, d.score});
    const fovea::EvalResult r = fovea::evaluate(dets, to_gt_records(val_ds));

    rows.push_back({{param, v}, {"ap", r.ap}, {"ap50", r.ap50}, {"ap75", r.ap75}});
    char line[96];
    std::snprintf(line, sizeof(line), "%-8.2f %6.3f %6.3f %6.3f\n", v, r.ap,
                  r.ap50, r.ap75);
    table << line;
    table.flush();
    std::printf("%s = %.2f -> AP %.3f AP50 %.3f AP75 %.3f\n", param.c_str(), v,
                r.ap, r.ap50, r.ap75);
    std::fflush(stdout);
  }
  std::ofstream(out_dir + "/sweep.json") << rows.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  fovea::configure_threads_from_env();
  CLI::App app{"anchor-free shape detector: data, targets, training, "
               "inference, evaluation"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::string data_dir, val_dir, ckpt, gt_path, dets_path, sweep_param;
  double sigma = -1, eta = -1, lr = -1;
  int viz_limit = 8, topk = 1000, epochs = -1, num_images = -1, image_size = -1,
      batch_size = -1;
  double aspect_max = -1, noise = -1, min_size = -1, max_size = -1;
  std::int64_t seed = -1;
  bool agnostic = false;
  std::vector<double> sweep_values;

  auto* gen = app.add_subcommand("gen-data", "render a synthetic shapes dataset");
  gen->add_option("--spec,--config", config_path, "run config JSON");
  gen->add_option("--out", out_dir)->required();
  gen->add_option("--num-images", num_images);
  gen->add_option("--image-size", image_size, "square image side in pixels");
  gen->add_option("--min-size", min_size);
  gen->add_option("--max-size", max_size);
  gen->add_option("--aspect-max", aspect_max);
  gen->add_option("--noise", noise);
  gen->add_option("--seed", seed);

  auto* tgt = app.add_subcommand("targets", "dump assignment maps and heatmaps");
  tgt->add_option("--data", data_dir)->required();
  tgt->add_option("--out", out_dir)->required();
  tgt->add_option("--config", config_path);
  tgt->add_option("--sigma", sigma);
  tgt->add_option("--eta", eta);
  tgt->add_option("--viz-limit", viz_limit, "images to render heatmaps for");

  auto* trn = app.add_subcommand("train", "train a detector");
  trn->add_option("--data", data_dir)->required();
  trn->add_option("--out", out_dir)->required();
  trn->add_option("--config", config_path);
  trn->add_option("--epochs", epochs);
  trn->add_option("--batch-size", batch_size);
  trn->add_option("--lr", lr);
  trn->add_option("--seed", seed);
  trn->add_option("--sigma", sigma);
  trn->add_option("--eta", eta);

  auto* det = app.add_subcommand("detect", "run inference, emit COCO results");
  det->add_option("--ckpt", ckpt)->required();
  det->add_option("--images", data_dir, "dataset dir or directory of PNGs")
      ->required();
  det->add_option("--out", out_dir)->required();
  det->add_option("--config", config_path);
  det->add_flag("--proposals", agnostic, "class-agnostic proposal mode");
  det->add_option("--topk", topk, "proposals per image in proposal mode");

  auto* evl = app.add_subcommand("eval", "COCO-protocol evaluation");
  evl->add_option("--gt", gt_path)->required();
  evl->add_option("--dets", dets_path)->required();
  evl->add_option("--out", out_dir)->required();
  evl->add_option("--config", config_path);
  evl->add_flag("--agnostic", agnostic, "proposal AR evaluation");

  std::string delta_a, delta_b;
  auto* dlt = app.add_subcommand("delta", "per-class AP difference of two eval results");
  dlt->add_option("--a", delta_a, "first eval.json")->required();
  dlt->add_option("--b", delta_b, "second eval.json")->required();
  dlt->add_option("--out", out_dir)->required();
  dlt->add_option("--config", config_path);

  auto* swp = app.add_subcommand("sweep", "train/evaluate across sigma or eta");
  swp->add_option("--param", sweep_param)
      ->check(CLI::IsMember({"sigma", "eta"}))
      ->required();
  swp->add_option("--values", sweep_values)->required()->delimiter(',');
  swp->add_option("--data", data_dir)->required();
  swp->add_option("--val", val_dir, "held-out dataset (defaults to --data)");
  swp->add_option("--out", out_dir)->required();
  swp->add_option("--config", config_path);
  swp->add_option("--epochs", epochs);
  swp->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);

  try {
    fovea::RunConfig cfg = config_path.empty()
                               ? fovea::RunConfig{}
                               : fovea::RunConfig::from_file(config_path);
    // flags win over the config file
    if (num_images >= 0) cfg.dataset.num_images = num_images;
    if (image_size > 0) {
      cfg.dataset.image_w = image_size;
      cfg.dataset.image_h = image_size;
    }
    if (min_size > 0) cfg.dataset.min_size = min_size;
    if (max_size > 0) cfg.dataset.max_size = max_size;
    if (aspect_max > 0) cfg.dataset.aspect_max = aspect_max;
    if (noise >= 0) cfg.dataset.noise = noise;
    if (seed >= 0 && gen->parsed()) cfg.dataset.seed = static_cast<std::uint64_t>(seed);
    if (seed >= 0 && !gen->parsed()) cfg.train.seed = static_cast<std::uint64_t>(seed);
    if (sigma > 0) cfg.assign.sigma = sigma;
    if (eta > 0) cfg.assign.eta = eta;
    if (epochs >= 0) cfg.train.epochs = epochs;
    if (batch_size > 0) cfg.train.batch_size = batch_size;
    if (lr > 0) cfg.train.sgd.learning_rate = lr;
    cfg.train.assign = cfg.assign;

    if (gen->parsed()) return cmd_gen_data(cfg, out_dir);
    if (tgt->parsed()) return cmd_targets(cfg, data_dir, out_dir, viz_limit);
    if (trn->parsed()) return cmd_train(cfg, data_dir, out_dir);
    if (det->parsed()) return cmd_detect(cfg, ckpt, data_dir, out_dir, agnostic, topk);
    if (evl->parsed()) return cmd_eval(cfg, gt_path, dets_path, out_dir, agnostic);
    if (dlt->parsed()) return cmd_delta(cfg, delta_a, delta_b, out_dir);
    if (swp->parsed())
      return cmd_sweep(cfg, sweep_param, sweep_values, data_dir, val_dir, out_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
