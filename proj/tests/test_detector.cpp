#include <doctest.h>

#include <cmath>

#include "fovea/detector.hpp"
#include "fovea/ops.hpp"
#include "fovea/rng.hpp"
#include "fovea/trainer.hpp"
#include "support/oracles.hpp"

using namespace fovea;

namespace {

DetectorConfig tiny_config() {
  DetectorConfig cfg;
  cfg.num_classes = 2;
  cfg.levels = {2};
  cfg.channels = 4;
  cfg.head_depth = 1;
  return cfg;
}

Tensor random_image(int h, int w, Rng& rng) {
  Tensor t({1, 1, h, w});
  for (double& v : t.v) v = rng.uniform(-0.5, 0.5);
  return t;
}

}  // namespace

TEST_CASE("head output shapes follow the pyramid") {
  DetectorConfig cfg;
  cfg.num_classes = 3;
  cfg.levels = {2, 3, 4};
  cfg.channels = 8;
  Detector det(cfg, 1);
  Rng rng(61);
  const HeadOutputs out = det.forward(random_image(64, 64, rng));
  REQUIRE(out.cls.size() == 3);
  const int grids[3] = {16, 8, 4};
  for (int i = 0; i < 3; ++i) {
    CHECK(out.cls[static_cast<size_t>(i)].shape ==
          std::vector<int>{1, 3, grids[i], grids[i]});
    CHECK(out.box[static_cast<size_t>(i)].shape ==
          std::vector<int>{1, 4, grids[i], grids[i]});
  }

  cfg.class_agnostic = true;
  Detector agnostic(cfg, 1);
  const HeadOutputs ag = agnostic.forward(random_image(64, 64, rng));
  CHECK(ag.cls[0].dim(1) == 1);

  CHECK_THROWS(det.forward(random_image(60, 64, rng)));  // not divisible by 16
}

TEST_CASE("prior bias puts fresh scores at the configured prior") {
  DetectorConfig cfg = tiny_config();
  cfg.prior_prob = 0.01;
  Detector det(cfg, 7);
  // all-zero input: every relu output is max(0, bias) and the biases start at
  // zero, so the cls logits equal the output bias exactly
  const Tensor zero({1, 1, 32, 32});
  const HeadOutputs out = det.forward(zero);
  for (double z : out.cls[0].v)
    CHECK(ops::sigmoid_scalar(z) == doctest::Approx(0.01).epsilon(1e-12));

  // and on a real image the mean score stays near the prior
  Rng rng(62);
  const HeadOutputs out2 = det.forward(random_image(32, 32, rng));
  double mean = 0.0;
  for (double z : out2.cls[0].v) mean += ops::sigmoid_scalar(z);
  mean /= static_cast<double>(out2.cls[0].numel());
  CHECK(mean > 0.001);
  CHECK(mean < 0.05);
}

TEST_CASE("head parameters are shared across levels") {
  DetectorConfig cfg;
  cfg.num_classes = 2;
  cfg.levels = {2, 3};
  cfg.channels = 4;
  cfg.head_depth = 1;
  Detector det(cfg, 3);
  Rng rng(63);
  const Tensor img = random_image(32, 32, rng);
  const HeadOutputs before = det.forward(img);
  det.param("head.cls0.w").t.v[0] += 0.5;
  const HeadOutputs after = det.forward(img);
  for (size_t i = 0; i < 2; ++i) {
    bool changed = false;
    for (size_t k = 0; k < before.cls[i].v.size(); ++k)
      if (before.cls[i].v[k] != after.cls[i].v[k]) changed = true;
    CHECK(changed);
  }
}

TEST_CASE("end-to-end parameter gradients match finite differences") {
  Detector det(tiny_config(), 11);
  const PyramidSpec pyr = det.pyramid_for(16, 16);
  Rng rng(64);
  const Tensor img = random_image(16, 16, rng);
  const std::vector<LabeledBox> gts = {{{3.0, 4.0, 12.0, 13.0}, 1}};
  const std::vector<std::vector<TargetMaps>> targets = {
      build_targets(gts, pyr, {0.5, 4.0}, 2)};
  REQUIRE(targets[0][0].pos_count > 0);

  LossParams lp;
  const LossReport base = det.compute_gradients(img, targets, lp);
  CHECK(std::isfinite(base.total));

  // capture analytic grads before finite-differencing mutates parameters
  std::vector<std::vector<double>> analytic;
  for (const Param& p : det.params()) analytic.push_back(p.t.g);

  auto loss_of = [&] { return det.compute_gradients(img, targets, lp).total; };
  for (size_t pi = 0; pi < det.params().size(); ++pi) {
    Param& p = det.params()[pi];
    const auto fd = oracle::finite_diff_grad(p.t.v, loss_of, 1e-5);
    const double err = oracle::max_rel_error(analytic[pi], fd, 1e-4);
    INFO("param ", p.name);
    CHECK(err < 1e-3);
  }
}

TEST_CASE("outputs shift by one cell when the input shifts by one stride") {
  DetectorConfig cfg = tiny_config();
  cfg.levels = {2};  // stride 4
  Detector det(cfg, 5);
  Rng rng(65);
  const int S = 128;
  Tensor img({1, 1, S, S});
  for (double& v : img.v) v = rng.uniform(-0.5, 0.5);
  Tensor shifted({1, 1, S, S});
  for (int y = 0; y < S; ++y)
    for (int x = 0; x < S; ++x)
      shifted.at(0, 0, y, x) = x >= 4 ? img.at(0, 0, y, x - 4) : 0.0;

  const HeadOutputs a = det.forward(img);
  const HeadOutputs b = det.forward(shifted);
  const int G = 32, margin = 10;
  for (int y = margin; y < G - margin; ++y)
    for (int x = margin; x < G - margin; ++x)
      for (int c = 0; c < 2; ++c)
        CHECK(b.cls[0].at(0, c, y, x) ==
              doctest::Approx(a.cls[0].at(0, c, y, x - 1)).epsilon(1e-12));
}

TEST_CASE("identical seeds build identical detectors") {
  Detector a(tiny_config(), 42);
  Detector b(tiny_config(), 42);
  REQUIRE(a.params().size() == b.params().size());
  for (size_t i = 0; i < a.params().size(); ++i)
    CHECK(a.params()[i].t.v == b.params()[i].t.v);
  Detector c(tiny_config(), 43);
  bool same = true;
  for (size_t i = 0; i < a.params().size(); ++i)
    if (a.params()[i].t.v != c.params()[i].t.v) same = false;
  CHECK_FALSE(same);
}

TEST_CASE("save and load reproduce the model bit for bit") {
  Detector det(tiny_config(), 9);
  Rng rng(66);
  const Tensor img = random_image(16, 16, rng);
  const HeadOutputs before = det.forward(img);
  det.save("/tmp/fovea_test_det.fov", 9);
  Detector back = Detector::load("/tmp/fovea_test_det.fov");
  const HeadOutputs after = back.forward(img);
  for (size_t i = 0; i < before.cls.size(); ++i) {
    CHECK(before.cls[i].v == after.cls[i].v);
    CHECK(before.box[i].v == after.box[i].v);
  }
}

TEST_CASE("repeated steps on one image reduce the loss") {
  Detector det(tiny_config(), 13);
  const PyramidSpec pyr = det.pyramid_for(32, 32);
  Rng rng(67);
  const Tensor img = random_image(32, 32, rng);
  const std::vector<std::vector<TargetMaps>> targets = {
      build_targets({{{6, 6, 26, 26}, 0}}, pyr, {0.4, 4.0}, 2)};
  REQUIRE(targets[0][0].pos_count > 0);

  LossParams lp;
  const SgdConfig sgd{0.003, 0.0, 0.0};  // plain descent, small lr
  double prev = 1e300;
  for (int step = 0; step < 20; ++step) {
    const LossReport r = det.train_step(img, targets, lp, sgd);
    CHECK(r.total < prev);
    prev = r.total;
  }
}

TEST_CASE("zero gradient leaves parameters untouched") {
  std::vector<Param> params;
  params.push_back(Param("w", Tensor({2})));
  params[0].t.v = {1.0, 2.0};
  params[0].t.zero_grad();
  sgd_step(params, {0.5, 0.0, 0.0});
  CHECK(params[0].t.v == std::vector<double>{1.0, 2.0});
}

TEST_CASE("lr schedule drops by 10x at 2/3 and 11/12 of the run") {
  // 12-epoch shape: full rate through epoch 7, /10 from 8, /100 from 11
  CHECK(scheduled_lr(0.01, 0, 12) == doctest::Approx(0.01));
  CHECK(scheduled_lr(0.01, 7, 12) == doctest::Approx(0.01));
  CHECK(scheduled_lr(0.01, 8, 12) == doctest::Approx(0.001));
  CHECK(scheduled_lr(0.01, 10, 12) == doctest::Approx(0.001));
  CHECK(scheduled_lr(0.01, 11, 12) == doctest::Approx(0.0001));
  // 24-epoch default: drops at 16 and 22
  CHECK(scheduled_lr(0.01, 15, 24) == doctest::Approx(0.01));
  CHECK(scheduled_lr(0.01, 16, 24) == doctest::Approx(0.001));
  CHECK(scheduled_lr(0.01, 21, 24) == doctest::Approx(0.001));
  CHECK(scheduled_lr(0.01, 22, 24) == doctest::Approx(0.0001));
}

TEST_CASE("flipping an image mirrors the offset targets") {
  const int W = 64;
  const PyramidSpec pyr = PyramidSpec::make({2, 3}, W, 64);
  const std::vector<LabeledBox> gts = {{{10, 20, 40, 50}, 0}};
  const auto flipped = flip_gts(gts, W);
  CHECK(flipped[0].box.x1 == doctest::Approx(24.0));
  CHECK(flipped[0].box.x2 == doctest::Approx(54.0));
  CHECK(flipped[0].box.y1 == 20.0);

  const AssignConfig cfg{0.6, 2.0};
  const auto maps = build_targets(gts, pyr, cfg, 1);
  const auto maps_f = build_targets(flipped, pyr, cfg, 1);
  for (size_t i = 0; i < maps.size(); ++i) {
    const int gw = maps[i].level.grid_w;
    REQUIRE(maps[i].pos_count == maps_f[i].pos_count);
    for (int y = 0; y < maps[i].level.grid_h; ++y)
      for (int x = 0; x < gw; ++x) {
        const CellLabel& a = maps[i].at(x, y);
        const CellLabel& b = maps_f[i].at(gw - 1 - x, y);
        REQUIRE((a.tag == CellTag::Positive) == (b.tag == CellTag::Positive));
        if (a.tag != CellTag::Positive) continue;
        const double* ta = maps[i].box_at(x, y);
        const double* tb = maps_f[i].box_at(gw - 1 - x, y);
        // x offsets swap roles, y offsets are untouched
        CHECK(ta[0] == doctest::Approx(tb[2]).epsilon(1e-12));
        CHECK(ta[2] == doctest::Approx(tb[0]).epsilon(1e-12));
        CHECK(ta[1] == doctest::Approx(tb[1]).epsilon(1e-12));
        CHECK(ta[3] == doctest::Approx(tb[3]).epsilon(1e-12));
      }
  }
}

TEST_CASE("class-agnostic training collapses every object onto one channel") {
  DetectorConfig cfg = tiny_config();
  cfg.class_agnostic = true;
  cfg.num_classes = 2;  // dataset classes; the head still emits one channel
  Detector det(cfg, 17);

  std::vector<TrainSample> data;
  Rng rng(69);
  for (int i = 0; i < 4; ++i) {
    TrainSample s;
    s.image.w = 32;
    s.image.h = 32;
    s.image.px.assign(32 * 32, 0);
    for (auto& p : s.image.px)
      p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    s.gts = {{{6, 6, 26, 26}, 1}};  // category 1 must still train channel 0
    data.push_back(s);
  }
  TrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 4;
  tc.sgd = {0.005, 0.9, 0.0};
  tc.assign = {0.4, 4.0};
  const auto stats = train_detector(det, data, tc);
  REQUIRE(stats.size() == 4);
  CHECK(stats.back().cls_loss < stats.front().cls_loss);
  CHECK(stats.back().box_loss < stats.front().box_loss);
}

TEST_CASE("train loop writes per-epoch stats and is bit-deterministic") {
  DetectorConfig cfg = tiny_config();
  Rng rng(68);
  std::vector<TrainSample> data;
  for (int i = 0; i < 6; ++i) {
    TrainSample s;
    s.image.w = 32;
    s.image.h = 32;
    s.image.px.assign(32 * 32, 0);
    for (auto& p : s.image.px)
      p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    s.gts = {{{4.0 + i, 6.0, 24.0 + i, 26.0}, i % 2}};
    data.push_back(s);
  }
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 4;
  tc.sgd.learning_rate = 0.001;
  tc.assign = {0.4, 4.0};

  Detector a(cfg, 21);
  const auto stats_a = train_detector(a, data, tc);
  REQUIRE(stats_a.size() == 2);
  CHECK(stats_a[0].lr == doctest::Approx(0.001));

  Detector b(cfg, 21);
  const auto stats_b = train_detector(b, data, tc);
  for (size_t i = 0; i < a.params().size(); ++i)
    CHECK(a.params()[i].t.v == b.params()[i].t.v);
  CHECK(stats_a[1].total == stats_b[1].total);

  // 0 epochs returns the initialized model untouched
  Detector c(cfg, 21);
  const auto before = c.params()[0].t.v;
  TrainConfig none = tc;
  none.epochs = 0;
  CHECK(train_detector(c, data, none).empty());
  CHECK(c.params()[0].t.v == before);
}
