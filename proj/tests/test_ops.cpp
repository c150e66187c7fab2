#include <doctest.h>

#include <cmath>

#include "fovea/ops.hpp"
#include "fovea/rng.hpp"
#include "serial_kernels.hpp"
#include "support/oracles.hpp"

using namespace fovea;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1,
                     double hi = 1) {
  Tensor t(std::move(shape));
  for (double& v : t.v) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST_CASE("1x1 identity kernel reproduces the input") {
  Rng rng(51);
  const Tensor in = random_tensor({2, 3, 5, 5}, rng);
  Tensor w({3, 3, 1, 1});
  for (int i = 0; i < 3; ++i) w.v[static_cast<size_t>(i) * 3 + i] = 1.0;
  const Tensor b({3});
  const Tensor out = ops::conv2d(in, w, b, 1, 0);
  REQUIRE(out.shape == in.shape);
  for (size_t i = 0; i < in.v.size(); ++i) CHECK(out.v[i] == in.v[i]);
}

TEST_CASE("all-zero input yields an all-bias output") {
  const Tensor in({1, 2, 4, 4});
  Rng rng(52);
  const Tensor w = random_tensor({3, 2, 3, 3}, rng);
  Tensor b({3});
  b.v = {0.5, -1.0, 2.0};
  const Tensor out = ops::conv2d(in, w, b, 1, 1);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 16; ++i)
      CHECK(out.v[static_cast<size_t>(c) * 16 + i] == b.v[static_cast<size_t>(c)]);
}

TEST_CASE("conv2d equals the serial reference exactly") {
  Rng rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rng.uniform_int(1, 2);
    const int ci = rng.uniform_int(1, 4);
    const int co = rng.uniform_int(1, 4);
    const int hw = rng.uniform_int(3, 8);
    const int k = rng.bernoulli(0.5) ? 3 : 1;
    const int stride = rng.bernoulli(0.3) ? 2 : 1;
    const int pad = k / 2;
    const Tensor in = random_tensor({n, ci, hw, hw}, rng);
    const Tensor w = random_tensor({co, ci, k, k}, rng);
    const Tensor b = random_tensor({co}, rng);
    const Tensor got = ops::conv2d(in, w, b, stride, pad);
    const Tensor want = ref::conv2d(in, w, b, stride, pad);
    REQUIRE(got.shape == want.shape);
    for (size_t i = 0; i < got.v.size(); ++i) CHECK(got.v[i] == want.v[i]);
  }
}

TEST_CASE("conv2d backward agrees with the serial scatter adjoint") {
  Rng rng(54);
  for (int trial = 0; trial < 10; ++trial) {
    const int stride = rng.bernoulli(0.5) ? 2 : 1;
    const Tensor in = random_tensor({2, 3, 6, 6}, rng);
    const Tensor w = random_tensor({4, 3, 3, 3}, rng);
    const Tensor b = random_tensor({4}, rng);
    const Tensor out = ops::conv2d(in, w, b, stride, 1);
    Tensor dout = out;
    for (double& v : dout.v) v = rng.uniform(-1, 1);

    Tensor din_a(in.shape), dw_a(w.shape), db_a(b.shape);
    ops::conv2d_backward(in, w, dout, stride, 1, &din_a, &dw_a, &db_a);
    Tensor din_b(in.shape), dw_b(w.shape), db_b(b.shape);
    ref::conv2d_backward(in, w, dout, stride, 1, &din_b, &dw_b, &db_b);

    // gather vs scatter accumulate in different orders; only rounding differs
    CHECK(oracle::max_rel_error(din_a.g, din_b.g) < 1e-10);
    CHECK(oracle::max_rel_error(dw_a.g, dw_b.g) < 1e-10);
    CHECK(oracle::max_rel_error(db_a.g, db_b.g) < 1e-10);
  }
}

TEST_CASE("conv2d gradients match finite differences") {
  Rng rng(55);
  Tensor in = random_tensor({1, 2, 5, 5}, rng);
  Tensor w = random_tensor({3, 2, 3, 3}, rng);
  Tensor b = random_tensor({3}, rng);
  // scalar objective: weighted sum of outputs
  const Tensor coeffs = random_tensor({1, 3, 5, 5}, rng);
  auto objective = [&] {
    const Tensor out = ops::conv2d(in, w, b, 1, 1);
    double s = 0.0;
    for (size_t i = 0; i < out.v.size(); ++i) s += out.v[i] * coeffs.v[i];
    return s;
  };
  Tensor din(in.shape), dw(w.shape), db(b.shape);
  ops::conv2d_backward(in, w, coeffs, 1, 1, &din, &dw, &db);
  CHECK(oracle::max_rel_error(din.g,
                              oracle::finite_diff_grad(in.v, objective, 1e-5)) <
        1e-4);
  CHECK(oracle::max_rel_error(dw.g,
                              oracle::finite_diff_grad(w.v, objective, 1e-5)) <
        1e-4);
  CHECK(oracle::max_rel_error(db.g,
                              oracle::finite_diff_grad(b.v, objective, 1e-5)) <
        1e-4);
}

TEST_CASE("conv2d validates shapes") {
  Rng rng(56);
  const Tensor in = random_tensor({1, 2, 4, 4}, rng);
  CHECK_THROWS(ops::conv2d(in, random_tensor({3, 2, 5, 5}, rng),
                           random_tensor({3}, rng), 1, 2));
  CHECK_THROWS(ops::conv2d(in, random_tensor({3, 4, 3, 3}, rng),
                           random_tensor({3}, rng), 1, 1));
  CHECK_THROWS(ops::conv2d(in, random_tensor({3, 2, 3, 3}, rng),
                           random_tensor({2}, rng), 1, 1));
}

TEST_CASE("relu and its mask") {
  Tensor in({1, 1, 1, 3});
  in.v = {-1.0, 0.0, 2.0};
  const Tensor out = ops::relu(in);
  CHECK(out.v[0] == 0.0);
  CHECK(out.v[1] == 0.0);
  CHECK(out.v[2] == 2.0);

  Tensor dout({1, 1, 1, 3});
  dout.v = {5.0, 5.0, 5.0};
  Tensor din({1, 1, 1, 3});
  ops::relu_backward(in, dout, &din);
  CHECK(din.g[0] == 0.0);
  CHECK(din.g[1] == 0.0);
  CHECK(din.g[2] == 5.0);
}

TEST_CASE("sigmoid is stable and matches finite differences") {
  CHECK(ops::sigmoid_scalar(0.0) == 0.5);
  CHECK(ops::sigmoid_scalar(800.0) == 1.0);
  CHECK(ops::sigmoid_scalar(-800.0) == doctest::Approx(0.0));

  Rng rng(57);
  Tensor in = random_tensor({1, 1, 4, 4}, rng, -5, 5);
  const Tensor out = ops::sigmoid(in);
  const Tensor coeffs = random_tensor({1, 1, 4, 4}, rng);
  auto objective = [&] {
    const Tensor o = ops::sigmoid(in);
    double s = 0.0;
    for (size_t i = 0; i < o.v.size(); ++i) s += o.v[i] * coeffs.v[i];
    return s;
  };
  Tensor din(in.shape);
  ops::sigmoid_backward(out, coeffs, &din);
  CHECK(oracle::max_rel_error(din.g,
                              oracle::finite_diff_grad(in.v, objective, 1e-6)) <
        1e-6);
}

TEST_CASE("upsample2x replicates 2x2 blocks; backward sums them") {
  Tensor one({1, 1, 1, 1});
  one.v = {3.0};
  const Tensor up = ops::upsample2x_nearest(one);
  REQUIRE(up.shape == std::vector<int>{1, 1, 2, 2});
  for (double v : up.v) CHECK(v == 3.0);

  Rng rng(58);
  const Tensor in = random_tensor({2, 3, 4, 4}, rng);
  const Tensor got = ops::upsample2x_nearest(in);
  const Tensor want = ref::upsample2x_nearest(in);
  for (size_t i = 0; i < got.v.size(); ++i) CHECK(got.v[i] == want.v[i]);

  // constant map stays constant
  Tensor flat({1, 1, 3, 3});
  for (double& v : flat.v) v = 7.0;
  for (double v : ops::upsample2x_nearest(flat).v) CHECK(v == 7.0);

  // backward of ones = fours
  Tensor dout({1, 1, 4, 4});
  for (double& v : dout.v) v = 1.0;
  Tensor din({1, 1, 2, 2});
  ops::upsample2x_nearest_backward(dout, &din);
  for (double g : din.g) CHECK(g == 4.0);
}

TEST_CASE("ops stay finite on extreme finite inputs") {
  Rng rng(59);
  Tensor in = random_tensor({1, 2, 4, 4}, rng, -1e100, 1e100);
  const Tensor w = random_tensor({2, 2, 3, 3}, rng, -1e100, 1e100);
  const Tensor b = random_tensor({2}, rng, -1e100, 1e100);
  for (double v : ops::conv2d(in, w, b, 1, 1).v) CHECK(std::isfinite(v));
  for (double v : ops::relu(in).v) CHECK(std::isfinite(v));
  for (double v : ops::sigmoid(in).v) CHECK(std::isfinite(v));
  for (double v : ops::upsample2x_nearest(in).v) CHECK(std::isfinite(v));
}
