#include <doctest.h>

#include <cmath>

#include "fovea/checkpoint.hpp"
#include "fovea/sgd.hpp"

using namespace fovea;

namespace {

Param make_param(const std::string& name, std::vector<double> v) {
  Tensor t({static_cast<int>(v.size())});
  t.v = std::move(v);
  return Param(name, std::move(t));
}

}  // namespace

TEST_CASE("zero gradient with zero decay is a fixed point") {
  std::vector<Param> params;
  params.push_back(make_param("w", {1.0, -2.0, 3.0}));
  sgd_step(params, {0.1, 0.0, 0.0});
  CHECK(params[0].t.v == std::vector<double>{1.0, -2.0, 3.0});
}

TEST_CASE("momentum 0 and decay 0 reduce to plain gradient descent") {
  std::vector<Param> params;
  params.push_back(make_param("w", {1.0, 1.0}));
  params[0].t.g = {0.5, -0.25};
  sgd_step(params, {0.1, 0.0, 0.0});
  CHECK(params[0].t.v[0] == doctest::Approx(1.0 - 0.1 * 0.5));
  CHECK(params[0].t.v[1] == doctest::Approx(1.0 + 0.1 * 0.25));
}

TEST_CASE("two momentum steps on a constant gradient") {
  // v1 = g, v2 = 0.9 g + g = 1.9 g -> total displacement lr*g*(1 + 1.9)
  std::vector<Param> params;
  params.push_back(make_param("w", {2.0}));
  const double g = 0.4, lr = 0.01;
  params[0].t.g = {g};
  sgd_step(params, {lr, 0.9, 0.0});
  params[0].t.g = {g};
  sgd_step(params, {lr, 0.9, 0.0});
  CHECK(params[0].t.v[0] == doctest::Approx(2.0 - lr * g * 2.9).epsilon(1e-12));
}

TEST_CASE("weight decay pulls parameters toward zero") {
  std::vector<Param> params;
  params.push_back(make_param("w", {10.0}));
  sgd_step(params, {0.1, 0.0, 0.01});
  CHECK(params[0].t.v[0] == doctest::Approx(10.0 - 0.1 * 0.1));
}

TEST_CASE("non-finite gradients abort the step and name the parameter") {
  std::vector<Param> params;
  params.push_back(make_param("fine", {1.0}));
  params.push_back(make_param("broken", {1.0}));
  params[1].t.g = {std::nan("")};
  CHECK_THROWS_WITH_AS(sgd_step(params, {0.1, 0.9, 0.0}),
                       doctest::Contains("broken"), std::runtime_error);
  CHECK(params[0].t.v[0] == 1.0);  // nothing was updated
}

TEST_CASE("sgd validates its configuration") {
  std::vector<Param> params;
  params.push_back(make_param("w", {1.0}));
  CHECK_THROWS(sgd_step(params, {0.0, 0.9, 0.0}));
  CHECK_THROWS(sgd_step(params, {0.1, 1.0, 0.0}));
  CHECK_THROWS(sgd_step(params, {0.1, 0.9, -1.0}));
}

TEST_CASE("checkpoint roundtrip preserves values, names, and header") {
  std::vector<Param> params;
  params.push_back(make_param("alpha", {1.5, -2.5}));
  params.push_back(make_param("beta", {0.0, 1e-300, 3.25}));
  const std::string path = "/tmp/fovea_test_ckpt.fov";
  save_checkpoint(path, params, {{"note", 7}}, 99);

  const LoadedCheckpoint ck = load_checkpoint(path);
  CHECK(ck.seed == 99);
  CHECK(ck.hyper.at("note") == 7);
  REQUIRE(ck.names.size() == 2);
  CHECK(ck.names[0] == "alpha");
  CHECK(ck.tensors[0].v == params[0].t.v);
  CHECK(ck.tensors[1].v == params[1].t.v);
}
