#include <cmath>
#include <numeric>

#include "doctest.h"
#include "tsfuse/errors.h"
#include "tsfuse/repr_rocket.h"
#include "tsfuse/rng.h"

using namespace tsfuse;

namespace {

rocket::KernelResponse brute_force(const std::vector<double>& x,
                                   const rocket::RocketKernel& k) {
  const int n = static_cast<int>(x.size());
  const int len = static_cast<int>(k.weights.size());
  const int pad = k.pad();
  double mx = -INFINITY;
  int positive = 0, positions = 0;
  for (int start = -pad; start + (len - 1) * k.dilation < n + pad; ++start) {
    double r = k.bias;
    for (int j = 0; j < len; ++j) {
      const int t = start + j * k.dilation;
      if (t >= 0 && t < n) r += k.weights[j] * x[t];
    }
    mx = std::max(mx, r);
    positive += r > 0;
    ++positions;
  }
  return {mx, static_cast<double>(positive) / positions};
}

}  // namespace

TEST_CASE("kernel generation is deterministic and centered") {
  const rocket::RocketConfig cfg{500, 42};
  const auto a = rocket::generate_kernels(cfg, 150);
  const auto b = rocket::generate_kernels(cfg, 150);
  CHECK(a == b);
  REQUIRE(a.size() == 500);
  for (const auto& k : a) {
    const double s = std::accumulate(k.weights.begin(), k.weights.end(), 0.0);
    CHECK(std::abs(s) < 1e-9);
    const int len = static_cast<int>(k.weights.size());
    CHECK((len == 7 || len == 9 || len == 11));
    CHECK(k.dilation >= 1);
    CHECK((len - 1) * k.dilation <= 149);
    CHECK(k.bias >= -1.0);
    CHECK(k.bias <= 1.0);
  }
}

TEST_CASE("short series exclude long kernels") {
  for (const auto& k : rocket::generate_kernels({200, 1}, 9)) {
    CHECK(k.weights.size() <= 9);
    CHECK((k.weights.size() - 1) * k.dilation <= 8);
  }
}

TEST_CASE("zero input") {
  const std::vector<double> x(20, 0.0);
  rocket::RocketKernel k{{1, -2, 1}, 0.5, 2, false};
  auto r = rocket::apply_kernel(x, k);
  CHECK(r.max == 0.5);
  CHECK(r.ppv == 1.0);
  k.bias = -0.5;
  r = rocket::apply_kernel(x, k);
  CHECK(r.max == -0.5);
  CHECK(r.ppv == 0.0);
}

TEST_CASE("hand convolution") {
  const rocket::RocketKernel k{{1, -1}, 0.0, 1, false};
  const auto r = rocket::apply_kernel(std::vector<double>{1, 2, 3, 4}, k);
  CHECK(r.max == -1.0);
  CHECK(r.ppv == 0.0);
}

TEST_CASE("positive scaling") {
  Rng rng(2);
  std::vector<double> x(80);
  for (double& v : x) v = rng.normal();
  for (const auto& k : rocket::generate_kernels({50, 3}, 80)) {
    auto k2 = k;
    for (double& w : k2.weights) w *= 2;
    k2.bias *= 2;
    const auto a = rocket::apply_kernel(x, k);
    const auto b = rocket::apply_kernel(x, k2);
    CHECK(b.max == doctest::Approx(2 * a.max).epsilon(1e-12));
    CHECK(b.ppv == a.ppv);
  }
}

TEST_CASE("matches brute force") {
  Rng rng(12);
  std::vector<double> x(101);
  for (double& v : x) v = rng.normal();
  for (const auto& k : rocket::generate_kernels({300, 5}, 101)) {
    const auto a = rocket::apply_kernel(x, k);
    const auto b = brute_force(x, k);
    CHECK(a.max == b.max);
    CHECK(a.ppv == b.ppv);
  }
}

TEST_CASE("feature matrix shape and ranges") {
  LabeledDataset d;
  d.name = "toy";
  d.num_classes = 2;
  Rng rng(1);
  std::vector<double> s(60);
  for (double& v : s) v = rng.normal();
  d.series = {s, s, std::vector<double>(60, 1.0)};
  d.labels = {0, 1, 0};
  const auto fm = rocket::rocket_feature_matrix(d, {2000, 42});
  CHECK(fm.cols() == 4000);
  CHECK(fm.values.row(0) == fm.values.row(1));
  for (Eigen::Index c = 1; c < fm.cols(); c += 2) {
    for (Eigen::Index r = 0; r < fm.rows(); ++r) {
      CHECK(fm.values(r, c) >= 0.0);
      CHECK(fm.values(r, c) <= 1.0);
    }
  }
  const auto again = rocket::rocket_feature_matrix(d, {2000, 42}, 2);
  CHECK(again.values == fm.values);
}
