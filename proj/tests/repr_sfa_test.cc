#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "doctest.h"
#include "tsfuse/errors.h"
#include "tsfuse/repr_sfa.h"
#include "tsfuse/rng.h"

using namespace tsfuse;
using std::numbers::pi;

TEST_CASE("truncated DFT of a constant window") {
  const std::vector<double> x(16, 3.0);
  for (double v : sfa::truncated_dft(x, 6)) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("truncated DFT of one cosine and one sine period") {
  const int n = 12;
  std::vector<double> c(n), s(n);
  for (int t = 0; t < n; ++t) {
    c[t] = std::cos(2 * pi * t / n);
    s[t] = std::sin(2 * pi * t / n);
  }
  const auto dc = sfa::truncated_dft(c, 2);
  CHECK(dc[0] == doctest::Approx(n / 2.0).epsilon(1e-12));
  CHECK(std::abs(dc[1]) < 1e-12);
  const auto ds = sfa::truncated_dft(s, 2);
  CHECK(std::abs(ds[0]) < 1e-12);
  CHECK(ds[1] == doctest::Approx(-n / 2.0).epsilon(1e-12));
}

TEST_CASE("Parseval") {
  Rng rng(4);
  for (int n : {5, 8, 13, 20}) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.normal();
    const auto X = sfa::full_dft(x);
    double lhs = 0, rhs = 0;
    for (const auto& c : X) lhs += std::norm(c);
    for (double v : x) rhs += v * v;
    CHECK(lhs / n == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("MCB quantiles") {
  const auto bins = sfa::fit_mcb({{1.0}, {2.0}, {3.0}, {4.0}}, 4);
  REQUIRE(bins.breakpoints.size() == 1);
  const auto& b = bins.breakpoints[0];
  CHECK(b[0] == doctest::Approx(1.75));
  CHECK(b[1] == doctest::Approx(2.5));
  CHECK(b[2] == doctest::Approx(3.25));
}

TEST_CASE("degenerate column collapses") {
  const auto bins = sfa::fit_mcb({{7.0}, {7.0}, {7.0}, {7.0}, {7.0}}, 4);
  for (double v : bins.breakpoints[0]) CHECK(v == 7.0);
  CHECK(sfa::symbolize(7.0, bins.breakpoints[0]) == 0);
  CHECK_THROWS_AS(sfa::fit_mcb({{1.0}, {2.0}}, 4), ParamError);
}

TEST_CASE("MCB on Gaussian data") {
  Rng rng(8);
  std::vector<std::vector<double>> col(100000);
  for (auto& r : col) r = {rng.normal()};
  const auto b = sfa::fit_mcb(col, 4).breakpoints[0];
  CHECK(std::abs(b[0] + 0.6745) < 0.02);
  CHECK(std::abs(b[1]) < 0.02);
  CHECK(std::abs(b[2] - 0.6745) < 0.02);
  CHECK(b[0] < b[1]);
  CHECK(b[1] < b[2]);
}

TEST_CASE("constant series gives one word") {
  const std::vector<double> x(60, 1.0);
  const sfa::SfaConfig cfg{6, 10, 4};
  Rng rng(3);
  std::vector<std::vector<double>> train;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> y(60);
    for (double& v : y) v = rng.normal();
    for (auto& c : sfa::window_coefficients(y, cfg)) train.push_back(c);
  }
  const auto bins = sfa::fit_mcb(train, 4);
  const auto bag = sfa::sfa_transform(x, cfg, bins);
  CHECK(bag.size() == 4096);
  CHECK(std::count_if(bag.begin(), bag.end(), [](double v) { return v != 0; }) == 1);
}

TEST_CASE("sinusoid words are few") {
  const int win = 12;
  std::vector<double> x(120);
  for (size_t t = 0; t < x.size(); ++t) x[t] = std::sin(2 * pi * t / win);
  const sfa::SfaConfig cfg{2, win, 4};
  const auto coeffs = sfa::window_coefficients(x, cfg);
  const auto bins = sfa::fit_mcb(coeffs, 4);
  const auto bag = sfa::sfa_transform(x, cfg, bins);
  const auto distinct =
      std::count_if(bag.begin(), bag.end(), [](double v) { return v != 0; });
  CHECK(distinct <= 16);
}

TEST_CASE("no leakage from test rows") {
  LabeledDataset d;
  d.name = "toy";
  d.num_classes = 2;
  Rng rng(6);
  for (int i = 0; i < 12; ++i) {
    std::vector<double> s(50);
    for (double& v : s) v = rng.normal();
    d.series.push_back(s);
    d.labels.push_back(i % 2);
  }
  const std::vector<int> train{0, 1, 2, 3, 4, 5, 6, 7};
  const sfa::SfaConfig cfg{6, 10, 4};
  const auto a = sfa::sfa_feature_matrix(d, train, cfg);
  d.series[10] = std::vector<double>(50, 100.0);
  for (double& v : d.series[11]) v = rng.normal() * 5;
  const auto b = sfa::sfa_feature_matrix(d, train, cfg);
  CHECK(a.bins.breakpoints == b.bins.breakpoints);
  for (int r : train) CHECK(a.matrix.values.row(r) == b.matrix.values.row(r));
  CHECK(a.matrix.cols() == 4096);
  for (Eigen::Index r = 0; r < a.matrix.rows(); ++r) {
    CHECK(std::abs(a.matrix.values.row(r).norm() - 1.0) < 1e-9);
  }
}
