#include "tsfuse/repr_rocket.h"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "tsfuse/errors.h"
#include "tsfuse/parallel.h"
#include "tsfuse/rng.h"

namespace tsfuse::rocket {

std::string RocketConfig::key() const {
  return fmt::format("rocket_k{}_s{}", n_kernels, seed);
}

std::vector<RocketKernel> generate_kernels(const RocketConfig& cfg,
                                           int length) {
  if (length < 9) {
    throw ParamError(fmt::format("ROCKET needs series length >= 9, got {}",
                                 length));
  }
  if (cfg.n_kernels < 1) throw ConfigError("n_kernels must be >= 1");
  std::vector<int> lengths;
  for (int len : {7, 9, 11}) {
    if (len <= length) lengths.push_back(len);
  }
  Rng rng(cfg.seed);
  std::vector<RocketKernel> kernels(cfg.n_kernels);
  for (auto& k : kernels) {
    const int len = lengths[rng.below(lengths.size())];
    k.weights.resize(len);
    double mean = 0.0;
    for (double& w : k.weights) {
      w = rng.normal();
      mean += w;
    }
    mean /= len;
    for (double& w : k.weights) w -= mean;
    k.bias = rng.uniform(-1.0, 1.0);
    const double max_exponent =
        std::log2(static_cast<double>(length - 1) / (len - 1));
    const double x = rng.uniform(0.0, max_exponent);
    k.dilation = std::max(1, static_cast<int>(std::floor(std::exp2(x))));
    k.padding = rng.below(2) == 1;
  }
  return kernels;
}

KernelResponse apply_kernel(std::span<const double> x, const RocketKernel& k) {
  const int n = static_cast<int>(x.size());
  const int len = static_cast<int>(k.weights.size());
  const int pad = k.pad();
  const int out_len = n + 2 * pad - (len - 1) * k.dilation;
  if (out_len <= 0) {
    throw ConfigError(fmt::format(
        "kernel span {} leaves no valid positions on length {}", k.span(), n));
  }
  double best = -std::numeric_limits<double>::infinity();
  int positive = 0;
  for (int i = 0; i < out_len; ++i) {
    double sum = k.bias;
    const int first = i - pad;
    if (first >= 0 && first + (len - 1) * k.dilation < n) {
      const double* p = x.data() + first;
      for (int j = 0; j < len; ++j, p += k.dilation) sum += k.weights[j] * *p;
    } else {
      int index = first;
      for (int j = 0; j < len; ++j, index += k.dilation) {
        if (index >= 0 && index < n) sum += k.weights[j] * x[index];
      }
    }
    if (sum > best) best = sum;
    if (sum > 0.0) ++positive;
  }
  return {best, static_cast<double>(positive) / out_len};
}

FeatureMatrix rocket_feature_matrix(const LabeledDataset& d,
                                    const RocketConfig& cfg, int jobs) {
  const auto kernels = generate_kernels(cfg, static_cast<int>(d.length()));
  FeatureMatrix fm;
  fm.extractor = "rocket";
  fm.config = cfg.key();
  fm.values = Matrix::Zero(static_cast<Eigen::Index>(d.size()),
                           2 * static_cast<Eigen::Index>(kernels.size()));
  parallel_for(d.size(), jobs, [&](size_t i) {
    auto row = fm.values.row(static_cast<Eigen::Index>(i));
    for (size_t k = 0; k < kernels.size(); ++k) {
      const auto r = apply_kernel(d.series[i], kernels[k]);
      row[2 * k] = r.max;
      row[2 * k + 1] = r.ppv;
    }
  });
  return fm;
}

}  // namespace tsfuse::rocket
