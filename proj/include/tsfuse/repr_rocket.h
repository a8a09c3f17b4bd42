#ifndef TSFUSE_REPR_ROCKET_H_
#define TSFUSE_REPR_ROCKET_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tsfuse/data_core.h"
#include "tsfuse/feature_matrix.h"

namespace tsfuse::rocket {

struct RocketKernel {
  std::vector<double> weights;
  double bias = 0.0;
  int dilation = 1;
  bool padding = false;

  // Zero-extension applied to each side when padding is on.
  int pad() const {
    return padding ? static_cast<int>((weights.size() - 1) * dilation / 2) : 0;
  }
  int span() const { return static_cast<int>((weights.size() - 1) * dilation + 1); }

  bool operator==(const RocketKernel&) const = default;
};

struct RocketConfig {
  int n_kernels = 2000;
  uint64_t seed = 42;

  std::string key() const;
};

// Draws kernels in sequence from one Rng(seed). Per kernel, in order:
// length uniform over {7, 9, 11} (lengths longer than the series are
// excluded), i.i.d. N(0,1) weights then mean-centered, bias U(-1, 1),
// dilation floor(2^x) with x ~ U(0, log2((L-1)/(len-1))), padding with
// probability 1/2.
std::vector<RocketKernel> generate_kernels(const RocketConfig& cfg, int length);

struct KernelResponse {
  double max = 0.0;
  double ppv = 0.0;
};

// Dilated convolution plus bias at every output position; returns the maximum
// response and the proportion of positive responses.
KernelResponse apply_kernel(std::span<const double> x, const RocketKernel& k);

// N x (2 * n_kernels) matrix of raw [max_1, ppv_1, max_2, ppv_2, ...]
// features. Standardization against a training fold is applied separately
// with ColumnStandardizer.
FeatureMatrix rocket_feature_matrix(const LabeledDataset& d,
                                    const RocketConfig& cfg, int jobs = 1);

}  // namespace tsfuse::rocket

#endif  // TSFUSE_REPR_ROCKET_H_
