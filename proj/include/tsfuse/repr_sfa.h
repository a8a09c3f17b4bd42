#ifndef TSFUSE_REPR_SFA_H_
#define TSFUSE_REPR_SFA_H_

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "tsfuse/data_core.h"
#include "tsfuse/feature_matrix.h"

namespace tsfuse::sfa {

struct SfaConfig {
  int word_length = 6;
  int window = 10;
  int alphabet = 4;

  std::string key() const;
};

// Per-coefficient breakpoints, one row of (alphabet - 1) values per
// coefficient.
struct McbBins {
  std::vector<std::vector<double>> breakpoints;
  int alphabet = 0;

  int word_length() const { return static_cast<int>(breakpoints.size()); }
};

// Forward DFT X_k = sum_t x_t exp(-2 pi i k t / n), all n coefficients.
std::vector<std::complex<double>> full_dft(std::span<const double> x);

// First `w` entries of [Re X1, Im X1, Re X2, Im X2, ...]; X0 is skipped.
std::vector<double> truncated_dft(std::span<const double> window_values,
                                  int w);

// Equi-depth bins: per column, linearly interpolated quantiles at i/a.
// `coefficients` holds one row per training window.
McbBins fit_mcb(const std::vector<std::vector<double>>& coefficients,
                int alphabet);

// Number of breakpoints strictly below v; a degenerate column (all
// breakpoints equal) maps its own value to symbol 0.
int symbolize(double v, std::span<const double> breakpoints);

// Truncated DFT of every z-normalized stride-1 window of x.
std::vector<std::vector<double>> window_coefficients(std::span<const double> x,
                                                     const SfaConfig& cfg);

std::vector<double> sfa_transform(std::span<const double> x,
                                  const SfaConfig& cfg, const McbBins& bins);

struct SfaFeatures {
  FeatureMatrix matrix;
  McbBins bins;
};

// Fits MCB on the windows of the training rows only, then transforms every
// row with those bins. Rows are L2-normalized.
SfaFeatures sfa_feature_matrix(const LabeledDataset& d,
                               std::span<const int> train_rows,
                               const SfaConfig& cfg, int jobs = 1);

}  // namespace tsfuse::sfa

#endif  // TSFUSE_REPR_SFA_H_
