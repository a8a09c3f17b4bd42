#ifndef TSFUSE_META_FEATURES_H_
#define TSFUSE_META_FEATURES_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsfuse/data_core.h"

namespace tsfuse::meta {

inline constexpr size_t kNumMetaFeatures = 13;

// Column names in CSV order.
const std::array<std::string_view, kNumMetaFeatures>& meta_feature_names();

struct MetaFeatureVector {
  double spectral_entropy = 0.0;
  double spectral_entropy_var = 0.0;
  double turning_points = 0.0;
  double turning_points_var = 0.0;
  double kurtosis = 0.0;
  double autocorr_lag1 = 0.0;
  double permutation_entropy = 0.0;
  double ts_length = 0.0;
  double kl_psd = 0.0;
  double dtw_separability_time = 0.0;
  double dtw_separability_freq = 0.0;
  double kruskal_psd = 0.0;
  double imbalance_index = 0.0;

  std::array<double, kNumMetaFeatures> to_array() const;
  static MetaFeatureVector from_array(std::span<const double> v);
};

struct Psd {
  std::vector<double> frequencies;  // cycles per sample
  std::vector<double> power;
};

// Welch estimate: segment length min(256, n), 50% overlap, periodic Hann
// window, per-segment mean removal, density scaling at unit sampling rate,
// one-sided spectrum. Matches scipy.signal.welch defaults.
Psd welch_psd(std::span<const double> x);

// Shannon entropy (natural log) of a non-negative spectrum normalized to a
// distribution; 0 for zero total power.
double spectral_entropy_of(std::span<const double> power);
double spectral_entropy(std::span<const double> x);

double turning_points(std::span<const double> x);
double excess_kurtosis(std::span<const double> x);
double autocorr_lag1(std::span<const double> x);
// Order 3, delay 1; ties inside a triple rank the earlier sample lower.
double permutation_entropy(std::span<const double> x);

double kl_psd_global(const LabeledDataset& d);
// Symmetric KL between two distributions after epsilon smoothing.
double symmetric_kl(std::span<const double> p, std::span<const double> q,
                    double eps = 1e-12);

// Unconstrained DTW with squared pointwise cost; returns sqrt of the total.
double dtw_distance(std::span<const double> a, std::span<const double> b);

enum class Domain { kTime, kFrequency };

// min(B, max(50, B * 300 / max(300, L))), floored to an integer.
int dtw_budget(int length, int budget = 80);

// Class-round-robin subsample of up to `count` rows, seeded.
std::vector<int> balanced_subsample(const std::vector<int>& labels,
                                    int num_classes, int count, uint64_t seed);

// Mean between-class over mean within-class DTW distance on the budgeted
// subsample; +inf (with a warning) when the within-class mean is 0.
double dtw_separability(const LabeledDataset& d, Domain domain,
                        int budget = 80, uint64_t seed = 42);

// Kruskal-Wallis H with average ranks and tie correction.
double kruskal_wallis(const std::vector<std::vector<double>>& groups);
double kruskal_psd(const LabeledDataset& d);

double imbalance_index(const LabeledDataset& d);

// All 13 features; series are z-normalized first.
MetaFeatureVector compute_meta_features(const LabeledDataset& d,
                                        uint64_t seed = 42);

struct MetaTableRow {
  std::string dataset;
  MetaFeatureVector features;
};

void write_meta_csv(const std::vector<MetaTableRow>& rows,
                    const std::string& path);
std::vector<MetaTableRow> read_meta_csv(const std::string& path);

}  // namespace tsfuse::meta

#endif  // TSFUSE_META_FEATURES_H_
