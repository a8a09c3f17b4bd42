#ifndef TSFUSE_REGIMES_H_
#define TSFUSE_REGIMES_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tsfuse/feature_matrix.h"

namespace tsfuse::regimes {

// Column-wise z-scores with the sample standard deviation. Zero-variance
// columns become zeros (with a warning).
Matrix standardize_columns(const Matrix& table);

struct Merge {
  int a = 0;  // cluster ids: leaves are 0..N-1, merge s creates N+s
  int b = 0;
  double height = 0.0;
  int size = 0;
};

struct LinkageTree {
  int num_leaves = 0;
  std::vector<Merge> merges;
};

// Ward agglomerative clustering. Heights are sqrt of the Lance-Williams
// updated squared Ward distance, so two singletons merge at their Euclidean
// distance. Ties go to the lexicographically smallest (lower id, higher id).
LinkageTree ward_linkage(const Matrix& points);

// Labels after applying the first N - k merges; numbered 0..k-1 in order of
// first appearance over the rows.
std::vector<int> cut_tree(const LinkageTree& tree, int k);

double silhouette(const Matrix& points, const std::vector<int>& labels);
double davies_bouldin(const Matrix& points, const std::vector<int>& labels);
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

struct Stability {
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> scores;
};

// Rows are resampled with replacement; the unique sampled rows are clustered
// and compared with the full-data labels on those rows.
Stability bootstrap_stability(const Matrix& points, int k, int n_boot,
                              uint64_t seed);

// Projection onto the leading principal components. Each component's sign is
// chosen so that its largest-magnitude loading is positive.
Matrix pca_project(const Matrix& points, int components);

struct RegimeResult {
  std::vector<std::string> datasets;
  Matrix standardized;
  LinkageTree tree;
  std::vector<int> labels;
  int k = 6;
  double silhouette_raw = 0.0;
  double dbi_raw = 0.0;
  double silhouette_pca = 0.0;
  double dbi_pca = 0.0;
  int pca_components = 2;
  Stability stability;
};

RegimeResult discover_regimes(const std::vector<std::string>& datasets,
                              const Matrix& meta, int k = 6,
                              int pca_components = 2, int n_boot = 200,
                              uint64_t seed = 42);

// dataset,regime
void write_regimes_csv(const std::vector<std::string>& datasets,
                       const std::vector<int>& labels,
                       const std::filesystem::path& path);
std::vector<std::pair<std::string, int>> read_regimes_csv(
    const std::filesystem::path& path);

void write_linkage_json(const LinkageTree& tree,
                        const std::vector<std::string>& leaf_names,
                        const std::filesystem::path& path);

}  // namespace tsfuse::regimes

#endif  // TSFUSE_REGIMES_H_
