#include "tsfuse/regimes.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "tsfuse/errors.h"
#include "tsfuse/harness/csv.h"
#include "tsfuse/rng.h"

namespace tsfuse::regimes {

namespace {

double sq_dist(const Matrix& p, Eigen::Index i, Eigen::Index j) {
  return (p.row(i) - p.row(j)).squaredNorm();
}

int count_labels(const std::vector<int>& labels) {
  return labels.empty() ? 0
                        : *std::max_element(labels.begin(), labels.end()) + 1;
}

double choose2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

Matrix standardize_columns(const Matrix& table) {
  Matrix out = table;
  const auto n = table.rows();
  if (n < 2) throw DataError("standardizing needs at least 2 rows");
  for (Eigen::Index c = 0; c < table.cols(); ++c) {
    const double mean = table.col(c).mean();
    const double ss = (table.col(c).array() - mean).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd <= 1e-12) {
      spdlog::warn("meta-feature column {} has zero variance; set to 0", c);
      out.col(c).setZero();
    } else {
      out.col(c) = (table.col(c).array() - mean) / sd;
    }
  }
  return out;
}

LinkageTree ward_linkage(const Matrix& points) {
  const int n = static_cast<int>(points.rows());
  if (n < 2) throw DataError("Ward linkage needs at least 2 points");
  if (!points.allFinite()) throw DataError("Ward linkage input is not finite");
  // Slot-indexed squared Ward distances between the active clusters.
  std::vector<double> d2(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      d2[i * n + j] = d2[j * n + i] = sq_dist(points, i, j);
    }
  }
  std::vector<int> id(n), size(n, 1);
  std::iota(id.begin(), id.end(), 0);
  std::vector<bool> active(n, true);
  LinkageTree tree;
  tree.num_leaves = n;
  for (int step = 0; step < n - 1; ++step) {
    int bi = -1, bj = -1;
    std::tuple<double, int, int> best{std::numeric_limits<double>::infinity(),
                                      0, 0};
    for (int i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (int j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        const std::tuple<double, int, int> cand{
            d2[i * n + j], std::min(id[i], id[j]), std::max(id[i], id[j])};
        if (bi < 0 || cand < best) {
          best = cand;
          bi = i;
          bj = j;
        }
      }
    }
    const double dij = d2[bi * n + bj];
    const int ni = size[bi], nj = size[bj];
    tree.merges.push_back({std::get<1>(best), std::get<2>(best),
                           std::sqrt(std::max(dij, 0.0)), ni + nj});
    for (int k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double nk = size[k];
      const double v = ((ni + nk) * d2[bi * n + k] + (nj + nk) * d2[bj * n + k] -
                        nk * dij) /
                       (ni + nj + nk);
      d2[bi * n + k] = d2[k * n + bi] = v;
    }
    active[bj] = false;
    size[bi] = ni + nj;
    id[bi] = n + step;
  }
  return tree;
}

std::vector<int> cut_tree(const LinkageTree& tree, int k) {
  const int n = tree.num_leaves;
  if (k < 1 || k > n) throw ParamError("cut size must lie in [1, N]");
  std::vector<int> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int s = 0; s < n - k; ++s) {
    const auto& m = tree.merges[s];
    parent[find(m.a)] = n + s;
    parent[find(m.b)] = n + s;
  }
  std::vector<int> labels(n);
  std::vector<int> label_of_root(2 * n - 1, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (label_of_root[r] < 0) label_of_root[r] = next++;
    labels[i] = label_of_root[r];
  }
  return labels;
}

double silhouette(const Matrix& points, const std::vector<int>& labels) {
  const int n = static_cast<int>(points.rows());
  const int k = count_labels(labels);
  if (k < 2 || k > n - 1) {
    throw ParamError("silhouette needs 2 <= clusters <= N - 1");
  }
  std::vector<int> sizes(k, 0);
  for (int y : labels) ++sizes[y];
  double total = 0.0;
  std::vector<double> sums(k);
  for (int i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (int j = 0; j < n; ++j) {
      if (j != i) sums[labels[j]] += std::sqrt(sq_dist(points, i, j));
    }
    const int own = labels[i];
    if (sizes[own] == 1) continue;
    const double a = sums[own] / (sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c != own && sizes[c] > 0) b = std::min(b, sums[c] / sizes[c]);
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / n;
}

double davies_bouldin(const Matrix& points, const std::vector<int>& labels) {
  const int k = count_labels(labels);
  if (k < 2) throw ParamError("Davies-Bouldin needs at least 2 clusters");
  Matrix centroids = Matrix::Zero(k, points.cols());
  std::vector<int> sizes(k, 0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    centroids.row(labels[i]) += points.row(i);
    ++sizes[labels[i]];
  }
  for (int c = 0; c < k; ++c) centroids.row(c) /= sizes[c];
  std::vector<double> scatter(k, 0.0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    scatter[labels[i]] += (points.row(i) - centroids.row(labels[i])).norm();
  }
  for (int c = 0; c < k; ++c) scatter[c] /= sizes[c];
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    double worst = 0.0;
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      const double d = (centroids.row(i) - centroids.row(j)).norm();
      if (d > 0.0) worst = std::max(worst, (scatter[i] + scatter[j]) / d);
    }
    total += worst;
  }
  return total / k;
}

double adjusted_rand_index(const std::vector<int>& a,
                           const std::vector<int>& b) {
  if (a.size() != b.size()) throw ParamError("label vectors differ in length");
  const int ka = count_labels(a), kb = count_labels(b);
  std::vector<double> table(static_cast<size_t>(ka) * kb, 0.0);
  std::vector<double> ra(ka, 0.0), rb(kb, 0.0);
  for (size_t i = 0; i < a.size(); ++i) {
    table[a[i] * kb + b[i]] += 1.0;
    ra[a[i]] += 1.0;
    rb[b[i]] += 1.0;
  }
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (double v : table) index += choose2(v);
  for (double v : ra) sum_a += choose2(v);
  for (double v : rb) sum_b += choose2(v);
  const double pairs = choose2(static_cast<double>(a.size()));
  if (pairs == 0.0) return 1.0;
  const double expected = sum_a * sum_b / pairs;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (std::abs(denom) < 1e-15) return 1.0;
  return (index - expected) / denom;
}

Stability bootstrap_stability(const Matrix& points, int k, int n_boot,
                              uint64_t seed) {
  const int n = static_cast<int>(points.rows());
  const auto full = cut_tree(ward_linkage(points), k);
  Stability s;
  for (int it = 0; it < n_boot; ++it) {
    Rng rng(derive_seed(seed, {"bootstrap", std::to_string(it)}));
    std::vector<bool> drawn(n, false);
    for (int i = 0; i < n; ++i) drawn[rng.below(n)] = true;
    std::vector<int> rows;
    for (int i = 0; i < n; ++i) {
      if (drawn[i]) rows.push_back(i);
    }
    if (rows.size() < 2) continue;
    Matrix sub(rows.size(), points.cols());
    std::vector<int> ref;
    for (size_t r = 0; r < rows.size(); ++r) {
      sub.row(r) = points.row(rows[r]);
      ref.push_back(full[rows[r]]);
    }
    const int kk = std::min<int>(k, static_cast<int>(rows.size()));
    s.scores.push_back(adjusted_rand_index(cut_tree(ward_linkage(sub), kk), ref));
  }
  if (!s.scores.empty()) {
    s.mean = std::accumulate(s.scores.begin(), s.scores.end(), 0.0) /
             s.scores.size();
    double ss = 0.0;
    for (double v : s.scores) ss += (v - s.mean) * (v - s.mean);
    s.sd = s.scores.size() > 1 ? std::sqrt(ss / (s.scores.size() - 1)) : 0.0;
  }
  return s;
}

Matrix pca_project(const Matrix& points, int components) {
  const int max_c = static_cast<int>(std::min(points.rows(), points.cols()));
  if (components < 1 || components > max_c) {
    throw ParamError("PCA component count out of range");
  }
  Matrix centered = points.rowwise() - points.colwise().mean();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(centered),
                                     Eigen::ComputeThinV);
  Eigen::MatrixXd v = svd.matrixV().leftCols(components);
  for (int c = 0; c < components; ++c) {
    Eigen::Index arg = 0;
    v.col(c).cwiseAbs().maxCoeff(&arg);
    if (v(arg, c) < 0.0) v.col(c) *= -1.0;
  }
  return centered * v;
}

RegimeResult discover_regimes(const std::vector<std::string>& datasets,
                              const Matrix& meta, int k, int pca_components,
                              int n_boot, uint64_t seed) {
  if (static_cast<Eigen::Index>(datasets.size()) != meta.rows()) {
    throw ParamError("dataset names and meta-feature rows differ");
  }
  if (k < 2 || k >= meta.rows()) {
    throw ParamError("regime count must lie in [2, N - 1]");
  }
  Matrix capped = meta;
  for (Eigen::Index c = 0; c < capped.cols(); ++c) {
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    bool any_inf = false;
    for (Eigen::Index r = 0; r < capped.rows(); ++r) {
      const double v = capped(r, c);
      if (std::isnan(v)) throw DataError("meta-feature table contains NaN");
      if (std::isinf(v)) {
        any_inf = true;
      } else {
        hi = std::max(hi, v);
        lo = std::min(lo, v);
      }
    }
    if (!any_inf) continue;
    if (!std::isfinite(hi)) hi = lo = 0.0;
    spdlog::warn("meta-feature column {}: infinite sentinels capped at the "
                 "column's finite range", c);
    for (Eigen::Index r = 0; r < capped.rows(); ++r) {
      if (std::isinf(capped(r, c))) capped(r, c) = capped(r, c) > 0 ? hi : lo;
    }
  }
  RegimeResult res;
  res.datasets = datasets;
  res.k = k;
  res.pca_components = pca_components;
  res.standardized = standardize_columns(capped);
  res.tree = ward_linkage(res.standardized);
  res.labels = cut_tree(res.tree, k);
  res.silhouette_raw = silhouette(res.standardized, res.labels);
  res.dbi_raw = davies_bouldin(res.standardized, res.labels);
  const Matrix pca = pca_project(res.standardized, pca_components);
  res.silhouette_pca = silhouette(pca, res.labels);
  res.dbi_pca = davies_bouldin(pca, res.labels);
  res.stability = bootstrap_stability(res.standardized, k, n_boot, seed);
  return res;
}

void write_regimes_csv(const std::vector<std::string>& datasets,
                       const std::vector<int>& labels,
                       const std::filesystem::path& path) {
  csv::Table t;
  t.header = {"dataset", "regime"};
  for (size_t i = 0; i < datasets.size(); ++i) {
    t.rows.push_back({datasets[i], std::to_string(labels.at(i))});
  }
  csv::write(path, t);
}

std::vector<std::pair<std::string, int>> read_regimes_csv(
    const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const size_t dc = t.column("dataset"), rc = t.column("regime");
  std::vector<std::pair<std::string, int>> out;
  for (const auto& r : t.rows) out.emplace_back(r[dc], std::stoi(r[rc]));
  return out;
}

void write_linkage_json(const LinkageTree& tree,
                        const std::vector<std::string>& leaf_names,
                        const std::filesystem::path& path) {
  nlohmann::json j;
  j["num_leaves"] = tree.num_leaves;
  j["leaves"] = leaf_names;
  j["merges"] = nlohmann::json::array();
  for (const auto& m : tree.merges) {
    j["merges"].push_back(
        {{"a", m.a}, {"b", m.b}, {"height", m.height}, {"size", m.size}});
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace tsfuse::regimes
