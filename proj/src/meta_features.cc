#include "tsfuse/meta_features.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>

#include <fftw3.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tsfuse/errors.h"
#include "tsfuse/harness/csv.h"
#include "tsfuse/rng.h"

namespace tsfuse::meta {

namespace {

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Population mean and variance of a list.
std::pair<double, double> mean_var(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, ss / static_cast<double>(v.size())};
}

std::vector<double> normalized(std::span<const double> power) {
  std::vector<double> p(power.begin(), power.end());
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (total > 0.0) {
    for (double& v : p) v /= total;
  }
  return p;
}

// Plans are created under a lock; execution with the new-array interface is
// thread-safe.
class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  // |X_k|^2 for k = 0..n/2.
  void power(std::span<const double> x, std::vector<double>& out) {
    std::copy(x.begin(), x.end(), in_);
    fftw_execute_dft_r2c(plan_, in_, out_);
    out.resize(n_ / 2 + 1);
    for (int k = 0; k <= n_ / 2; ++k) {
      out[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    }
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex mu;
    return mu;
  }
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

}  // namespace

const std::array<std::string_view, kNumMetaFeatures>& meta_feature_names() {
  static const std::array<std::string_view, kNumMetaFeatures> names{
      "spectral_entropy",      "spectral_entropy_var",  "turning_points",
      "turning_points_var",    "kurtosis",              "autocorr_lag1",
      "permutation_entropy",   "ts_length",             "kl_psd",
      "dtw_separability_time", "dtw_separability_freq", "kruskal_psd",
      "imbalance_index"};
  return names;
}

std::array<double, kNumMetaFeatures> MetaFeatureVector::to_array() const {
  return {spectral_entropy,      spectral_entropy_var,  turning_points,
          turning_points_var,    kurtosis,              autocorr_lag1,
          permutation_entropy,   ts_length,             kl_psd,
          dtw_separability_time, dtw_separability_freq, kruskal_psd,
          imbalance_index};
}

MetaFeatureVector MetaFeatureVector::from_array(std::span<const double> v) {
  if (v.size() != kNumMetaFeatures) {
    throw DataError("meta-feature vector must have 13 entries");
  }
  MetaFeatureVector m;
  m.spectral_entropy = v[0];
  m.spectral_entropy_var = v[1];
  m.turning_points = v[2];
  m.turning_points_var = v[3];
  m.kurtosis = v[4];
  m.autocorr_lag1 = v[5];
  m.permutation_entropy = v[6];
  m.ts_length = v[7];
  m.kl_psd = v[8];
  m.dtw_separability_time = v[9];
  m.dtw_separability_freq = v[10];
  m.kruskal_psd = v[11];
  m.imbalance_index = v[12];
  return m;
}

Psd welch_psd(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  if (n < 8) throw ParamError("Welch PSD needs at least 8 samples");
  const int nperseg = std::min(256, n);
  const int overlap = nperseg / 2;
  const int step = nperseg - overlap;
  const int segments = (n - overlap) / step;
  std::vector<double> window(nperseg);
  double window_ss = 0.0;
  for (int i = 0; i < nperseg; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / nperseg);
    window_ss += window[i] * window[i];
  }
  const int bins = nperseg / 2 + 1;
  Psd psd;
  psd.frequencies.resize(bins);
  for (int k = 0; k < bins; ++k) {
    psd.frequencies[k] = static_cast<double>(k) / nperseg;
  }
  psd.power.assign(bins, 0.0);
  RealFft fft(nperseg);
  std::vector<double> seg(nperseg);
  std::vector<double> pw;
  for (int s = 0; s < segments; ++s) {
    const auto part = x.subspan(static_cast<size_t>(s) * step, nperseg);
    const double m = mean_of(part);
    for (int i = 0; i < nperseg; ++i) seg[i] = (part[i] - m) * window[i];
    fft.power(seg, pw);
    for (int k = 0; k < bins; ++k) psd.power[k] += pw[k];
  }
  const double scale = 1.0 / (window_ss * segments);
  for (int k = 0; k < bins; ++k) {
    const bool edge = k == 0 || (nperseg % 2 == 0 && k == bins - 1);
    psd.power[k] *= scale * (edge ? 1.0 : 2.0);
  }
  return psd;
}

double spectral_entropy_of(std::span<const double> power) {
  const double total = std::accumulate(power.begin(), power.end(), 0.0);
  if (!(total > 0.0)) return 0.0;
  double h = 0.0;
  for (double p : power) {
    if (p > 0.0) {
      const double q = p / total;
      h -= q * std::log(q);
    }
  }
  return h;
}

double spectral_entropy(std::span<const double> x) {
  return spectral_entropy_of(welch_psd(x).power);
}

double turning_points(std::span<const double> x) {
  const size_t n = x.size();
  if (n < 3) throw ParamError("turning points need at least 3 samples");
  auto sign = [](double v) { return (v > 0.0) - (v < 0.0); };
  size_t changes = 0;
  for (size_t t = 1; t + 1 < n; ++t) {
    if (sign(x[t + 1] - x[t]) != sign(x[t] - x[t - 1])) ++changes;
  }
  return static_cast<double>(changes) / static_cast<double>(n);
}

double excess_kurtosis(std::span<const double> x) {
  const double m = mean_of(x);
  double m2 = 0.0;
  double m4 = 0.0;
  for (double v : x) {
    const double d2 = (v - m) * (v - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  const double n = static_cast<double>(x.size());
  m2 /= n;
  m4 /= n;
  if (m2 < 1e-300) {
    spdlog::warn("kurtosis of a constant series defined as 0");
    return 0.0;
  }
  return m4 / (m2 * m2) - 3.0;
}

double autocorr_lag1(std::span<const double> x) {
  const size_t n = x.size();
  if (n < 2) return 0.0;
  const double m = mean_of(x);
  double ss = 0.0;
  double cross = 0.0;
  for (size_t t = 0; t < n; ++t) {
    ss += (x[t] - m) * (x[t] - m);
    if (t + 1 < n) cross += (x[t] - m) * (x[t + 1] - m);
  }
  if (ss < 1e-300) {
    spdlog::warn("lag-1 autocorrelation of a constant series defined as 0");
    return 0.0;
  }
  // (n - 1) * Var(x) with the unbiased variance is the total sum of squares.
  return cross / ss;
}

double permutation_entropy(std::span<const double> x) {
  if (x.size() < 5) throw ParamError("permutation entropy needs n >= 5");
  std::array<double, 6> counts{};
  for (size_t t = 0; t + 2 < x.size(); ++t) {
    // Stable ranks: an equal later value ranks higher.
    const double a = x[t], b = x[t + 1], c = x[t + 2];
    const int ra = (b < a) + (c < a);
    const int rb = (a <= b) + (c < b);
    // ra and rb determine the permutation uniquely.
    counts[ra * 2 + (rb > ra ? rb - 1 : rb)] += 1.0;
  }
  return spectral_entropy_of(counts);
}

double symmetric_kl(std::span<const double> p, std::span<const double> q,
                    double eps) {
  const size_t k = p.size();
  double zp = 0.0, zq = 0.0;
  for (size_t i = 0; i < k; ++i) {
    zp += p[i] + eps;
    zq += q[i] + eps;
  }
  double pq = 0.0, qp = 0.0;
  for (size_t i = 0; i < k; ++i) {
    const double a = (p[i] + eps) / zp;
    const double b = (q[i] + eps) / zq;
    pq += a * std::log(a / b);
    qp += b * std::log(b / a);
  }
  return 0.5 * (pq + qp);
}

double kl_psd_global(const LabeledDataset& d) {
  if (d.size() < 2) throw DataError("KL PSD needs at least 2 series");
  std::vector<std::vector<double>> spectra;
  spectra.reserve(d.size());
  for (const auto& s : d.series) spectra.push_back(normalized(welch_psd(s).power));
  std::vector<double> mean(spectra.front().size(), 0.0);
  for (const auto& p : spectra) {
    for (size_t k = 0; k < p.size(); ++k) mean[k] += p[k];
  }
  for (double& v : mean) v /= static_cast<double>(spectra.size());
  double total = 0.0;
  for (const auto& p : spectra) total += symmetric_kl(p, mean);
  return std::max(0.0, total / static_cast<double>(spectra.size()));
}

double dtw_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ParamError("DTW of an empty sequence");
  const size_t m = b.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = inf;
    const double ai = a[i - 1];
    for (size_t j = 1; j <= m; ++j) {
      const double diff = ai - b[j - 1];
      cur[j] = diff * diff + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return std::sqrt(prev[m]);
}

int dtw_budget(int length, int budget) {
  const double scaled =
      budget * 300.0 / static_cast<double>(std::max(300, length));
  return static_cast<int>(
      std::floor(std::min<double>(budget, std::max(50.0, scaled))));
}

std::vector<int> balanced_subsample(const std::vector<int>& labels,
                                    int num_classes, int count,
                                    uint64_t seed) {
  std::vector<std::vector<int>> members(num_classes);
  for (size_t i = 0; i < labels.size(); ++i) {
    members.at(labels[i]).push_back(static_cast<int>(i));
  }
  Rng rng(seed);
  for (auto& m : members) rng.shuffle(m);
  std::vector<int> out;
  std::vector<size_t> cursor(num_classes, 0);
  const size_t target = std::min<size_t>(count, labels.size());
  while (out.size() < target) {
    for (int c = 0; c < num_classes && out.size() < target; ++c) {
      if (cursor[c] < members[c].size()) out.push_back(members[c][cursor[c]++]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double dtw_separability(const LabeledDataset& d, Domain domain, int budget,
                        uint64_t seed) {
  const int b_eff = dtw_budget(static_cast<int>(d.length()), budget);
  const auto rows = balanced_subsample(d.labels, d.num_classes, b_eff, seed);
  std::vector<std::vector<double>> seqs;
  std::vector<int> labels;
  for (int r : rows) {
    seqs.push_back(domain == Domain::kTime ? d.series[r]
                                           : welch_psd(d.series[r]).power);
    labels.push_back(d.labels[r]);
  }
  std::vector<int> per_class(d.num_classes, 0);
  for (int y : labels) ++per_class[y];
  if (std::count_if(per_class.begin(), per_class.end(),
                    [](int c) { return c >= 2; }) < 1 ||
      std::count_if(per_class.begin(), per_class.end(),
                    [](int c) { return c >= 1; }) < 2) {
    throw DataError(d.name +
                    ": DTW separability needs two classes and a class with "
                    "two members in the subsample");
  }
  double between = 0.0, within = 0.0;
  size_t n_between = 0, n_within = 0;
  for (size_t i = 0; i < seqs.size(); ++i) {
    for (size_t j = i + 1; j < seqs.size(); ++j) {
      const double dist = dtw_distance(seqs[i], seqs[j]);
      if (labels[i] == labels[j]) {
        within += dist;
        ++n_within;
      } else {
        between += dist;
        ++n_between;
      }
    }
  }
  within /= static_cast<double>(n_within);
  between /= static_cast<double>(n_between);
  if (!(within > 0.0)) {
    spdlog::warn("{}: within-class DTW mean is 0; separability is +inf",
                 d.name);
    return std::numeric_limits<double>::infinity();
  }
  return between / within;
}

double kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  std::vector<std::pair<double, size_t>> all;
  for (size_t g = 0; g < groups.size(); ++g) {
    for (double v : groups[g]) all.emplace_back(v, g);
  }
  const auto n = static_cast<double>(all.size());
  if (all.size() < 2) return 0.0;
  std::sort(all.begin(), all.end());
  std::vector<double> rank_sum(groups.size(), 0.0);
  double tie_term = 0.0;
  for (size_t i = 0; i < all.size();) {
    size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (size_t k = i; k < j; ++k) rank_sum[all[k].second] += avg;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  double h = 0.0;
  for (size_t g = 0; g < groups.size(); ++g) {
    if (!groups[g].empty()) {
      h += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
    }
  }
  h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
  const double correction = 1.0 - tie_term / (n * n * n - n);
  if (correction <= 1e-12) return 0.0;
  return h / correction;
}

double kruskal_psd(const LabeledDataset& d) {
  std::vector<std::vector<double>> groups(d.num_classes);
  for (size_t i = 0; i < d.size(); ++i) {
    const auto p = welch_psd(d.series[i]).power;
    groups[d.labels[i]].push_back(std::accumulate(p.begin(), p.end(), 0.0));
  }
  return kruskal_wallis(groups);
}

double imbalance_index(const LabeledDataset& d) {
  const auto counts = d.class_counts();
  return static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
         static_cast<double>(d.size());
}

MetaFeatureVector compute_meta_features(const LabeledDataset& raw,
                                        uint64_t seed) {
  validate(raw);
  const LabeledDataset d = z_normalize(raw);
  std::vector<double> entropy, turning, kurt, acf, perm;
  for (const auto& s : d.series) {
    const auto psd = welch_psd(s);
    entropy.push_back(spectral_entropy_of(psd.power));
    turning.push_back(turning_points(s));
    kurt.push_back(excess_kurtosis(s));
    acf.push_back(autocorr_lag1(s));
    perm.push_back(permutation_entropy(s));
  }
  MetaFeatureVector m;
  std::tie(m.spectral_entropy, m.spectral_entropy_var) = mean_var(entropy);
  std::tie(m.turning_points, m.turning_points_var) = mean_var(turning);
  m.kurtosis = mean_var(kurt).first;
  m.autocorr_lag1 = mean_var(acf).first;
  m.permutation_entropy = mean_var(perm).first;
  m.ts_length = static_cast<double>(d.length());
  m.kl_psd = kl_psd_global(d);
  m.dtw_separability_time =
      dtw_separability(d, Domain::kTime, 80, derive_seed(seed, {"dtw_time"}));
  m.dtw_separability_freq =
      dtw_separability(d, Domain::kFrequency, 80, derive_seed(seed, {"dtw_freq"}));
  m.kruskal_psd = kruskal_psd(d);
  m.imbalance_index = imbalance_index(d);
  return m;
}

void write_meta_csv(const std::vector<MetaTableRow>& rows,
                    const std::string& path) {
  csv::Table t;
  t.header.push_back("dataset");
  for (auto name : meta_feature_names()) t.header.emplace_back(name);
  for (const auto& r : rows) {
    csv::Row row{r.dataset};
    for (double v : r.features.to_array()) row.push_back(csv::num(v));
    t.rows.push_back(std::move(row));
  }
  csv::write(path, t);
}

std::vector<MetaTableRow> read_meta_csv(const std::string& path) {
  const auto t = csv::read(path);
  std::vector<size_t> cols;
  for (auto name : meta_feature_names()) cols.push_back(t.column(std::string(name)));
  const size_t name_col = t.column("dataset");
  std::vector<MetaTableRow> out;
  for (const auto& row : t.rows) {
    std::array<double, kNumMetaFeatures> v{};
    for (size_t i = 0; i < kNumMetaFeatures; ++i) v[i] = std::stod(row[cols[i]]);
    out.push_back({row[name_col], MetaFeatureVector::from_array(v)});
  }
  return out;
}

}  // namespace tsfuse::meta
