#ifndef TSFUSE_STATS_COMPARE_H_
#define TSFUSE_STATS_COMPARE_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tsfuse::stats {

// Median of all Walsh averages (x_i + x_j) / 2, i <= j.
double hl_median(std::span<const double> deltas);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile bootstrap of hl_median; linear interpolation between order
// statistics. Resample b draws from derive_seed(seed, {"bootstrap", b}).
Interval bootstrap_ci(std::span<const double> deltas, double level = 0.95,
                      int n_boot = 10000, uint64_t seed = 42);

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double p = 1.0;
  int n_eff = 0;
  bool exact = false;
};

// Two-sided signed-rank test with zeros removed and average ranks for ties.
// Exact null distribution for n_eff <= exact_limit, otherwise the normal
// approximation with tie-corrected variance and continuity correction.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> deltas,
                                    int exact_limit = 25);

std::vector<double> holm_adjust(std::span<const double> pvals);

struct WinProbability {
  double mean = 0.5;
  Interval ci;
};

// Posterior Beta(wins + 1/2, losses + 1/2).
WinProbability bayes_win_prob(int wins, int losses);

struct RopeResult {
  double p_better = 0.5;
  int n_better = 0;
  int n_rope = 0;
  int n_worse = 0;
  std::vector<double> delta;  // per-dataset half width, in pp
};

double rope_half_width(double baseline_acc_pp, double rho = 0.03);

// Deltas and baseline accuracies in percentage points.
RopeResult rope_analysis(std::span<const double> deltas,
                         std::span<const double> baseline_accs,
                         double rho = 0.03);

struct WinLossTie {
  int wins = 0;
  int losses = 0;
  int ties = 0;
  double win_rate() const;  // wins / (wins + losses); 0.5 when both are 0
};

WinLossTie win_loss_tie(std::span<const double> deltas,
                        double tie_tolerance = 1e-6);
// Ties counted after rounding each delta to 0.01 pp.
WinLossTie win_loss_tie_rounded(std::span<const double> deltas);

// One row of the per-dataset accuracy table. Accuracies in percent.
struct AccuracyRecord {
  std::string dataset;
  int regime = -1;
  std::string model;
  double mean_acc = 0.0;
  double sd_acc = 0.0;
};

void write_accuracy_csv(const std::vector<AccuracyRecord>& rows,
                        const std::filesystem::path& path);
std::vector<AccuracyRecord> read_accuracy_csv(const std::filesystem::path& path);

enum class HolmScope { kPerModel, kJoint };

struct CompareOptions {
  int n_boot = 10000;
  uint64_t seed = 42;
  double rho = 0.03;
  double tie_tolerance = 1e-6;
  HolmScope holm_scope = HolmScope::kPerModel;
};

struct ComparisonRow {
  std::string model;
  std::string baseline;
  int regime = -1;  // -1 for the overall row
  int n = 0;
  double hl = 0.0;
  Interval ci;
  double wilcoxon_w = 0.0;
  double p_raw = 1.0;
  double p_holm = 1.0;
  WinProbability win_prob;
  RopeResult rope;
  WinLossTie wlt;
  WinLossTie wlt_rounded;
};

// Paired comparison of each model against the baseline, overall and per
// regime. Holm adjustment runs over the regime rows, per model or jointly
// across models; overall rows keep their raw p.
std::vector<ComparisonRow> compare_models(
    const std::vector<AccuracyRecord>& records,
    const std::vector<std::string>& models, const std::string& baseline,
    const CompareOptions& options = {});

void write_comparison_csv(const std::vector<ComparisonRow>& rows,
                          const std::filesystem::path& path);

}  // namespace tsfuse::stats

#endif  // TSFUSE_STATS_COMPARE_H_
