#include "tsfuse/stats_compare.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>
#include <spdlog/spdlog.h>

#include "tsfuse/errors.h"
#include "tsfuse/harness/csv.h"
#include "tsfuse/rng.h"

namespace tsfuse::stats {

namespace {

double median_inplace(std::vector<double>& v) {
  const size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

double walsh_median(std::span<const double> x, std::vector<double>& scratch) {
  scratch.clear();
  for (size_t i = 0; i < x.size(); ++i) {
    for (size_t j = i; j < x.size(); ++j) scratch.push_back(0.5 * (x[i] + x[j]));
  }
  return median_inplace(scratch);
}

}  // namespace

double hl_median(std::span<const double> deltas) {
  if (deltas.empty()) throw ParamError("HL median of an empty sample");
  std::vector<double> scratch;
  return walsh_median(deltas, scratch);
}

Interval bootstrap_ci(std::span<const double> deltas, double level, int n_boot,
                      uint64_t seed) {
  if (deltas.empty()) throw ParamError("bootstrap of an empty sample");
  if (n_boot < 1 || !(level > 0.0 && level < 1.0)) {
    throw ParamError("bootstrap needs n_boot >= 1 and level in (0, 1)");
  }
  const size_t n = deltas.size();
  std::vector<double> stats(n_boot), sample(n), scratch;
  for (int b = 0; b < n_boot; ++b) {
    Rng rng(derive_seed(seed, {"bootstrap", std::to_string(b)}));
    for (size_t i = 0; i < n; ++i) sample[i] = deltas[rng.below(n)];
    stats[b] = walsh_median(sample, scratch);
  }
  std::sort(stats.begin(), stats.end());
  const double alpha = 1.0 - level;
  return {quantile_sorted(stats, alpha / 2.0),
          quantile_sorted(stats, 1.0 - alpha / 2.0)};
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> deltas,
                                    int exact_limit) {
  std::vector<double> nz;
  for (double d : deltas) {
    if (!std::isfinite(d)) throw DataError("non-finite paired difference");
    if (d != 0.0) nz.push_back(d);
  }
  WilcoxonResult r;
  r.n_eff = static_cast<int>(nz.size());
  if (nz.empty()) {
    spdlog::warn("Wilcoxon test: all differences are zero; p = 1");
    return r;
  }
  const int n = r.n_eff;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(nz[a]) < std::abs(nz[b]);
  });
  // Doubled average ranks are integers.
  std::vector<int> rank2(n);
  double tie_term = 0.0;
  for (int i = 0; i < n;) {
    int j = i;
    while (j < n && std::abs(nz[order[j]]) == std::abs(nz[order[i]])) ++j;
    for (int k = i; k < j; ++k) rank2[order[k]] = i + 1 + j;
    const double t = j - i;
    tie_term += t * t * t - t;
    i = j;
  }
  long w_plus2 = 0, total2 = 0;
  for (int i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (nz[i] > 0) w_plus2 += rank2[i];
  }
  const long w2 = std::min(w_plus2, total2 - w_plus2);
  r.statistic = 0.5 * static_cast<double>(w2);
  if (n <= exact_limit) {
    r.exact = true;
    // Number of sign patterns per doubled positive-rank sum.
    std::vector<double> ways(total2 + 1, 0.0);
    ways[0] = 1.0;
    long reach = 0;
    for (int i = 0; i < n; ++i) {
      for (long s = reach; s >= 0; --s) {
        if (ways[s] != 0.0) ways[s + rank2[i]] += ways[s];
      }
      reach += rank2[i];
    }
    double tail = 0.0;
    for (long s = 0; s <= w2; ++s) tail += ways[s];
    r.p = std::min(1.0, 2.0 * tail / std::ldexp(1.0, n));
  } else {
    const double nn = n;
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double d = r.statistic - mean;
    const double z = var > 0.0 ? std::min(0.0, d + 0.5) / std::sqrt(var) : 0.0;
    const boost::math::normal_distribution<double> normal;
    r.p = std::min(1.0, 2.0 * boost::math::cdf(normal, z));
  }
  return r;
}

std::vector<double> holm_adjust(std::span<const double> pvals) {
  const size_t m = pvals.size();
  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return pvals[a] < pvals[b]; });
  std::vector<double> out(m);
  double running = 0.0;
  for (size_t i = 0; i < m; ++i) {
    const double adj = static_cast<double>(m - i) * pvals[order[i]];
    running = std::max(running, std::min(1.0, adj));
    out[order[i]] = running;
  }
  return out;
}

WinProbability bayes_win_prob(int wins, int losses) {
  if (wins < 0 || losses < 0) throw ParamError("negative win/loss count");
  if (wins < losses) {
    const WinProbability m = bayes_win_prob(losses, wins);
    return {1.0 - m.mean, {1.0 - m.ci.hi, 1.0 - m.ci.lo}};
  }
  const boost::math::beta_distribution<double> post(wins + 0.5, losses + 0.5);
  WinProbability w;
  w.mean = (wins + 0.5) / (wins + losses + 1.0);
  w.ci = {boost::math::quantile(post, 0.025),
          boost::math::quantile(post, 0.975)};
  return w;
}

double rope_half_width(double baseline_acc_pp, double rho) {
  return std::clamp(rho * (100.0 - baseline_acc_pp), 0.10, 2.0);
}

RopeResult rope_analysis(std::span<const double> deltas,
                         std::span<const double> baseline_accs, double rho) {
  if (deltas.size() != baseline_accs.size()) {
    throw ParamError("deltas and baseline accuracies differ in length");
  }
  RopeResult r;
  for (size_t i = 0; i < deltas.size(); ++i) {
    const double half = rope_half_width(baseline_accs[i], rho);
    r.delta.push_back(half);
    if (deltas[i] > half) {
      ++r.n_better;
    } else if (deltas[i] < -half) {
      ++r.n_worse;
    } else {
      ++r.n_rope;
    }
  }
  r.p_better = (r.n_better + 0.5) / (static_cast<double>(deltas.size()) + 1.0);
  return r;
}

double WinLossTie::win_rate() const {
  return wins + losses == 0 ? 0.5
                            : static_cast<double>(wins) / (wins + losses);
}

WinLossTie win_loss_tie(std::span<const double> deltas, double tie_tolerance) {
  WinLossTie w;
  for (double d : deltas) {
    if (std::abs(d) <= tie_tolerance) {
      ++w.ties;
    } else if (d > 0) {
      ++w.wins;
    } else {
      ++w.losses;
    }
  }
  return w;
}

WinLossTie win_loss_tie_rounded(std::span<const double> deltas) {
  std::vector<double> rounded;
  for (double d : deltas) rounded.push_back(std::round(d * 100.0) / 100.0);
  return win_loss_tie(rounded, 0.0);
}

void write_accuracy_csv(const std::vector<AccuracyRecord>& rows,
                        const std::filesystem::path& path) {
  csv::Table t;
  t.header = {"dataset", "regime", "model", "mean_acc", "sd_acc"};
  for (const auto& r : rows) {
    t.rows.push_back({r.dataset, std::to_string(r.regime), r.model,
                      csv::num(r.mean_acc), csv::num(r.sd_acc)});
  }
  csv::write(path, t);
}

std::vector<AccuracyRecord> read_accuracy_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const size_t dc = t.column("dataset"), rc = t.column("regime"),
               mc = t.column("model"), ac = t.column("mean_acc"),
               sc = t.column("sd_acc");
  std::vector<AccuracyRecord> out;
  for (const auto& r : t.rows) {
    out.push_back({r[dc], r[rc].empty() ? -1 : std::stoi(r[rc]), r[mc],
                   std::stod(r[ac]), std::stod(r[sc])});
  }
  return out;
}

namespace {

ComparisonRow compare_subset(const std::vector<double>& deltas,
                             const std::vector<double>& base,
                             const CompareOptions& o) {
  ComparisonRow row;
  row.n = static_cast<int>(deltas.size());
  row.hl = hl_median(deltas);
  row.ci = bootstrap_ci(deltas, 0.95, o.n_boot, o.seed);
  const auto w = wilcoxon_signed_rank(deltas);
  row.wilcoxon_w = w.statistic;
  row.p_raw = row.p_holm = w.p;
  row.wlt = win_loss_tie(deltas, o.tie_tolerance);
  row.wlt_rounded = win_loss_tie_rounded(deltas);
  row.win_prob = bayes_win_prob(row.wlt.wins, row.wlt.losses);
  row.rope = rope_analysis(deltas, base, o.rho);
  return row;
}

}  // namespace

std::vector<ComparisonRow> compare_models(
    const std::vector<AccuracyRecord>& records,
    const std::vector<std::string>& models, const std::string& baseline,
    const CompareOptions& options) {
  std::map<std::string, const AccuracyRecord*> base;
  for (const auto& r : records) {
    if (r.model == baseline) base[r.dataset] = &r;
  }
  if (base.empty()) throw DataError("no accuracies for baseline " + baseline);
  std::vector<ComparisonRow> rows;
  for (const auto& model : models) {
    // regime -> (deltas, baseline accuracies); key -1 is overall.
    std::map<int, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& r : records) {
      if (r.model != model) continue;
      const auto it = base.find(r.dataset);
      if (it == base.end()) {
        spdlog::warn("{}: no baseline accuracy, skipped", r.dataset);
        continue;
      }
      const double d = r.mean_acc - it->second->mean_acc;
      groups[-1].first.push_back(d);
      groups[-1].second.push_back(it->second->mean_acc);
      if (r.regime >= 0) {
        groups[r.regime].first.push_back(d);
        groups[r.regime].second.push_back(it->second->mean_acc);
      }
    }
    for (const auto& [regime, g] : groups) {
      ComparisonRow row = compare_subset(g.first, g.second, options);
      row.model = model;
      row.baseline = baseline;
      row.regime = regime;
      rows.push_back(std::move(row));
    }
  }
  auto adjust = [&](const std::vector<size_t>& idx) {
    std::vector<double> p;
    for (size_t i : idx) p.push_back(rows[i].p_raw);
    const auto adj = holm_adjust(p);
    for (size_t k = 0; k < idx.size(); ++k) rows[idx[k]].p_holm = adj[k];
  };
  if (options.holm_scope == HolmScope::kJoint) {
    std::vector<size_t> idx;
    for (size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].regime >= 0) idx.push_back(i);
    }
    adjust(idx);
  } else {
    for (const auto& model : models) {
      std::vector<size_t> idx;
      for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].model == model && rows[i].regime >= 0) idx.push_back(i);
      }
      adjust(idx);
    }
  }
  return rows;
}

void write_comparison_csv(const std::vector<ComparisonRow>& rows,
                          const std::filesystem::path& path) {
  csv::Table t;
  t.header = {"model",      "baseline",   "regime",     "n",
              "hl_median",  "ci_lo",      "ci_hi",      "wilcoxon_w",
              "p_raw",      "p_holm",     "p_win",      "p_win_lo",
              "p_win_hi",   "rope_p_better", "n_better", "n_rope",
              "n_worse",    "wins",       "losses",     "ties",
              "win_rate",   "ties_rounded"};
  for (const auto& r : rows) {
    t.rows.push_back(
        {r.model, r.baseline, r.regime < 0 ? "overall" : std::to_string(r.regime),
         std::to_string(r.n), csv::num(r.hl), csv::num(r.ci.lo),
         csv::num(r.ci.hi), csv::num(r.wilcoxon_w), csv::num(r.p_raw),
         csv::num(r.p_holm), csv::num(r.win_prob.mean),
         csv::num(r.win_prob.ci.lo), csv::num(r.win_prob.ci.hi),
         csv::num(r.rope.p_better), std::to_string(r.rope.n_better),
         std::to_string(r.rope.n_rope), std::to_string(r.rope.n_worse),
         std::to_string(r.wlt.wins), std::to_string(r.wlt.losses),
         std::to_string(r.wlt.ties), csv::num(r.wlt.win_rate()),
         std::to_string(r.wlt_rounded.ties)});
  }
  csv::write(path, t);
}

}  // namespace tsfuse::stats
