#include "tsfuse/harness/report.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tsfuse/errors.h"
#include "tsfuse/harness/csv.h"

namespace tsfuse::harness {

namespace fs = std::filesystem;

namespace {

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0
                   : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (v.size() - 1));
}

using ModelTable = std::map<std::string, std::map<std::string, double>>;

ModelTable by_model(const std::vector<stats::AccuracyRecord>& acc) {
  ModelTable t;
  for (const auto& r : acc) t[r.model][r.dataset] = r.mean_acc;
  return t;
}

std::set<std::string> models_present(const ReportInputs& in) {
  std::set<std::string> s;
  for (const auto& r : in.accuracy) s.insert(r.model);
  return s;
}

std::vector<std::string> available(const ReportInputs& in,
                                   const std::vector<std::string>& wanted) {
  const auto present = models_present(in);
  std::vector<std::string> out;
  for (const auto& m : wanted) {
    if (present.count(m) && m != in.baseline) out.push_back(m);
  }
  return out;
}

// Fixed-width plain-text render of a CSV table.
void write_text(const csv::Table& t, const fs::path& path) {
  std::vector<size_t> width(t.header.size(), 0);
  for (size_t c = 0; c < t.header.size(); ++c) width[c] = t.header[c].size();
  for (const auto& r : t.rows) {
    for (size_t c = 0; c < r.size() && c < width.size(); ++c) {
      width[c] = std::max(width[c], r[c].size());
    }
  }
  std::ofstream out(path);
  auto line = [&](const csv::Row& r) {
    for (size_t c = 0; c < r.size(); ++c) {
      out << fmt::format("{:<{}}", r[c], width[c]) << (c + 1 < r.size() ? "  " : "");
    }
    out << '\n';
  };
  line(t.header);
  size_t total = 0;
  for (size_t w : width) total += w + 2;
  out << std::string(total > 2 ? total - 2 : 0, '-') << '\n';
  for (const auto& r : t.rows) line(r);
}

void emit(const csv::Table& csv_table, const csv::Table& text_table,
          const fs::path& dir, const std::string& stem) {
  csv::write(dir / (stem + ".csv"), csv_table);
  write_text(text_table, dir / (stem + ".txt"));
}

std::string pct2(double v) { return fmt::format("{:.2f}", v); }
std::string signed2(double v) { return fmt::format("{:+.2f}", v); }

void overall_table(const ReportInputs& in, const std::vector<std::string>& models,
                   const fs::path& dir, const std::string& stem) {
  csv::Table c, t;
  c.header = {"model", "n", "mean_acc", "sd_acc", "delta_pp", "delta_sd",
              "wins", "losses", "ties", "win_rate"};
  t.header = {"Model", "N", "Acc +- SD (%)", "dpp", "dSD", "W/L/T", "Win-rate"};
  for (const auto& r : overall_rows(in, models)) {
    if (r.is_baseline) {
      c.rows.push_back({r.model, std::to_string(r.n), csv::num(r.mean),
                        csv::num(r.sd), "", "", "", "", "", ""});
      t.rows.push_back({r.model + " (baseline)", std::to_string(r.n),
                        pct2(r.mean) + " +- " + pct2(r.sd), "--", "--", "--",
                        "--"});
      continue;
    }
    c.rows.push_back({r.model, std::to_string(r.n), csv::num(r.mean),
                      csv::num(r.sd), csv::num(r.delta_pp),
                      csv::num(r.delta_sd), std::to_string(r.wlt.wins),
                      std::to_string(r.wlt.losses), std::to_string(r.wlt.ties),
                      csv::num(r.wlt.win_rate())});
    t.rows.push_back({r.model, std::to_string(r.n),
                      pct2(r.mean) + " +- " + pct2(r.sd), signed2(r.delta_pp),
                      signed2(r.delta_sd),
                      fmt::format("{}/{}/{}", r.wlt.wins, r.wlt.losses, r.wlt.ties),
                      fmt::format("{:.1f}%", 100.0 * r.wlt.win_rate())});
  }
  emit(c, t, dir, stem);
}

void regime_stats_table(const ReportInputs& in, const fs::path& dir) {
  const auto models = available(in, in.ablation_models);
  std::vector<stats::ComparisonRow> rows;
  if (!models.empty() && models_present(in).count(in.baseline)) {
    rows = stats::compare_models(in.accuracy, models, in.baseline, in.compare);
  }
  stats::write_comparison_csv(rows, dir / "regime_stats.csv");
  csv::Table t;
  t.header = {"Model", "Regime", "N", "HL dpp [95% CI]", "p_Holm", "P(d>0)",
              "ROPE-P_better"};
  for (const auto& r : rows) {
    const bool sig = r.p_holm < 0.05 && r.regime >= 0;
    t.rows.push_back(
        {r.model, r.regime < 0 ? "Overall" : fmt::format("C{}", r.regime + 1),
         std::to_string(r.n),
         fmt::format("{}{:.2f} [{:.2f}, {:.2f}]{}", sig ? "*" : "", r.hl,
                     r.ci.lo, r.ci.hi, r.rope.p_better >= 0.5 ? " ^" : ""),
         r.regime < 0 ? fmt::format("{:.4f} (raw)", r.p_raw)
                      : fmt::format("{:.4f}", r.p_holm),
         fmt::format("{:.2f}", r.win_prob.mean),
         fmt::format("{:.2f}", r.rope.p_better)});
  }
  write_text(t, dir / "regime_stats.txt");
}

void by_regime_table(const ReportInputs& in, const fs::path& dir) {
  const auto table = by_model(in.accuracy);
  std::map<int, std::set<std::string>> regime_sets;
  for (const auto& r : in.accuracy) regime_sets[r.regime].insert(r.dataset);
  csv::Table c, t;
  c.header = {"regime", "n", "model", "mean_acc", "sd_acc", "delta_pp", "delta_sd"};
  t.header = {"Regime", "N", "Model", "Acc (%)", "dpp", "dSD"};
  std::vector<std::string> order{in.baseline};
  for (const auto& [m, _] : table) {
    if (m != in.baseline) order.push_back(m);
  }
  for (const auto& [regime, names] : regime_sets) {
    const auto bit = table.find(in.baseline);
    std::vector<double> base;
    if (bit != table.end()) {
      for (const auto& n : names) {
        if (bit->second.count(n)) base.push_back(bit->second.at(n));
      }
    }
    bool first = true;
    for (const auto& m : order) {
      const auto it = table.find(m);
      if (it == table.end()) continue;
      std::vector<double> v;
      for (const auto& n : names) {
        if (it->second.count(n)) v.push_back(it->second.at(n));
      }
      if (v.empty()) continue;
      const double dpp = base.empty() ? 0.0 : mean_of(v) - mean_of(base);
      const double dsd = base.empty() ? 0.0 : sample_sd(v) - sample_sd(base);
      const std::string label = regime < 0 ? "all" : fmt::format("C{}", regime + 1);
      c.rows.push_back({label, std::to_string(v.size()), m, csv::num(mean_of(v)),
                        csv::num(sample_sd(v)), csv::num(dpp), csv::num(dsd)});
      t.rows.push_back({first ? label : "", first ? std::to_string(v.size()) : "",
                        m, pct2(mean_of(v)) + " +- " + pct2(sample_sd(v)),
                        signed2(dpp), signed2(dsd)});
      first = false;
    }
  }
  emit(c, t, dir, "accuracy_by_regime");
}

void per_dataset_table(const ReportInputs& in, const fs::path& dir) {
  const auto table = by_model(in.accuracy);
  std::map<std::string, int> regime;
  for (const auto& r : in.accuracy) regime[r.dataset] = r.regime;
  std::vector<std::pair<int, std::string>> rows;
  for (const auto& [d, g] : regime) rows.emplace_back(g, d);
  std::sort(rows.begin(), rows.end());
  csv::Table c, t;
  c.header = {"dataset", "regime"};
  t.header = {"Dataset", "Regime"};
  for (const auto& [m, _] : table) {
    c.header.push_back(m);
    t.header.push_back(m);
  }
  for (const auto& [g, d] : rows) {
    csv::Row cr{d, std::to_string(g)};
    csv::Row tr{d, g < 0 ? "-" : fmt::format("C{}", g + 1)};
    for (const auto& [m, accs] : table) {
      const auto it = accs.find(d);
      cr.push_back(it == accs.end() ? "" : csv::num(it->second));
      tr.push_back(it == accs.end() ? "-" : pct2(it->second));
    }
    c.rows.push_back(std::move(cr));
    t.rows.push_back(std::move(tr));
  }
  emit(c, t, dir, "accuracy_per_dataset");
}

}  // namespace

std::vector<OverallRow> overall_rows(const ReportInputs& in,
                                     const std::vector<std::string>& models) {
  const auto table = by_model(in.accuracy);
  std::vector<OverallRow> out;
  const auto bit = table.find(in.baseline);
  if (bit == table.end()) return out;
  const auto& base = bit->second;
  {
    OverallRow r;
    r.model = in.baseline;
    r.is_baseline = true;
    std::vector<double> v;
    for (const auto& [d, a] : base) v.push_back(a);
    r.n = static_cast<int>(v.size());
    r.mean = mean_of(v);
    r.sd = sample_sd(v);
    out.push_back(r);
  }
  for (const auto& m : models) {
    const auto it = table.find(m);
    if (it == table.end() || m == in.baseline) continue;
    std::vector<double> mv, bv, deltas;
    for (const auto& [d, a] : it->second) {
      const auto b = base.find(d);
      if (b == base.end()) continue;
      mv.push_back(a);
      bv.push_back(b->second);
      deltas.push_back(a - b->second);
    }
    OverallRow r;
    r.model = m;
    r.n = static_cast<int>(mv.size());
    r.mean = mean_of(mv);
    r.sd = sample_sd(mv);
    r.delta_pp = r.mean - mean_of(bv);
    r.delta_sd = r.sd - sample_sd(bv);
    r.wlt = stats::win_loss_tie(deltas, in.compare.tie_tolerance);
    out.push_back(r);
  }
  return out;
}

void emit_tables(const ReportInputs& in, const fs::path& dir) {
  fs::create_directories(dir);
  if (in.accuracy.empty()) {
    spdlog::warn("no accuracy results; writing header-only tables");
  }
  overall_table(in, available(in, in.fusion_models), dir, "overall");
  regime_stats_table(in, dir);
  overall_table(in, available(in, in.ablation_models), dir, "ablation");
  by_regime_table(in, dir);
  per_dataset_table(in, dir);
}

}  // namespace tsfuse::harness
