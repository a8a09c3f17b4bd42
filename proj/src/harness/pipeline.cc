#include "tsfuse/harness/pipeline.h"

#include <algorithm>
#include <fstream>
#include <map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "tsfuse/attribution.h"
#include "tsfuse/case_study.h"
#include "tsfuse/errors.h"
#include "tsfuse/harness/csv.h"
#include "tsfuse/harness/plots.h"
#include "tsfuse/harness/report.h"
#include "tsfuse/harness/store.h"
#include "tsfuse/meta_features.h"
#include "tsfuse/regimes.h"
#include "tsfuse/stats_compare.h"

namespace tsfuse::harness {

namespace fs = std::filesystem;
using fusion::Family;

namespace {

const std::string kBaseline = "solo_ROCKET";

std::map<std::string, int> load_regimes(const ExperimentConfig& cfg) {
  std::map<std::string, int> m;
  const fs::path p = cfg.out / "regimes.csv";
  if (!fs::exists(p)) return m;
  for (const auto& [d, r] : regimes::read_regimes_csv(p)) m[d] = r;
  return m;
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

std::vector<fusion::Branch> branches_of(Family f) {
  return fusion::family_branches(f);
}

std::vector<std::string> branch_names(Family f) {
  std::vector<std::string> out;
  for (auto b : branches_of(f)) out.emplace_back(fusion::branch_name(b));
  return out;
}

}  // namespace

std::vector<std::string> resolve_datasets(const ExperimentConfig& cfg) {
  if (!cfg.datasets.empty()) return cfg.datasets;
  std::vector<std::string> out;
  if (!fs::is_directory(cfg.data_root)) {
    throw ConfigError("data root " + cfg.data_root.string() + " not found");
  }
  for (const auto& e : fs::directory_iterator(cfg.data_root)) {
    if (e.is_directory()) out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Family> resolve_families(const ExperimentConfig& cfg) {
  return cfg.families.empty() ? fusion::all_families() : cfg.families;
}

void stage_ingest(const ExperimentConfig& cfg) {
  csv::Table t;
  t.header = {"dataset", "n", "length", "classes", "imbalance_index"};
  for (const auto& name : resolve_datasets(cfg)) {
    const auto d = prepare_dataset(cfg.data_root, name, cfg.folds, cfg.seed);
    t.rows.push_back({name, std::to_string(d.data.size()),
                      std::to_string(d.data.length()),
                      std::to_string(d.data.num_classes),
                      csv::num(meta::imbalance_index(d.data))});
    spdlog::info("{}: N={} L={} C={}", name, d.data.size(), d.data.length(),
                 d.data.num_classes);
  }
  csv::write(cfg.out / "datasets.csv", t);
}

void stage_features(const ExperimentConfig& cfg) {
  const GridAxes axes = cfg.reduced_grid ? cfg.axes.reduced() : cfg.axes;
  for (const auto& name : resolve_datasets(cfg)) {
    const auto d = prepare_dataset(cfg.data_root, name, cfg.folds, cfg.seed);
    std::vector<int> all(d.data.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    auto dump = [&](const Matrix& m, const std::string& key) {
      csv::Table t;
      t.header = {"label"};
      for (Eigen::Index c = 0; c < m.cols(); ++c) t.header.push_back(fmt::format("x{}", c));
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        csv::Row row{std::to_string(d.data.labels[r])};
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(csv::num(m(r, c)));
        t.rows.push_back(std::move(row));
      }
      csv::write(cfg.out / "features" / name / (key + ".csv"), t);
    };
    try {
      for (int w : axes.sax_words) {
        for (int f : axes.sax_frames) {
          const sax::SaxConfig c{w, f, axes.alphabet};
          dump(sax::sax_feature_matrix(d.data, c, cfg.jobs).values, c.key());
        }
      }
      for (int w : axes.sfa_words) {
        for (int win : axes.sfa_windows) {
          const sfa::SfaConfig c{w, win, axes.alphabet};
          dump(sfa::sfa_feature_matrix(d.data, all, c, cfg.jobs).matrix.values,
               c.key());
        }
      }
      for (int k : axes.rocket_kernels) {
        const rocket::RocketConfig c{k, axes.rocket_seed};
        dump(rocket::rocket_feature_matrix(d.data, c, cfg.jobs).values, c.key());
      }
    } catch (const ParamError& e) {
      spdlog::warn("{}: {}", name, e.what());
    }
  }
}

void stage_train(const ExperimentConfig& cfg) {
  ResultStore store(cfg.out / "store", cfg.resume);
  nlohmann::json timings = nlohmann::json::object();
  const fs::path timing_path = cfg.out / "timings.json";
  if (cfg.resume && fs::exists(timing_path)) {
    std::ifstream in(timing_path);
    timings = nlohmann::json::parse(in, nullptr, false);
    if (timings.is_discarded()) timings = nlohmann::json::object();
  }
  for (const auto& name : resolve_datasets(cfg)) {
    const auto d = prepare_dataset(cfg.data_root, name, cfg.folds, cfg.seed);
    for (Family f : resolve_families(cfg)) {
      const std::string fam(fusion::family_name(f));
      try {
        const auto r = run_grid(d, f, cfg, &store);
        write_run(r, cfg.out);
        spdlog::info("{} / {}: {:.2f}% +- {:.2f} ({}; {} cells trained, {} "
                     "reused, {:.1f}s)",
                     name, fam, 100 * r.mean, 100 * r.sd, r.chosen_key,
                     r.cells_computed, r.cells_loaded, r.wall_seconds);
        if (r.cells_computed > 0 || !timings.contains(name + "/" + fam)) {
          timings[name + "/" + fam] = {{"seconds", r.wall_seconds},
                                       {"cells_trained", r.cells_computed},
                                       {"cells_reused", r.cells_loaded}};
        }
      } catch (const RunError& e) {
        spdlog::error("{}", e.what());
      }
      write_json(timing_path, timings);
    }
  }
}

void stage_metafeatures(const ExperimentConfig& cfg) {
  std::vector<meta::MetaTableRow> rows;
  for (const auto& name : resolve_datasets(cfg)) {
    const auto d = prepare_dataset(cfg.data_root, name, cfg.folds, cfg.seed);
    try {
      rows.push_back({name, meta::compute_meta_features(d.data, cfg.seed)});
    } catch (const Error& e) {
      spdlog::error("{}: meta-features failed: {}", name, e.what());
    }
  }
  meta::write_meta_csv(rows, cfg.out / "meta_features.csv");
}

void stage_cluster(const ExperimentConfig& cfg) {
  const auto rows = meta::read_meta_csv(cfg.out / "meta_features.csv");
  const int n = static_cast<int>(rows.size());
  if (n < 3) {
    spdlog::warn("{} datasets; clustering needs at least 3, every dataset "
                 "assigned to regime 0", n);
    std::vector<std::string> names;
    for (const auto& r : rows) names.push_back(r.dataset);
    regimes::write_regimes_csv(names, std::vector<int>(n, 0),
                               cfg.out / "regimes.csv");
    return;
  }
  int k = cfg.regimes;
  if (k > n - 1) {
    spdlog::warn("only {} datasets; using {} regimes instead of {}", n, n - 1, k);
    k = n - 1;
  }
  std::vector<std::string> names;
  Matrix m(n, meta::kNumMetaFeatures);
  for (int i = 0; i < n; ++i) {
    names.push_back(rows[i].dataset);
    const auto a = rows[i].features.to_array();
    for (size_t c = 0; c < a.size(); ++c) m(i, c) = a[c];
  }
  const int pcs = std::min<int>(2, n);
  const auto res = regimes::discover_regimes(names, m, k, pcs, 200, cfg.seed);
  regimes::write_regimes_csv(names, res.labels, cfg.out / "regimes.csv");
  regimes::write_linkage_json(res.tree, names, cfg.out / "linkage.json");
  write_json(cfg.out / "regime_diagnostics.json",
             {{"k", k},
              {"silhouette", res.silhouette_raw},
              {"davies_bouldin", res.dbi_raw},
              {"pca_components", pcs},
              {"silhouette_pca", res.silhouette_pca},
              {"davies_bouldin_pca", res.dbi_pca},
              {"bootstrap_ari_mean", res.stability.mean},
              {"bootstrap_ari_sd", res.stability.sd}});
}

void stage_evaluate(const ExperimentConfig& cfg) {
  const auto regime = load_regimes(cfg);
  std::vector<stats::AccuracyRecord> rows;
  for (const auto& name : resolve_datasets(cfg)) {
    for (Family f : resolve_families(cfg)) {
      if (!run_exists(cfg.out, name, f)) continue;
      const auto r = read_run(cfg.out, name, f);
      const auto it = regime.find(name);
      rows.push_back({name, it == regime.end() ? -1 : it->second,
                      std::string(fusion::family_name(f)), 100.0 * r.mean,
                      100.0 * r.sd});
    }
  }
  stats::write_accuracy_csv(rows, cfg.out / "accuracy.csv");
}

namespace {

ReportInputs report_inputs(const ExperimentConfig& cfg) {
  ReportInputs in;
  const fs::path p = cfg.out / "accuracy.csv";
  if (fs::exists(p)) in.accuracy = stats::read_accuracy_csv(p);
  in.baseline = kBaseline;
  in.compare.n_boot = cfg.n_boot;
  in.compare.seed = cfg.seed;
  return in;
}

std::vector<std::string> fusion_model_names(const ReportInputs& in) {
  std::vector<std::string> out;
  for (const auto& m : in.ablation_models) {
    const bool present =
        std::any_of(in.accuracy.begin(), in.accuracy.end(),
                    [&](const auto& r) { return r.model == m; });
    if (present) out.push_back(m);
  }
  return out;
}

}  // namespace

void stage_compare(const ExperimentConfig& cfg) {
  const auto in = report_inputs(cfg);
  const auto models = fusion_model_names(in);
  std::vector<stats::ComparisonRow> rows;
  const bool has_base =
      std::any_of(in.accuracy.begin(), in.accuracy.end(),
                  [&](const auto& r) { return r.model == in.baseline; });
  if (has_base && !models.empty()) {
    rows = stats::compare_models(in.accuracy, models, in.baseline, in.compare);
  } else {
    spdlog::warn("comparison needs {} and at least one fusion model", in.baseline);
  }
  stats::write_comparison_csv(rows, cfg.out / "comparison.csv");
}

void stage_attribute(const ExperimentConfig& cfg) {
  const auto in = report_inputs(cfg);
  const auto meta_rows = meta::read_meta_csv(cfg.out / "meta_features.csv");
  std::map<std::string, std::map<std::string, double>> acc;
  for (const auto& r : in.accuracy) acc[r.model][r.dataset] = r.mean_acc;
  std::vector<std::string> features;
  for (auto f : meta::meta_feature_names()) features.emplace_back(f);
  for (const auto& model : fusion_model_names(in)) {
    std::vector<std::string> names;
    std::vector<std::array<double, meta::kNumMetaFeatures>> xs;
    std::vector<double> ys;
    for (const auto& row : meta_rows) {
      const auto m = acc[model].find(row.dataset);
      const auto b = acc[in.baseline].find(row.dataset);
      if (m == acc[model].end() || b == acc[in.baseline].end()) continue;
      auto a = row.features.to_array();
      if (!std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); })) {
        spdlog::warn("{}: non-finite meta-feature, excluded from attribution",
                     row.dataset);
        continue;
      }
      names.push_back(row.dataset);
      xs.push_back(a);
      ys.push_back(m->second - b->second);
    }
    if (names.size() < 3) {
      spdlog::warn("{}: {} datasets, attribution skipped", model, names.size());
      continue;
    }
    Matrix x(names.size(), meta::kNumMetaFeatures);
    Vector y(names.size());
    for (size_t i = 0; i < names.size(); ++i) {
      for (size_t c = 0; c < meta::kNumMetaFeatures; ++c) x(i, c) = xs[i][c];
      y(i) = ys[i];
    }
    const auto model_fit = attribution::fit_surrogate(x, y);
    const auto table = attribution::linear_shap(model_fit, x, names, features);
    attribution::write_shap_csv(table, cfg.out / "shap" / (model + ".csv"));
    attribution::write_shap_summary_csv(attribution::shap_summary(table),
                                        cfg.out / "shap" / (model + "_summary.csv"));
    spdlog::info("{}: surrogate lambda = {}", model, model_fit.lambda);
  }
}

void stage_casestudy(const ExperimentConfig& cfg) {
  const auto regime = load_regimes(cfg);
  csv::Table summary;
  summary.header = {"dataset", "regime", "delta_pp", "both_correct", "rescued",
                    "hurt", "both_wrong", "shift_SAX", "shift_SFA",
                    "shift_ROCKET"};
  std::vector<case_study::SampleStatus> pooled;
  for (const auto& name : resolve_datasets(cfg)) {
    if (!run_exists(cfg.out, name, Family::kF3) ||
        !run_exists(cfg.out, name, Family::kSoloRocket)) {
      continue;
    }
    const auto f3 = read_run(cfg.out, name, Family::kF3);
    const auto rk = read_run(cfg.out, name, Family::kSoloRocket);
    const auto statuses = case_study::classify_samples(rk.predictions,
                                                       f3.predictions,
                                                       f3.labels, f3.gates);
    const fs::path dir = cfg.out / "case_study" / name;
    case_study::write_status_csv(statuses, branch_names(Family::kF3),
                                 dir / "samples.csv");
    int classes = 0;
    for (int y : f3.labels) classes = std::max(classes, y + 1);
    for (int p : f3.predictions) classes = std::max(classes, p + 1);
    for (int p : rk.predictions) classes = std::max(classes, p + 1);
    case_study::write_confusion_csv(
        case_study::confusion_delta(rk.predictions, f3.predictions, f3.labels,
                                    classes),
        dir / "confusion_delta.csv");
    case_study::write_gate_profile_csv(case_study::gate_bin_profile(statuses),
                                       branch_names(Family::kF3),
                                       dir / "gate_profile.csv");
    const auto counts = case_study::count_statuses(statuses);
    const auto shift = case_study::gate_shift(statuses);
    const auto it = regime.find(name);
    csv::Row row{name, std::to_string(it == regime.end() ? -1 : it->second),
                 csv::num(100.0 * (f3.mean - rk.mean)),
                 std::to_string(counts.both_correct),
                 std::to_string(counts.rescued), std::to_string(counts.hurt),
                 std::to_string(counts.both_wrong)};
    for (int b = 0; b < 3; ++b) {
      row.push_back(shift ? csv::num((*shift)[b]) : "unavailable");
    }
    summary.rows.push_back(std::move(row));
    pooled.insert(pooled.end(), statuses.begin(), statuses.end());
  }
  csv::write(cfg.out / "case_study" / "summary.csv", summary);
  if (!pooled.empty()) {
    plots::write_svg(cfg.out / "plots" / "gate_profile.svg",
                     plots::gate_profile_svg(case_study::gate_bin_profile(pooled),
                                             branch_names(Family::kF3),
                                             "Net (rescued - hurt) rate by gate value"));
  }
}

void stage_report(const ExperimentConfig& cfg) {
  const auto in = report_inputs(cfg);
  emit_tables(in, cfg.out / "tables");
  const fs::path plot_dir = cfg.out / "plots";

  // Regime heatmap: meta-feature means, solo accuracies, gains and F3 gates.
  const auto regime = load_regimes(cfg);
  const fs::path meta_path = cfg.out / "meta_features.csv";
  if (regime.empty() || !fs::exists(meta_path)) {
    spdlog::warn("regimes or meta-features missing; heatmap skipped");
  } else {
    int k = 0;
    for (const auto& [_, r] : regime) k = std::max(k, r + 1);
    plots::Heatmap h;
    h.title = "Regime profile (row z-scores, annotated with regime means)";
    for (int c = 0; c < k; ++c) h.col_labels.push_back(fmt::format("C{}", c + 1));
    std::vector<std::vector<double>> rows;
    auto add_row = [&](const std::string& label,
                       const std::map<std::string, double>& per_dataset) {
      std::vector<double> sum(k, 0.0), cnt(k, 0.0);
      for (const auto& [d, v] : per_dataset) {
        const auto it = regime.find(d);
        if (it == regime.end() || !std::isfinite(v)) continue;
        sum[it->second] += v;
        cnt[it->second] += 1.0;
      }
      if (std::all_of(cnt.begin(), cnt.end(), [](double c) { return c == 0; })) return;
      std::vector<double> row(k);
      for (int c = 0; c < k; ++c) row[c] = cnt[c] > 0 ? sum[c] / cnt[c] : 0.0;
      h.row_labels.push_back(label);
      rows.push_back(row);
    };
    const auto meta_rows = meta::read_meta_csv(meta_path);
    const auto names = meta::meta_feature_names();
    for (size_t f = 0; f < names.size(); ++f) {
      std::map<std::string, double> v;
      for (const auto& r : meta_rows) v[r.dataset] = r.features.to_array()[f];
      add_row(std::string(names[f]), v);
    }
    std::map<std::string, std::map<std::string, double>> acc;
    for (const auto& r : in.accuracy) acc[r.model][r.dataset] = r.mean_acc;
    for (const char* solo : {"solo_SAX", "solo_SFA", "solo_ROCKET"}) {
      if (acc.count(solo)) add_row(std::string("acc ") + solo, acc[solo]);
    }
    for (const auto& m : fusion_model_names(in)) {
      std::map<std::string, double> gain;
      for (const auto& [d, a] : acc[m]) {
        if (acc[kBaseline].count(d)) gain[d] = a - acc[kBaseline][d];
      }
      add_row("gain " + m, gain);
    }
    std::map<std::string, std::vector<double>> gates;
    for (const auto& [d, _] : regime) {
      if (!run_exists(cfg.out, d, Family::kF3)) continue;
      const auto r = read_run(cfg.out, d, Family::kF3);
      std::vector<double> mean(3, 0.0);
      for (const auto& g : r.gates) {
        for (size_t b = 0; b < g.size() && b < 3; ++b) mean[b] += g[b] / r.gates.size();
      }
      gates[d] = mean;
    }
    for (int b = 0; b < 3 && !gates.empty(); ++b) {
      std::map<std::string, double> v;
      for (const auto& [d, g] : gates) v[d] = g[b];
      add_row(fmt::format("gate {}", branch_names(Family::kF3)[b]), v);
    }
    h.values.resize(rows.size(), k);
    for (size_t r = 0; r < rows.size(); ++r) {
      for (int c = 0; c < k; ++c) h.values(r, c) = rows[r][c];
    }
    plots::write_svg(plot_dir / "regime_heatmap.svg", plots::heatmap_svg(h));

    for (const auto& m : fusion_model_names(in)) {
      std::vector<plots::BoxGroup> groups(k);
      for (int c = 0; c < k; ++c) groups[c].label = fmt::format("C{}", c + 1);
      for (const auto& [d, a] : acc[m]) {
        const auto it = regime.find(d);
        if (it == regime.end() || !acc[kBaseline].count(d)) continue;
        groups[it->second].values.push_back(a - acc[kBaseline][d]);
      }
      plots::write_svg(plot_dir / fmt::format("gains_{}.svg", m),
                       plots::box_plot_svg(groups, m + " vs ROCKET", "gain (pp)"));
    }
  }
  for (const auto& m : fusion_model_names(in)) {
    const fs::path p = cfg.out / "shap" / (m + "_summary.csv");
    if (!fs::exists(p)) continue;
    const auto t = csv::read(p);
    std::vector<attribution::ShapSummaryRow> rows;
    for (const auto& r : t.rows) {
      rows.push_back({r[t.column("feature")], std::stod(r[t.column("mean_abs_shap")]),
                      std::stoi(r[t.column("sign")]),
                      std::stod(r[t.column("mean_shap")])});
    }
    plots::write_svg(plot_dir / fmt::format("shap_{}.svg", m),
                     plots::shap_bar_svg(rows, "SHAP summary: " + m + " - ROCKET"));
  }
}

void run_all(const ExperimentConfig& cfg) {
  stage_ingest(cfg);
  stage_train(cfg);
  stage_metafeatures(cfg);
  stage_cluster(cfg);
  stage_evaluate(cfg);
  stage_compare(cfg);
  stage_attribute(cfg);
  stage_casestudy(cfg);
  stage_report(cfg);
}

}  // namespace tsfuse::harness
