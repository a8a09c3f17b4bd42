#include "tsfuse/harness/experiment.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tsfuse/errors.h"
#include "tsfuse/feature_matrix.h"
#include "tsfuse/harness/csv.h"
#include "tsfuse/harness/store.h"
#include "tsfuse/parallel.h"

namespace tsfuse::harness {

namespace fs = std::filesystem;
using fusion::Branch;
using fusion::Family;

std::string_view selection_name(Selection s) {
  return s == Selection::kNested ? "nested" : "outer-max";
}

Selection parse_selection(std::string_view s) {
  if (s == "nested") return Selection::kNested;
  if (s == "outer-max") return Selection::kOuterMax;
  throw ConfigError(fmt::format("unknown selection mode '{}'", s));
}

namespace {

std::vector<int> lower_median(const std::vector<int>& v) {
  if (v.empty()) return v;
  std::vector<int> s = v;
  std::sort(s.begin(), s.end());
  return {s[(s.size() - 1) / 2]};
}

bool has(const std::vector<Branch>& b, Branch x) {
  return std::find(b.begin(), b.end(), x) != b.end();
}

std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

std::vector<std::string> parse_str_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
  }
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("not a boolean: " + v);
}

fs::path split_file(const fs::path& root, const std::string& name,
                    const std::string& split) {
  for (const char* ext : {".tsv", ".txt", ".csv"}) {
    fs::path p = root / name / (name + "_" + split + ext);
    if (fs::exists(p)) return p;
    p = root / (name + "_" + split + ext);
    if (fs::exists(p)) return p;
  }
  throw DataError(fmt::format("{}: no {} split under {}", name, split,
                              root.string()));
}

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

std::string run_stem(const std::string& dataset, Family f) {
  return fmt::format("{}__{}", dataset, fusion::family_name(f));
}

}  // namespace

GridAxes GridAxes::reduced() const {
  GridAxes r = *this;
  r.sax_words = lower_median(sax_words);
  r.sax_frames = lower_median(sax_frames);
  r.sfa_words = lower_median(sfa_words);
  r.sfa_windows = lower_median(sfa_windows);
  r.rocket_kernels = lower_median(rocket_kernels);
  r.embed_dims = lower_median(embed_dims);
  r.hidden_dims = lower_median(hidden_dims);
  return r;
}

std::string GridConfig::key() const {
  std::string k;
  if (sax) k += sax->key() + "+";
  if (sfa) k += sfa->key() + "+";
  if (rocket) k += rocket->key() + "+";
  return k + fmt::format("e{}_h{}", embed_dim, hidden_dim);
}

std::vector<GridConfig> enumerate_grid(Family family, const GridAxes& axes) {
  const auto branches = fusion::family_branches(family);
  std::vector<std::optional<sax::SaxConfig>> saxes{std::nullopt};
  std::vector<std::optional<sfa::SfaConfig>> sfas{std::nullopt};
  std::vector<std::optional<rocket::RocketConfig>> rockets{std::nullopt};
  if (has(branches, Branch::kSax)) {
    saxes.clear();
    for (int w : axes.sax_words) {
      for (int f : axes.sax_frames) saxes.push_back(sax::SaxConfig{w, f, axes.alphabet});
    }
  }
  if (has(branches, Branch::kSfa)) {
    sfas.clear();
    for (int w : axes.sfa_words) {
      for (int win : axes.sfa_windows) {
        sfas.push_back(sfa::SfaConfig{w, win, axes.alphabet});
      }
    }
  }
  if (has(branches, Branch::kRocket)) {
    rockets.clear();
    for (int k : axes.rocket_kernels) {
      rockets.push_back(rocket::RocketConfig{k, axes.rocket_seed});
    }
  }
  std::vector<GridConfig> grid;
  for (const auto& s : saxes) {
    for (const auto& f : sfas) {
      for (const auto& r : rockets) {
        for (int e : axes.embed_dims) {
          for (int h : axes.hidden_dims) grid.push_back({s, f, r, e, h});
        }
      }
    }
  }
  return grid;
}

void apply_config_file(const fs::path& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("{}:{}: expected key = value",
                                    path.string(), lineno));
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "data_root") cfg.data_root = value;
    else if (key == "datasets") cfg.datasets = parse_str_list(value);
    else if (key == "families") {
      cfg.families.clear();
      for (const auto& f : parse_str_list(value)) {
        cfg.families.push_back(fusion::parse_family(f));
      }
    }
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "folds") cfg.folds = std::stoi(value);
    else if (key == "jobs") cfg.jobs = std::stoi(value);
    else if (key == "out") cfg.out = value;
    else if (key == "resume") cfg.resume = parse_bool(value);
    else if (key == "selection") cfg.selection = parse_selection(value);
    else if (key == "reduced_grid") cfg.reduced_grid = parse_bool(value);
    else if (key == "regimes") cfg.regimes = std::stoi(value);
    else if (key == "n_boot") cfg.n_boot = std::stoi(value);
    else if (key == "dropout") cfg.schedule.dropout = std::stod(value);
    else if (key == "learning_rate") cfg.schedule.learning_rate = std::stod(value);
    else if (key == "batch_size") cfg.schedule.batch_size = std::stoi(value);
    else if (key == "max_epochs") cfg.schedule.max_epochs = std::stoi(value);
    else if (key == "patience") cfg.schedule.patience = std::stoi(value);
    else if (key == "sax_words") cfg.axes.sax_words = parse_int_list(value);
    else if (key == "sax_frames") cfg.axes.sax_frames = parse_int_list(value);
    else if (key == "sfa_words") cfg.axes.sfa_words = parse_int_list(value);
    else if (key == "sfa_windows") cfg.axes.sfa_windows = parse_int_list(value);
    else if (key == "rocket_kernels") cfg.axes.rocket_kernels = parse_int_list(value);
    else if (key == "embed_dims") cfg.axes.embed_dims = parse_int_list(value);
    else if (key == "hidden_dims") cfg.axes.hidden_dims = parse_int_list(value);
    else if (key == "alphabet") cfg.axes.alphabet = std::stoi(value);
    else {
      throw ConfigError(fmt::format("{}:{}: unknown key '{}'", path.string(),
                                    lineno, key));
    }
  }
}

PreparedDataset prepare_dataset(LabeledDataset merged, int k, uint64_t seed) {
  validate(merged);
  PreparedDataset p;
  p.data = z_normalize(merged);
  p.folds = stratified_folds(p.data.labels, p.data.num_classes, k,
                             derive_seed(seed, {"folds", p.data.name}));
  return p;
}

PreparedDataset prepare_dataset(const fs::path& root, const std::string& name,
                                int k, uint64_t seed) {
  const auto train = load_ucr_text(split_file(root, name, "TRAIN"), name);
  const auto test = load_ucr_text(split_file(root, name, "TEST"), name);
  auto [merged, folds] = merge_and_fold(train, test, k, seed);
  (void)folds;
  return prepare_dataset(std::move(merged), k, seed);
}

namespace {

struct FoldData {
  std::vector<int> outer_train;
  std::vector<int> inner_train;
  std::vector<int> val;
  std::vector<int> test;
};

FoldData split_fold(const PreparedDataset& d, int fold, int inner_folds,
                    uint64_t seed) {
  FoldData f;
  f.outer_train = d.folds.train_indices(fold);
  f.test = d.folds.test_indices(fold);
  std::vector<int> y;
  for (int r : f.outer_train) y.push_back(d.data.labels[r]);
  const auto inner = stratified_folds(
      y, d.data.num_classes, inner_folds,
      derive_seed(seed, {"inner", d.data.name, std::to_string(fold)}));
  for (size_t i = 0; i < f.outer_train.size(); ++i) {
    (inner.fold_of[i] == 0 ? f.val : f.inner_train).push_back(f.outer_train[i]);
  }
  return f;
}

std::vector<int> labels_of(const LabeledDataset& d, const std::vector<int>& rows) {
  std::vector<int> y;
  y.reserve(rows.size());
  for (int r : rows) y.push_back(d.labels[r]);
  return y;
}

// Feature matrices keyed by extractor config; empty optional = failed.
struct FeatureCache {
  std::map<std::string, std::optional<Matrix>> matrices;
  std::map<std::string, std::string> errors;
};

template <typename Fn>
void cache_feature(FeatureCache& c, const std::string& key, Fn&& compute) {
  if (c.matrices.count(key)) return;
  try {
    c.matrices[key] = compute();
  } catch (const Error& e) {
    spdlog::warn("{}", e.what());
    c.matrices[key] = std::nullopt;
    c.errors[key] = e.what();
  }
}

}  // namespace

RunResult run_grid(const PreparedDataset& d, Family family,
                   const ExperimentConfig& cfg, ResultStore* store) {
  const auto t0 = std::chrono::steady_clock::now();
  const GridAxes axes = cfg.reduced_grid ? cfg.axes.reduced() : cfg.axes;
  const auto grid = enumerate_grid(family, axes);
  const auto branches = fusion::family_branches(family);
  const std::string fam(fusion::family_name(family));
  const LabeledDataset& data = d.data;
  const int k = d.folds.k;

  std::vector<std::vector<CellResult>> cells(grid.size(),
                                             std::vector<CellResult>(k));
  std::vector<std::vector<bool>> done(grid.size(), std::vector<bool>(k, false));
  RunResult res;
  if (store != nullptr) {
    for (size_t g = 0; g < grid.size(); ++g) {
      for (int f = 0; f < k; ++f) {
        if (auto c = store->load(data.name, fam, grid[g].key(), f)) {
          cells[g][f] = std::move(*c);
          done[g][f] = true;
          ++res.cells_loaded;
        }
      }
    }
  }

  FeatureCache global;  // SAX bags and raw ROCKET features
  for (int f = 0; f < k; ++f) {
    std::vector<size_t> todo;
    for (size_t g = 0; g < grid.size(); ++g) {
      if (!done[g][f]) todo.push_back(g);
    }
    if (todo.empty()) continue;
    const FoldData fd = split_fold(d, f, cfg.schedule.inner_folds, cfg.seed);
    FeatureCache local;  // SFA and standardized ROCKET for this fold
    for (size_t g : todo) {
      const auto& gc = grid[g];
      if (gc.sax) {
        cache_feature(global, gc.sax->key(), [&] {
          return sax::sax_feature_matrix(data, *gc.sax, cfg.jobs).values;
        });
      }
      if (gc.rocket) {
        cache_feature(global, gc.rocket->key(), [&] {
          return rocket::rocket_feature_matrix(data, *gc.rocket, cfg.jobs).values;
        });
        const auto& raw = global.matrices[gc.rocket->key()];
        if (raw) {
          cache_feature(local, gc.rocket->key(), [&] {
            Matrix m = *raw;
            ColumnStandardizer s;
            s.fit(m, fd.outer_train);
            s.apply(m);
            return m;
          });
        } else {
          local.matrices[gc.rocket->key()] = std::nullopt;
          local.errors[gc.rocket->key()] = global.errors[gc.rocket->key()];
        }
      }
      if (gc.sfa) {
        cache_feature(local, gc.sfa->key(), [&] {
          return sfa::sfa_feature_matrix(data, fd.outer_train, *gc.sfa, cfg.jobs)
              .matrix.values;
        });
      }
    }

    const auto y_train = labels_of(data, fd.inner_train);
    const auto y_val = labels_of(data, fd.val);
    const auto y_test = labels_of(data, fd.test);
    parallel_for(todo.size(), cfg.jobs, [&](size_t t) {
      const size_t g = todo[t];
      const auto& gc = grid[g];
      CellResult cell;
      cell.config_key = gc.key();
      cell.fold = f;
      cell.test_rows = fd.test;
      fusion::BranchFeatures full;
      std::string failure;
      auto take = [&](const FeatureCache& c, const std::string& key) {
        const auto& m = c.matrices.at(key);
        if (!m) {
          failure = c.errors.at(key);
          return;
        }
        full.push_back(*m);
      };
      for (Branch b : branches) {
        if (b == Branch::kSax) take(global, gc.sax->key());
        if (b == Branch::kSfa) take(local, gc.sfa->key());
        if (b == Branch::kRocket) take(local, gc.rocket->key());
        if (!failure.empty()) break;
      }
      if (failure.empty()) {
        try {
          fusion::FusionConfig fc;
          fc.branches = branches;
          fc.embed_dim = gc.embed_dim;
          fc.hidden_dim = gc.hidden_dim;
          fc.dropout = cfg.schedule.dropout;
          fc.learning_rate = cfg.schedule.learning_rate;
          fc.batch_size = cfg.schedule.batch_size;
          fc.max_epochs = cfg.schedule.max_epochs;
          fc.patience = cfg.schedule.patience;
          fc.seed = derive_seed(cfg.seed, {data.name, fam, cell.config_key,
                                           "fold", std::to_string(f)});
          std::vector<int> dims;
          for (const auto& m : full) dims.push_back(static_cast<int>(m.cols()));
          fusion::GatedFusionModel model(fc, dims, data.num_classes);
          const auto tr = fusion::gather_rows(full, fd.inner_train);
          const auto va = fusion::gather_rows(full, fd.val);
          const auto te = fusion::gather_rows(full, fd.test);
          const auto rec = fusion::train(model, tr, y_train, va, y_val, fc);
          cell.selected_epoch = rec.selected_epoch;
          cell.val_accuracy =
              fd.val.empty() ? 0.0 : fusion::evaluate(model, va, y_val).accuracy;
          const auto ev = fusion::evaluate(model, te, y_test);
          cell.test_accuracy = ev.accuracy;
          for (const auto& p : ev.predictions) {
            cell.predictions.push_back(p.label);
            cell.gates.emplace_back(p.gates.data(),
                                    p.gates.data() + p.gates.size());
          }
        } catch (const TrainingDiverged& e) {
          failure = e.what();
        } catch (const ParamError& e) {
          failure = e.what();
        } catch (const ConfigError& e) {
          failure = e.what();
        }
      }
      if (!failure.empty()) {
        cell.failed = true;
        cell.failure = failure;
        cell.predictions.clear();
        cell.gates.clear();
      }
      if (store != nullptr) store->save(data.name, fam, cell);
      cells[g][f] = std::move(cell);
    });
    res.cells_computed += static_cast<int>(todo.size());
  }

  res.dataset = data.name;
  res.family = family;
  res.selection = cfg.selection;
  res.labels = data.labels;
  int best = -1;
  double best_score = -1.0;
  for (size_t g = 0; g < grid.size(); ++g) {
    ConfigSummary s;
    s.key = grid[g].key();
    std::vector<double> val;
    for (int f = 0; f < k; ++f) {
      const auto& c = cells[g][f];
      if (c.failed) {
        s.failed = true;
        if (s.failure.empty()) s.failure = c.failure;
      }
      val.push_back(c.val_accuracy);
      s.test_accuracy.push_back(c.test_accuracy);
    }
    s.val_mean = mean_of(val);
    s.test_mean = mean_of(s.test_accuracy);
    if (!s.failed) {
      const double score =
          cfg.selection == Selection::kNested ? s.val_mean : s.test_mean;
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(g);
      }
    }
    res.configs.push_back(std::move(s));
  }
  if (best < 0) {
    throw RunError(fmt::format("{} / {}: every grid config failed ({})",
                               data.name, fam, res.configs.front().failure));
  }
  const auto& chosen = res.configs[best];
  res.chosen_key = chosen.key;
  res.fold_accuracy = chosen.test_accuracy;
  res.mean = chosen.test_mean;
  res.sd = sample_sd(chosen.test_accuracy);
  res.predictions.assign(data.size(), -1);
  res.gates.assign(data.size(), {});
  for (int f = 0; f < k; ++f) {
    const auto& c = cells[best][f];
    for (size_t i = 0; i < c.test_rows.size(); ++i) {
      res.predictions[c.test_rows[i]] = c.predictions[i];
      res.gates[c.test_rows[i]] = c.gates[i];
    }
  }
  res.wall_seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
  return res;
}

void write_run(const RunResult& r, const fs::path& out) {
  const std::string stem = run_stem(r.dataset, r.family);
  csv::Table t;
  t.header = {"dataset", "family", "config", "chosen", "failed", "failure",
              "val_mean", "test_mean"};
  const size_t k = r.fold_accuracy.size();
  for (size_t f = 0; f < k; ++f) t.header.push_back(fmt::format("fold{}", f));
  for (const auto& c : r.configs) {
    csv::Row row{r.dataset, std::string(fusion::family_name(r.family)), c.key,
                 c.key == r.chosen_key ? "1" : "0", c.failed ? "1" : "0",
                 c.failure, csv::num(c.val_mean), csv::num(c.test_mean)};
    for (size_t f = 0; f < k; ++f) row.push_back(csv::num(c.test_accuracy.at(f)));
    t.rows.push_back(std::move(row));
  }
  csv::write(out / "results" / (stem + ".csv"), t);

  csv::Table p;
  p.header = {"index", "label", "prediction"};
  const auto branches = fusion::family_branches(r.family);
  for (Branch b : branches) p.header.push_back(fmt::format("gate_{}", fusion::branch_name(b)));
  for (size_t i = 0; i < r.labels.size(); ++i) {
    csv::Row row{std::to_string(i), std::to_string(r.labels[i]),
                 std::to_string(r.predictions[i])};
    for (size_t b = 0; b < branches.size(); ++b) {
      row.push_back(b < r.gates[i].size() ? csv::num(r.gates[i][b]) : "");
    }
    p.rows.push_back(std::move(row));
  }
  csv::write(out / "predictions" / (stem + ".csv"), p);
}

bool run_exists(const fs::path& out, const std::string& dataset, Family family) {
  const std::string stem = run_stem(dataset, family);
  return fs::exists(out / "results" / (stem + ".csv")) &&
         fs::exists(out / "predictions" / (stem + ".csv"));
}

RunResult read_run(const fs::path& out, const std::string& dataset,
                   Family family) {
  const std::string stem = run_stem(dataset, family);
  const auto t = csv::read(out / "results" / (stem + ".csv"));
  RunResult r;
  r.dataset = dataset;
  r.family = family;
  std::vector<size_t> fold_cols;
  for (size_t c = 0; c < t.header.size(); ++c) {
    if (t.header[c].rfind("fold", 0) == 0) fold_cols.push_back(c);
  }
  for (const auto& row : t.rows) {
    ConfigSummary s;
    s.key = row[t.column("config")];
    s.failed = row[t.column("failed")] == "1";
    s.failure = row[t.column("failure")];
    s.val_mean = std::stod(row[t.column("val_mean")]);
    s.test_mean = std::stod(row[t.column("test_mean")]);
    for (size_t c : fold_cols) s.test_accuracy.push_back(std::stod(row[c]));
    if (row[t.column("chosen")] == "1") {
      r.chosen_key = s.key;
      r.fold_accuracy = s.test_accuracy;
      r.mean = s.test_mean;
      r.sd = sample_sd(s.test_accuracy);
    }
    r.configs.push_back(std::move(s));
  }
  if (r.chosen_key.empty()) throw FormatError(stem + ": no chosen config");
  const auto p = csv::read(out / "predictions" / (stem + ".csv"));
  std::vector<size_t> gate_cols;
  for (size_t c = 0; c < p.header.size(); ++c) {
    if (p.header[c].rfind("gate_", 0) == 0) gate_cols.push_back(c);
  }
  for (const auto& row : p.rows) {
    r.labels.push_back(std::stoi(row[p.column("label")]));
    r.predictions.push_back(std::stoi(row[p.column("prediction")]));
    std::vector<double> g;
    for (size_t c : gate_cols) {
      if (!row[c].empty()) g.push_back(std::stod(row[c]));
    }
    r.gates.push_back(std::move(g));
  }
  return r;
}

}  // namespace tsfuse::harness
