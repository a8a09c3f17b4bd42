#ifndef TSFUSE_HARNESS_EXPERIMENT_H_
#define TSFUSE_HARNESS_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsfuse/data_core.h"
#include "tsfuse/fusion_model.h"
#include "tsfuse/repr_rocket.h"
#include "tsfuse/repr_sax.h"
#include "tsfuse/repr_sfa.h"

namespace tsfuse::harness {

class ResultStore;

enum class Selection { kNested, kOuterMax };

std::string_view selection_name(Selection s);
Selection parse_selection(std::string_view s);  // "nested" | "outer-max"

struct GridAxes {
  std::vector<int> sax_words{6, 8};
  std::vector<int> sax_frames{10, 15, 20};
  std::vector<int> sfa_words{6, 8};
  std::vector<int> sfa_windows{10, 15, 20};
  std::vector<int> rocket_kernels{1500, 2000};
  std::vector<int> embed_dims{64, 128};
  std::vector<int> hidden_dims{64, 128};
  int alphabet = 4;
  uint64_t rocket_seed = 42;

  // One value per axis: the lower median.
  GridAxes reduced() const;
};

struct GridConfig {
  std::optional<sax::SaxConfig> sax;
  std::optional<sfa::SfaConfig> sfa;
  std::optional<rocket::RocketConfig> rocket;
  int embed_dim = 64;
  int hidden_dim = 64;

  std::string key() const;
};

std::vector<GridConfig> enumerate_grid(fusion::Family family,
                                       const GridAxes& axes);

struct TrainingSchedule {
  double dropout = 0.2;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 25;
  int patience = 5;
  int inner_folds = 5;  // one inner fold (20%) is the validation split
};

struct ExperimentConfig {
  std::filesystem::path data_root;
  std::vector<std::string> datasets;
  std::vector<fusion::Family> families;
  GridAxes axes;
  bool reduced_grid = false;
  TrainingSchedule schedule;
  int folds = 5;
  uint64_t seed = 42;
  std::filesystem::path out = "tsfuse_out";
  int jobs = 1;
  bool resume = false;
  Selection selection = Selection::kNested;
  int regimes = 6;
  int n_boot = 10000;
};

// Reads key = value lines ('#' comments) into the config. Unknown keys throw
// ConfigError.
void apply_config_file(const std::filesystem::path& path, ExperimentConfig& cfg);

struct PreparedDataset {
  LabeledDataset data;  // train and test splits merged, z-normalized
  FoldSplit folds;
};

// Locates <root>/<name>/<name>_TRAIN.{tsv,txt} and the TEST split.
PreparedDataset prepare_dataset(const std::filesystem::path& root,
                                const std::string& name, int k, uint64_t seed);
PreparedDataset prepare_dataset(LabeledDataset merged, int k, uint64_t seed);

struct CellResult {
  std::string config_key;
  int fold = 0;
  bool failed = false;
  std::string failure;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  int selected_epoch = 0;
  std::vector<int> test_rows;
  std::vector<int> predictions;
  std::vector<std::vector<double>> gates;
};

struct ConfigSummary {
  std::string key;
  bool failed = false;
  std::string failure;
  double val_mean = 0.0;
  std::vector<double> test_accuracy;  // per fold, in [0, 1]
  double test_mean = 0.0;
};

struct RunResult {
  std::string dataset;
  fusion::Family family = fusion::Family::kF3;
  Selection selection = Selection::kNested;
  std::string chosen_key;
  std::vector<double> fold_accuracy;
  double mean = 0.0;
  double sd = 0.0;  // sample sd over folds
  std::vector<ConfigSummary> configs;
  std::vector<int> labels;
  std::vector<int> predictions;               // per sample, from its test fold
  std::vector<std::vector<double>> gates;     // per sample
  double wall_seconds = 0.0;
  int cells_computed = 0;
  int cells_loaded = 0;
};

// Full grid search with k-fold CV. The seed of every (config, fold) cell is
// derived from the master seed, the dataset name, the family, the config key
// and the fold, so results do not depend on grid order or parallelism.
RunResult run_grid(const PreparedDataset& d, fusion::Family family,
                   const ExperimentConfig& cfg, ResultStore* store = nullptr);

// results/<dataset>__<family>.csv (per-config summary) and
// predictions/<dataset>__<family>.csv (chosen config, per sample).
void write_run(const RunResult& r, const std::filesystem::path& out);
RunResult read_run(const std::filesystem::path& out, const std::string& dataset,
                   fusion::Family family);
bool run_exists(const std::filesystem::path& out, const std::string& dataset,
                fusion::Family family);

}  // namespace tsfuse::harness

#endif  // TSFUSE_HARNESS_EXPERIMENT_H_
