// Command-line driver for the tsfuse pipeline.

#include <cstdlib>
#include <functional>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "tsfuse/errors.h"
#include "tsfuse/harness/experiment.h"
#include "tsfuse/harness/pipeline.h"

namespace {

using tsfuse::harness::ExperimentConfig;

struct Options {
  std::string config_file;
  std::string data_root;
  std::string datasets;
  std::string families;
  std::string selection = "nested";
  std::string out;
  uint64_t seed = 42;
  int folds = 5;
  int jobs = 1;
  int max_epochs = 0;
  int regimes = 0;
  int n_boot = 0;
  bool resume = false;
  bool reduced = false;
  bool verbose = false;
};

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    const size_t end = s.find(',', start);
    const std::string item =
        s.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!item.empty()) out.push_back(item);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

ExperimentConfig build_config(const Options& o, const CLI::App& app) {
  ExperimentConfig cfg;
  if (const char* env = std::getenv("TSFUSE_DATA")) cfg.data_root = env;
  if (!o.config_file.empty()) {
    tsfuse::harness::apply_config_file(o.config_file, cfg);
  }
  // Command-line flags override the config file.
  auto given = [&](const char* name) { return app.count(name) > 0; };
  if (!o.data_root.empty()) cfg.data_root = o.data_root;
  if (!o.datasets.empty()) cfg.datasets = split(o.datasets);
  if (!o.families.empty()) {
    cfg.families.clear();
    for (const auto& f : split(o.families)) {
      cfg.families.push_back(tsfuse::fusion::parse_family(f));
    }
  }
  if (given("--selection")) {
    cfg.selection = tsfuse::harness::parse_selection(o.selection);
  }
  if (!o.out.empty()) cfg.out = o.out;
  if (given("--seed")) cfg.seed = o.seed;
  if (given("--folds")) cfg.folds = o.folds;
  if (given("--jobs")) cfg.jobs = o.jobs;
  if (given("--max-epochs")) cfg.schedule.max_epochs = o.max_epochs;
  if (given("--regimes")) cfg.regimes = o.regimes;
  if (given("--n-boot")) cfg.n_boot = o.n_boot;
  if (o.resume) cfg.resume = true;
  if (o.reduced) cfg.reduced_grid = true;
  if (cfg.data_root.empty()) {
    throw tsfuse::ConfigError("no data root: pass --data-root or set TSFUSE_DATA");
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regime-aware fusion of symbolic and convolutional time-series "
               "representations"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_file, "key = value config file");
  app.add_option("--data-root", o.data_root,
                 "UCR-format dataset root (fallback: $TSFUSE_DATA)");
  app.add_option("--datasets", o.datasets, "comma-separated dataset names");
  app.add_option("--family", o.families,
                 "comma-separated families: F3, F2_SR, F2_SFR, F2_SS, "
                 "solo_SAX, solo_SFA, solo_ROCKET");
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--folds", o.folds, "outer CV folds");
  app.add_option("--jobs", o.jobs, "worker threads");
  app.add_option("--out", o.out, "output directory");
  app.add_flag("--resume", o.resume, "reuse completed cells from the store");
  app.add_option("--selection", o.selection, "grid selection: nested | outer-max")
      ->check(CLI::IsMember({"nested", "outer-max"}));
  app.add_flag("--reduced-grid", o.reduced, "one value per grid axis");
  app.add_option("--max-epochs", o.max_epochs, "override the epoch cap");
  app.add_option("--regimes", o.regimes, "number of regimes to cut");
  app.add_option("--n-boot", o.n_boot, "bootstrap resamples");
  app.add_flag("-v,--verbose", o.verbose, "debug logging");

  using Stage = std::function<void(const ExperimentConfig&)>;
  namespace h = tsfuse::harness;
  const std::vector<std::tuple<std::string, std::string, Stage>> stages{
      {"ingest", "load, validate and summarize datasets", h::stage_ingest},
      {"features", "export feature matrices", h::stage_features},
      {"train", "grid search with cross-validation", h::stage_train},
      {"evaluate", "collect per-dataset accuracies", h::stage_evaluate},
      {"metafeatures", "compute dataset meta-features", h::stage_metafeatures},
      {"cluster", "discover regimes", h::stage_cluster},
      {"compare", "paired statistics against ROCKET", h::stage_compare},
      {"attribute", "SHAP attribution of fusion gains", h::stage_attribute},
      {"casestudy", "sample-level rescued / hurt analysis", h::stage_casestudy},
      {"report", "tables and plots", h::stage_report},
      {"all", "every stage in order", h::run_all},
  };
  std::map<CLI::App*, Stage> dispatch;
  for (const auto& [name, help, fn] : stages) {
    dispatch[app.add_subcommand(name, help)] = fn;
  }
  CLI11_PARSE(app, argc, argv);
  if (o.verbose) spdlog::set_level(spdlog::level::debug);
  try {
    const auto cfg = build_config(o, app);
    for (auto* sub : app.get_subcommands()) dispatch.at(sub)(cfg);
  } catch (const tsfuse::Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
