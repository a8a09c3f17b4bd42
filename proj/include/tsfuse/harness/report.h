#ifndef TSFUSE_HARNESS_REPORT_H_
#define TSFUSE_HARNESS_REPORT_H_

#include <filesystem>
#include <string>
#include <vector>

#include "tsfuse/stats_compare.h"

namespace tsfuse::harness {

struct ReportInputs {
  std::vector<stats::AccuracyRecord> accuracy;  // percent
  std::string baseline = "solo_ROCKET";
  std::vector<std::string> fusion_models{"F3"};
  std::vector<std::string> ablation_models{"F3", "F2_SFR", "F2_SR", "F2_SS"};
  stats::CompareOptions compare;
};

struct OverallRow {
  std::string model;
  int n = 0;
  double mean = 0.0;  // across datasets, percent
  double sd = 0.0;    // sample sd across datasets
  double delta_pp = 0.0;
  double delta_sd = 0.0;
  stats::WinLossTie wlt;
  bool is_baseline = false;
};

// Accuracy across datasets for each model relative to the baseline, over the
// datasets both have results for.
std::vector<OverallRow> overall_rows(const ReportInputs& in,
                                     const std::vector<std::string>& models);

// Writes overall, per-regime statistics, ablation, per-regime accuracy and
// per-dataset tables as CSV plus plain-text renders into `dir`.
void emit_tables(const ReportInputs& in, const std::filesystem::path& dir);

}  // namespace tsfuse::harness

#endif  // TSFUSE_HARNESS_REPORT_H_
