#ifndef TSFUSE_HARNESS_PLOTS_H_
#define TSFUSE_HARNESS_PLOTS_H_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tsfuse/attribution.h"
#include "tsfuse/case_study.h"
#include "tsfuse/feature_matrix.h"

namespace tsfuse::plots {

// Each row shifted to mean 0 and scaled to unit population sd; constant rows
// become zeros.
Matrix zscore_rows(const Matrix& m);

struct Heatmap {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Matrix values;  // raw values, annotated in the cells
  std::string title;
};

// Cells are colored by the row z-score and annotated with the raw value.
std::string heatmap_svg(const Heatmap& h);
std::string shap_bar_svg(const std::vector<attribution::ShapSummaryRow>& rows,
                         const std::string& title);

struct BoxGroup {
  std::string label;
  std::vector<double> values;
};
std::string box_plot_svg(const std::vector<BoxGroup>& groups,
                         const std::string& title, const std::string& y_label);

std::string gate_profile_svg(
    const std::vector<std::vector<case_study::GateBin>>& profile,
    const std::vector<std::string>& branch_names, const std::string& title);

void write_svg(const std::filesystem::path& path, const std::string& svg);

}  // namespace tsfuse::plots

#endif  // TSFUSE_HARNESS_PLOTS_H_
