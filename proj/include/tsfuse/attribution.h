#ifndef TSFUSE_ATTRIBUTION_H_
#define TSFUSE_ATTRIBUTION_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsfuse/feature_matrix.h"

namespace tsfuse::attribution {

// Ridge regression on column-standardized features with an unpenalized
// intercept.
struct SurrogateModel {
  Vector coefficients;  // on the standardized scale
  double intercept = 0.0;
  double lambda = 0.0;
  Vector means;
  Vector scales;  // population sd; 1 for constant columns
  std::vector<double> loo_errors;  // mean squared LOO error per grid point

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  // Coefficients and intercept mapped back to the raw feature scale.
  Vector raw_coefficients() const;
  double raw_intercept() const;
};

const std::vector<double>& lambda_grid();  // 1e-3 ... 1e3, one per decade

// With no lambda given, picks the grid value with the smallest LOO error
// (closed form through the hat matrix).
SurrogateModel fit_surrogate(const Matrix& x, const Vector& y,
                             std::optional<double> lambda = std::nullopt);

struct ShapTable {
  std::vector<std::string> datasets;
  std::vector<std::string> features;
  Matrix phi;     // rows: datasets
  Matrix values;  // feature values behind phi
  double base_value = 0.0;
  Vector predictions;
};

// Exact Shapley values of a linear model against the training means.
ShapTable linear_shap(const SurrogateModel& model, const Matrix& x,
                      std::vector<std::string> datasets = {},
                      std::vector<std::string> features = {});

struct ShapSummaryRow {
  std::string feature;
  double mean_abs = 0.0;
  // Direction of association: sign of cov(feature value, phi). The mean phi
  // itself is 0 over the fitting rows of a linear surrogate.
  int sign = 0;
  double mean = 0.0;
};

// Features by decreasing mean |phi|; empty (with a warning) if all phi are 0.
std::vector<ShapSummaryRow> shap_summary(const ShapTable& table);

void write_shap_csv(const ShapTable& table, const std::filesystem::path& path);
void write_shap_summary_csv(const std::vector<ShapSummaryRow>& rows,
                            const std::filesystem::path& path);

}  // namespace tsfuse::attribution

#endif  // TSFUSE_ATTRIBUTION_H_
