#include "tsfuse/attribution.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "tsfuse/errors.h"
#include "tsfuse/harness/csv.h"

namespace tsfuse::attribution {

double SurrogateModel::predict(
    const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const Eigen::RowVectorXd z =
      (x - means.transpose()).array() / scales.transpose().array();
  return intercept + z.dot(coefficients.transpose());
}

Vector SurrogateModel::raw_coefficients() const {
  return coefficients.array() / scales.array();
}

double SurrogateModel::raw_intercept() const {
  return intercept - raw_coefficients().dot(means);
}

const std::vector<double>& lambda_grid() {
  static const std::vector<double> grid{1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  return grid;
}

SurrogateModel fit_surrogate(const Matrix& x, const Vector& y,
                             std::optional<double> lambda) {
  const auto n = x.rows();
  const auto f = x.cols();
  if (n != y.size()) throw ParamError("surrogate: rows and targets differ");
  if (n < 3) throw DataError("surrogate needs at least 3 rows");
  if (!x.allFinite() || !y.allFinite()) {
    throw DataError("surrogate inputs must be finite");
  }
  if (n < 14) {
    spdlog::warn("surrogate fitted on {} rows (fewer than 14)", n);
  }
  SurrogateModel m;
  m.means = x.colwise().mean().transpose();
  m.scales.resize(f);
  Eigen::MatrixXd z(n, f);
  for (Eigen::Index c = 0; c < f; ++c) {
    const Eigen::VectorXd col = x.col(c).array() - m.means(c);
    const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n));
    m.scales(c) = sd > 1e-12 ? sd : 1.0;
    z.col(c) = col / m.scales(c);
  }
  const double y_mean = y.mean();
  const Eigen::VectorXd yc = y.array() - y_mean;
  const Eigen::MatrixXd gram = z.transpose() * z;
  const Eigen::VectorXd zty = z.transpose() * yc;
  auto solve = [&](double lam) {
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += lam;
    return Eigen::LDLT<Eigen::MatrixXd>(a);
  };
  double chosen = lambda.value_or(0.0);
  if (!lambda) {
    double best = std::numeric_limits<double>::infinity();
    for (double lam : lambda_grid()) {
      const auto ldlt = solve(lam);
      const Eigen::VectorXd w = ldlt.solve(zty);
      const Eigen::MatrixXd ainv_zt = ldlt.solve(z.transpose());
      double err = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double h = 1.0 / static_cast<double>(n) + z.row(i).dot(ainv_zt.col(i));
        const double resid = yc(i) - z.row(i).dot(w);
        const double loo = resid / (1.0 - h);
        err += loo * loo;
      }
      err /= static_cast<double>(n);
      m.loo_errors.push_back(err);
      if (err < best) {
        best = err;
        chosen = lam;
      }
    }
  }
  if (chosen < 0.0) throw ParamError("ridge penalty must be >= 0");
  m.lambda = chosen;
  m.coefficients = solve(chosen).solve(zty);
  m.intercept = y_mean;
  return m;
}

ShapTable linear_shap(const SurrogateModel& model, const Matrix& x,
                      std::vector<std::string> datasets,
                      std::vector<std::string> features) {
  ShapTable t;
  t.datasets = std::move(datasets);
  t.features = std::move(features);
  if (t.features.empty()) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      t.features.push_back("f" + std::to_string(c));
    }
  }
  const Vector w = model.raw_coefficients();
  t.values = x;
  t.phi.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      t.phi(i, c) = w(c) * (x(i, c) - model.means(c));
    }
  }
  t.base_value = model.intercept;
  t.predictions.resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    t.predictions(i) = model.predict(x.row(i));
  }
  return t;
}

std::vector<ShapSummaryRow> shap_summary(const ShapTable& table) {
  std::vector<ShapSummaryRow> rows;
  if (table.phi.size() == 0 || table.phi.cwiseAbs().maxCoeff() == 0.0) {
    spdlog::warn("all SHAP values are zero; ranking is empty");
    return rows;
  }
  for (Eigen::Index c = 0; c < table.phi.cols(); ++c) {
    ShapSummaryRow r;
    r.feature = table.features.at(c);
    r.mean_abs = table.phi.col(c).cwiseAbs().mean();
    r.mean = table.phi.col(c).mean();
    double cov = 0.0;
    if (table.values.cols() == table.phi.cols()) {
      const auto v = table.values.col(c).array() - table.values.col(c).mean();
      cov = (v * (table.phi.col(c).array() - r.mean)).sum();
    }
    r.sign = (cov > 0.0) - (cov < 0.0);
    rows.push_back(r);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.mean_abs > b.mean_abs;
  });
  return rows;
}

void write_shap_csv(const ShapTable& table, const std::filesystem::path& path) {
  csv::Table t;
  t.header = {"dataset"};
  for (const auto& f : table.features) t.header.push_back(f);
  t.header.push_back("base_value");
  t.header.push_back("prediction");
  for (Eigen::Index i = 0; i < table.phi.rows(); ++i) {
    csv::Row row{i < static_cast<Eigen::Index>(table.datasets.size())
                     ? table.datasets[i]
                     : std::to_string(i)};
    for (Eigen::Index c = 0; c < table.phi.cols(); ++c) {
      row.push_back(csv::num(table.phi(i, c)));
    }
    row.push_back(csv::num(table.base_value));
    row.push_back(csv::num(table.predictions(i)));
    t.rows.push_back(std::move(row));
  }
  csv::write(path, t);
}

void write_shap_summary_csv(const std::vector<ShapSummaryRow>& rows,
                            const std::filesystem::path& path) {
  csv::Table t;
  t.header = {"feature", "mean_abs_shap", "mean_shap", "sign"};
  for (const auto& r : rows) {
    t.rows.push_back({r.feature, csv::num(r.mean_abs), csv::num(r.mean),
                      std::to_string(r.sign)});
  }
  csv::write(path, t);
}

}  // namespace tsfuse::attribution
