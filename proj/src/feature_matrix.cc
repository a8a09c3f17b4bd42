#include "tsfuse/feature_matrix.h"

#include <cmath>

namespace tsfuse {

void l2_normalize_rows(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double norm = m.row(r).norm();
    if (norm > 0.0) m.row(r) /= norm;
  }
}

void ColumnStandardizer::fit(const Matrix& m, std::span<const int> rows) {
  const Eigen::Index cols = m.cols();
  means_ = Vector::Zero(cols);
  scales_ = Vector::Ones(cols);
  if (rows.empty()) return;
  for (int r : rows) means_ += m.row(r).transpose();
  means_ /= static_cast<double>(rows.size());
  Vector var = Vector::Zero(cols);
  for (int r : rows) {
    var += (m.row(r).transpose() - means_).cwiseAbs2();
  }
  var /= static_cast<double>(rows.size());
  for (Eigen::Index c = 0; c < cols; ++c) {
    const double sd = std::sqrt(var[c]);
    scales_[c] = sd > 1e-12 ? sd : 1.0;
  }
}

void ColumnStandardizer::apply(Matrix& m) const {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    m.row(r) = (m.row(r) - means_.transpose()).cwiseQuotient(
        scales_.transpose());
  }
}

}  // namespace tsfuse
