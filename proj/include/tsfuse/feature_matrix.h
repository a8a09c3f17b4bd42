#ifndef TSFUSE_FEATURE_MATRIX_H_
#define TSFUSE_FEATURE_MATRIX_H_

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tsfuse {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Per-sample feature vectors from one extractor, one row per series.
struct FeatureMatrix {
  Matrix values;
  std::string extractor;  // "sax", "sfa" or "rocket"
  std::string config;     // extractor configuration key

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

// Scales every non-zero row to unit Euclidean norm; all-zero rows are kept.
void l2_normalize_rows(Matrix& m);

// Per-column z-scoring with statistics frozen from a subset of rows.
class ColumnStandardizer {
 public:
  // Columns with zero variance over `rows` are centered but not scaled.
  void fit(const Matrix& m, std::span<const int> rows);
  void apply(Matrix& m) const;

  const Vector& means() const { return means_; }
  const Vector& scales() const { return scales_; }

 private:
  Vector means_;
  Vector scales_;
};

}  // namespace tsfuse

#endif  // TSFUSE_FEATURE_MATRIX_H_
