#ifndef TSFUSE_REPR_SAX_H_
#define TSFUSE_REPR_SAX_H_

#include <span>
#include <string>
#include <vector>

#include "tsfuse/data_core.h"
#include "tsfuse/feature_matrix.h"

namespace tsfuse::sax {

struct SaxConfig {
  int word_length = 6;
  int frame = 10;  // samples per PAA segment
  int alphabet = 4;

  int window() const { return word_length * frame; }
  std::string key() const;
};

// Piecewise aggregate approximation. When the length is not a multiple of
// `num_segments`, boundary samples are split fractionally so every segment
// averages an equal real-valued span.
std::vector<double> paa(std::span<const double> x, int num_segments);

// Standard normal quantiles at i/a for i = 1..a-1.
std::vector<double> gaussian_breakpoints(int alphabet);

// Number of breakpoints <= v.
int symbolize(double v, std::span<const double> breakpoints);

// Bag of numerosity-reduced SAX words from stride-1 sliding windows.
// `dataset_name` only labels the error raised for oversized windows.
std::vector<double> sax_transform(std::span<const double> x,
                                  const SaxConfig& cfg,
                                  const std::string& dataset_name = {});

// One row per series, each row L2-normalized.
FeatureMatrix sax_feature_matrix(const LabeledDataset& d, const SaxConfig& cfg,
                                 int jobs = 1);

}  // namespace tsfuse::sax

#endif  // TSFUSE_REPR_SAX_H_
