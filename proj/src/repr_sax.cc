#include "tsfuse/repr_sax.h"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "tsfuse/errors.h"
#include "tsfuse/parallel.h"
#include "tsfuse/symbolic_bag.h"

namespace tsfuse::sax {

std::string SaxConfig::key() const {
  return fmt::format("sax_w{}_f{}_a{}", word_length, frame, alphabet);
}

std::vector<double> paa(std::span<const double> x, int num_segments) {
  if (num_segments <= 0) throw ParamError("PAA needs a positive segment count");
  const auto n = static_cast<int64_t>(x.size());
  if (num_segments > n) {
    throw ParamError(fmt::format("PAA: {} segments exceed length {}",
                                 num_segments, n));
  }
  const int64_t s = num_segments;
  std::vector<double> out(num_segments, 0.0);
  if (n % s == 0) {
    const int64_t span = n / s;
    for (int64_t j = 0; j < s; ++j) {
      double sum = 0.0;
      for (int64_t i = j * span; i < (j + 1) * span; ++i) sum += x[i];
      out[j] = sum / static_cast<double>(span);
    }
    return out;
  }
  // On a grid scaled by s, sample i covers [i*s, (i+1)*s) and segment j
  // covers [j*n, (j+1)*n); overlaps are integers.
  for (int64_t j = 0; j < s; ++j) {
    const int64_t lo = j * n;
    const int64_t hi = (j + 1) * n;
    double sum = 0.0;
    for (int64_t i = lo / s; i < n && i * s < hi; ++i) {
      const int64_t overlap = std::min(hi, (i + 1) * s) - std::max(lo, i * s);
      if (overlap > 0) sum += static_cast<double>(overlap) * x[i];
    }
    out[j] = sum / static_cast<double>(n);
  }
  return out;
}

std::vector<double> gaussian_breakpoints(int alphabet) {
  if (alphabet < 2) throw ParamError("alphabet must be >= 2");
  const boost::math::normal_distribution<double> normal;
  std::vector<double> out;
  out.reserve(alphabet - 1);
  for (int i = 1; i < alphabet; ++i) {
    if (2 * i == alphabet) {
      out.push_back(0.0);
    } else {
      out.push_back(boost::math::quantile(
          normal, static_cast<double>(i) / static_cast<double>(alphabet)));
    }
  }
  return out;
}

int symbolize(double v, std::span<const double> breakpoints) {
  return static_cast<int>(
      std::upper_bound(breakpoints.begin(), breakpoints.end(), v) -
      breakpoints.begin());
}

namespace {

std::vector<double> sax_bag(std::span<const double> x, const SaxConfig& cfg,
                            std::span<const double> breakpoints) {
  const int window = cfg.window();
  WordBag bag(cfg.alphabet, cfg.word_length);
  std::vector<int> word(cfg.word_length);
  std::vector<double> segment_sums(cfg.word_length);
  const double inv_window = 1.0 / window;
  const double inv_frame = 1.0 / cfg.frame;
  const size_t last = x.size() - window;
  for (size_t start = 0; start <= last; ++start) {
    const auto win = x.subspan(start, window);
    double mean = 0.0;
    for (double v : win) mean += v;
    mean *= inv_window;
    double var = 0.0;
    for (double v : win) var += (v - mean) * (v - mean);
    var *= inv_window;
    const double sd = std::sqrt(std::max(var, 0.0));
    if (sd < 1e-8) {
      std::fill(word.begin(), word.end(), cfg.alphabet / 2);
    } else {
      for (int s = 0; s < cfg.word_length; ++s) {
        double seg = 0.0;
        const size_t base = start + static_cast<size_t>(s) * cfg.frame;
        for (int i = 0; i < cfg.frame; ++i) seg += x[base + i];
        word[s] = symbolize((seg * inv_frame - mean) / sd, breakpoints);
      }
    }
    bag.add(word);
  }
  return bag.counts();
}

}  // namespace

std::vector<double> sax_transform(std::span<const double> x,
                                  const SaxConfig& cfg,
                                  const std::string& dataset_name) {
  if (cfg.word_length < 1 || cfg.frame < 1) {
    throw ParamError("SAX word length and frame must be positive");
  }
  if (static_cast<size_t>(cfg.window()) > x.size()) {
    throw ParamError(fmt::format(
        "SAX window {} (word {} x frame {}) exceeds series length {}{}",
        cfg.window(), cfg.word_length, cfg.frame, x.size(),
        dataset_name.empty() ? "" : " in dataset " + dataset_name));
  }
  const auto breakpoints = gaussian_breakpoints(cfg.alphabet);
  return sax_bag(x, cfg, breakpoints);
}

FeatureMatrix sax_feature_matrix(const LabeledDataset& d, const SaxConfig& cfg,
                                 int jobs) {
  FeatureMatrix fm;
  fm.extractor = "sax";
  fm.config = cfg.key();
  const auto dim = bag_dimension(cfg.alphabet, cfg.word_length);
  fm.values = Matrix::Zero(static_cast<Eigen::Index>(d.size()),
                           static_cast<Eigen::Index>(dim));
  if (d.size() > 0) sax_transform(d.series[0], cfg, d.name);  // validates
  parallel_for(d.size(), jobs, [&](size_t i) {
    const auto bag = sax_transform(d.series[i], cfg, d.name);
    fm.values.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(bag.data(), dim);
  });
  l2_normalize_rows(fm.values);
  return fm;
}

}  // namespace tsfuse::sax
