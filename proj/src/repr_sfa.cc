#include "tsfuse/repr_sfa.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "tsfuse/errors.h"
#include "tsfuse/parallel.h"
#include "tsfuse/symbolic_bag.h"

namespace tsfuse::sfa {

namespace {

void check_config(const SfaConfig& cfg, size_t length) {
  if (cfg.window < 2 || cfg.word_length < 1) {
    throw ParamError("SFA window must be >= 2 and word length >= 1");
  }
  if (cfg.word_length > cfg.window) {
    throw ParamError(fmt::format("SFA word length {} exceeds window {}",
                                 cfg.word_length, cfg.window));
  }
  if (static_cast<size_t>(cfg.window) > length) {
    throw ParamError(fmt::format("SFA window {} exceeds series length {}",
                                 cfg.window, length));
  }
}

// Cos/sin table for the coefficients a truncated transform needs.
struct Twiddles {
  Twiddles(int n, int num_coeffs) : n(n), cos(num_coeffs * n), sin(num_coeffs * n) {
    for (int k = 0; k < num_coeffs; ++k) {
      for (int t = 0; t < n; ++t) {
        // Reduce k*t mod n first so the angle stays in [0, 2 pi).
        const double angle =
            2.0 * std::numbers::pi * static_cast<double>((k + 1) * t % n) / n;
        cos[k * n + t] = std::cos(angle);
        sin[k * n + t] = -std::sin(angle);
      }
    }
  }
  int n;
  std::vector<double> cos;
  std::vector<double> sin;
};

void truncated_from_table(std::span<const double> x, int w,
                          const Twiddles& tw, std::vector<double>& out) {
  out.assign(w, 0.0);
  for (int j = 0; j < w; ++j) {
    const int k = j / 2;
    const double* table = (j % 2 == 0 ? tw.cos.data() : tw.sin.data()) + k * tw.n;
    double acc = 0.0;
    for (int t = 0; t < tw.n; ++t) acc += x[t] * table[t];
    out[j] = acc;
  }
}

void normalize_window(std::span<const double> in, std::vector<double>& out) {
  const double n = static_cast<double>(in.size());
  double mean = 0.0;
  for (double v : in) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : in) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  out.resize(in.size());
  if (sd < 1e-8) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  for (size_t i = 0; i < in.size(); ++i) out[i] = (in[i] - mean) / sd;
}

double quantile_linear(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::string SfaConfig::key() const {
  return fmt::format("sfa_w{}_win{}_a{}", word_length, window, alphabet);
}

std::vector<std::complex<double>> full_dft(std::span<const double> x) {
  const size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (size_t t = 0; t < n; ++t) {
      const double angle =
          -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / n;
      acc += x[t] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

std::vector<double> truncated_dft(std::span<const double> window_values,
                                  int w) {
  if (w < 0 || static_cast<size_t>(w) > window_values.size()) {
    throw ParamError("truncated DFT length exceeds window");
  }
  const Twiddles tw(static_cast<int>(window_values.size()), (w + 1) / 2);
  std::vector<double> out;
  truncated_from_table(window_values, w, tw, out);
  return out;
}

McbBins fit_mcb(const std::vector<std::vector<double>>& coefficients,
                int alphabet) {
  if (alphabet < 2) throw ParamError("alphabet must be >= 2");
  if (coefficients.size() < static_cast<size_t>(alphabet)) {
    throw ParamError(fmt::format("MCB needs at least {} windows, got {}",
                                 alphabet, coefficients.size()));
  }
  const size_t w = coefficients.front().size();
  McbBins bins;
  bins.alphabet = alphabet;
  bins.breakpoints.assign(w, std::vector<double>(alphabet - 1));
  std::vector<double> column(coefficients.size());
  for (size_t c = 0; c < w; ++c) {
    for (size_t r = 0; r < coefficients.size(); ++r) {
      column[r] = coefficients[r].at(c);
    }
    std::sort(column.begin(), column.end());
    for (int i = 1; i < alphabet; ++i) {
      bins.breakpoints[c][i - 1] =
          quantile_linear(column, static_cast<double>(i) / alphabet);
    }
  }
  return bins;
}

int symbolize(double v, std::span<const double> breakpoints) {
  return static_cast<int>(
      std::lower_bound(breakpoints.begin(), breakpoints.end(), v) -
      breakpoints.begin());
}

std::vector<std::vector<double>> window_coefficients(std::span<const double> x,
                                                     const SfaConfig& cfg) {
  check_config(cfg, x.size());
  const Twiddles tw(cfg.window, (cfg.word_length + 1) / 2);
  std::vector<std::vector<double>> out;
  out.reserve(x.size() - cfg.window + 1);
  std::vector<double> normed;
  for (size_t start = 0; start + cfg.window <= x.size(); ++start) {
    normalize_window(x.subspan(start, cfg.window), normed);
    std::vector<double> coeffs;
    truncated_from_table(normed, cfg.word_length, tw, coeffs);
    out.push_back(std::move(coeffs));
  }
  return out;
}

std::vector<double> sfa_transform(std::span<const double> x,
                                  const SfaConfig& cfg, const McbBins& bins) {
  if (bins.word_length() != cfg.word_length || bins.alphabet != cfg.alphabet) {
    throw ParamError("MCB bins do not match the SFA configuration");
  }
  WordBag bag(cfg.alphabet, cfg.word_length);
  std::vector<int> word(cfg.word_length);
  for (const auto& coeffs : window_coefficients(x, cfg)) {
    for (int j = 0; j < cfg.word_length; ++j) {
      word[j] = symbolize(coeffs[j], bins.breakpoints[j]);
    }
    bag.add(word);
  }
  return bag.counts();
}

SfaFeatures sfa_feature_matrix(const LabeledDataset& d,
                               std::span<const int> train_rows,
                               const SfaConfig& cfg, int jobs) {
  check_config(cfg, d.length());
  std::vector<std::vector<double>> training;
  for (int r : train_rows) {
    auto coeffs = window_coefficients(d.series.at(r), cfg);
    std::move(coeffs.begin(), coeffs.end(), std::back_inserter(training));
  }
  SfaFeatures out;
  out.bins = fit_mcb(training, cfg.alphabet);
  const auto dim = bag_dimension(cfg.alphabet, cfg.word_length);
  out.matrix.extractor = "sfa";
  out.matrix.config = cfg.key();
  out.matrix.values = Matrix::Zero(static_cast<Eigen::Index>(d.size()),
                                   static_cast<Eigen::Index>(dim));
  parallel_for(d.size(), jobs, [&](size_t i) {
    const auto bag = sfa_transform(d.series[i], cfg, out.bins);
    out.matrix.values.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(bag.data(), dim);
  });
  l2_normalize_rows(out.matrix.values);
  return out;
}

}  // namespace tsfuse::sfa
