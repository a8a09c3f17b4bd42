#include "tsfuse/data_core.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tsfuse/errors.h"
#include "tsfuse/rng.h"

namespace tsfuse {

namespace {

bool is_separator(char c) {
  return c == '\t' || c == ',' || c == ' ' || c == '\r';
}

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_separator(line[i])) ++i;
    size_t j = i;
    while (j < line.size() && !is_separator(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// strtod accepts "nan"/"inf"; from_chars needs no locale.
bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

// "1", "1.0" and "1e0" name the same class.
std::string canonical_label(std::string_view tok) {
  double v;
  if (parse_double(tok, v) && std::isfinite(v)) {
    if (v == std::floor(v) && std::abs(v) < 1e15) {
      return fmt::format("{}", static_cast<long long>(v));
    }
    return fmt::format("{}", v);
  }
  return std::string(tok);
}

}  // namespace

std::vector<int> LabeledDataset::class_counts() const {
  std::vector<int> counts(num_classes, 0);
  for (int y : labels) ++counts.at(y);
  return counts;
}

std::vector<int> FoldSplit::test_indices(int fold) const {
  std::vector<int> out;
  for (size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> FoldSplit::train_indices(int fold) const {
  std::vector<int> out;
  for (size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(static_cast<int>(i));
  }
  return out;
}

LabeledDataset load_ucr_text(const std::filesystem::path& path,
                             std::string name) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  LabeledDataset d;
  d.name = name.empty() ? path.stem().string() : std::move(name);
  std::map<std::string, int> ids;
  std::string line;
  size_t line_no = 0;
  size_t length = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    if (tokens.size() < 2) {
      throw FormatError(fmt::format("{}:{}: row has no values", path.string(),
                                    line_no));
    }
    std::vector<double> values;
    values.reserve(tokens.size() - 1);
    bool finite = true;
    for (size_t t = 1; t < tokens.size(); ++t) {
      double v;
      if (!parse_double(tokens[t], v)) {
        throw FormatError(fmt::format("{}:{}: unparseable token '{}'",
                                      path.string(), line_no, tokens[t]));
      }
      finite = finite && std::isfinite(v);
      values.push_back(v);
    }
    if (length == 0) {
      length = values.size();
    } else if (values.size() != length) {
      throw FormatError(fmt::format("{}:{}: ragged row of length {} (expected {})",
                                    path.string(), line_no, values.size(),
                                    length));
    }
    if (!finite) {
      spdlog::warn("{}:{}: dropping row with missing or non-finite values",
                   path.string(), line_no);
      continue;
    }
    const std::string label = canonical_label(tokens[0]);
    auto [it, inserted] = ids.try_emplace(label, static_cast<int>(ids.size()));
    if (inserted) d.class_names.push_back(label);
    d.labels.push_back(it->second);
    d.series.push_back(std::move(values));
  }
  d.num_classes = static_cast<int>(d.class_names.size());
  if (d.num_classes < 2) {
    throw DataError(fmt::format("{}: need at least 2 classes, found {}",
                                path.string(), d.num_classes));
  }
  return d;
}

void write_ucr_text(const LabeledDataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  for (size_t i = 0; i < d.size(); ++i) {
    out << d.class_names.at(d.labels[i]);
    for (double v : d.series[i]) out << '\t' << fmt::format("{:.17g}", v);
    out << '\n';
  }
}

void validate(const LabeledDataset& d) {
  if (d.series.size() != d.labels.size()) {
    throw DataError(d.name + ": series and labels differ in count");
  }
  if (d.num_classes < 2) throw DataError(d.name + ": fewer than 2 classes");
  if (d.length() < 3) throw DataError(d.name + ": series shorter than 3");
  std::vector<int> seen(d.num_classes, 0);
  for (size_t i = 0; i < d.size(); ++i) {
    if (d.series[i].size() != d.length()) {
      throw DataError(d.name + ": series of unequal length");
    }
    for (double v : d.series[i]) {
      if (!std::isfinite(v)) throw DataError(d.name + ": non-finite value");
    }
    if (d.labels[i] < 0 || d.labels[i] >= d.num_classes) {
      throw DataError(d.name + ": label out of range");
    }
    seen[d.labels[i]] = 1;
  }
  for (int c = 0; c < d.num_classes; ++c) {
    if (!seen[c]) throw DataError(fmt::format("{}: class {} absent", d.name, c));
  }
}

void z_normalize_inplace(std::vector<double>& x) {
  if (x.empty()) return;
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (sd < 1e-12) {
    std::fill(x.begin(), x.end(), 0.0);
    return;
  }
  for (double& v : x) v = (v - mean) / sd;
}

LabeledDataset z_normalize(const LabeledDataset& d) {
  LabeledDataset out = d;
  size_t constant = 0;
  for (auto& s : out.series) {
    z_normalize_inplace(s);
    if (!s.empty() && std::all_of(s.begin(), s.end(),
                                  [](double v) { return v == 0.0; })) {
      ++constant;
    }
  }
  if (constant > 0) {
    spdlog::warn("{}: {} constant series mapped to zeros", d.name, constant);
  }
  return out;
}

FoldSplit stratified_folds(const std::vector<int>& labels, int num_classes,
                           int k, uint64_t seed) {
  if (k < 2) throw ParamError("fold count must be at least 2");
  if (labels.size() < static_cast<size_t>(k)) {
    throw ParamError(fmt::format("cannot split {} samples into {} folds",
                                 labels.size(), k));
  }
  std::vector<std::vector<int>> members(num_classes);
  for (size_t i = 0; i < labels.size(); ++i) {
    members.at(labels[i]).push_back(static_cast<int>(i));
  }
  Rng rng(seed);
  FoldSplit split;
  split.k = k;
  split.fold_of.assign(labels.size(), -1);
  size_t position = 0;
  for (int c = 0; c < num_classes; ++c) {
    if (!members[c].empty() && members[c].size() < static_cast<size_t>(k)) {
      spdlog::warn("class {} has {} members, fewer than {} folds", c,
                   members[c].size(), k);
    }
    rng.shuffle(members[c]);
    for (int idx : members[c]) split.fold_of[idx] = position++ % k;
  }
  return split;
}

std::pair<LabeledDataset, FoldSplit> merge_and_fold(const LabeledDataset& train,
                                                    const LabeledDataset& test,
                                                    int k, uint64_t seed) {
  if (train.length() != test.length()) {
    throw DataError(fmt::format("{}: train length {} != test length {}",
                                train.name, train.length(), test.length()));
  }
  LabeledDataset merged = train;
  std::map<std::string, int> ids;
  for (int c = 0; c < train.num_classes; ++c) ids[train.class_names[c]] = c;
  for (size_t i = 0; i < test.size(); ++i) {
    const auto& label = test.class_names.at(test.labels[i]);
    auto it = ids.find(label);
    if (it == ids.end()) {
      throw DataError(fmt::format("{}: test label '{}' absent from train",
                                  train.name, label));
    }
    merged.series.push_back(test.series[i]);
    merged.labels.push_back(it->second);
  }
  FoldSplit split =
      stratified_folds(merged.labels, merged.num_classes, k, seed);
  return {std::move(merged), std::move(split)};
}

LabeledDataset subset(const LabeledDataset& d, const std::vector<int>& rows) {
  LabeledDataset out;
  out.name = d.name;
  out.num_classes = d.num_classes;
  out.class_names = d.class_names;
  out.series.reserve(rows.size());
  for (int r : rows) {
    out.series.push_back(d.series.at(r));
    out.labels.push_back(d.labels.at(r));
  }
  return out;
}

}  // namespace tsfuse
