#include "tsfuse/case_study.h"

#include <algorithm>

#include "tsfuse/errors.h"
#include "tsfuse/harness/csv.h"

namespace tsfuse::case_study {

std::string_view status_name(Status s) {
  switch (s) {
    case Status::kBothCorrect: return "both_correct";
    case Status::kRescued: return "rescued";
    case Status::kHurt: return "hurt";
    case Status::kBothWrong: return "both_wrong";
  }
  return "unknown";
}

std::vector<SampleStatus> classify_samples(
    const std::vector<int>& baseline_preds,
    const std::vector<int>& fusion_preds, const std::vector<int>& labels,
    const std::vector<std::vector<double>>& gates) {
  const size_t n = labels.size();
  if (baseline_preds.size() != n || fusion_preds.size() != n ||
      (!gates.empty() && gates.size() != n)) {
    throw ParamError("case study inputs differ in length");
  }
  std::vector<SampleStatus> out(n);
  for (size_t i = 0; i < n; ++i) {
    auto& s = out[i];
    s.index = static_cast<int>(i);
    s.label = labels[i];
    s.baseline_pred = baseline_preds[i];
    s.fusion_pred = fusion_preds[i];
    if (!gates.empty()) s.gates = gates[i];
    const bool b = s.baseline_pred == s.label;
    const bool f = s.fusion_pred == s.label;
    s.status = b ? (f ? Status::kBothCorrect : Status::kHurt)
                 : (f ? Status::kRescued : Status::kBothWrong);
  }
  return out;
}

StatusCounts count_statuses(const std::vector<SampleStatus>& s) {
  StatusCounts c;
  for (const auto& x : s) {
    switch (x.status) {
      case Status::kBothCorrect: ++c.both_correct; break;
      case Status::kRescued: ++c.rescued; break;
      case Status::kHurt: ++c.hurt; break;
      case Status::kBothWrong: ++c.both_wrong; break;
    }
  }
  return c;
}

std::vector<std::vector<int>> confusion_delta(
    const std::vector<int>& baseline_preds,
    const std::vector<int>& fusion_preds, const std::vector<int>& labels,
    int num_classes) {
  if (baseline_preds.size() != labels.size() ||
      fusion_preds.size() != labels.size()) {
    throw ParamError("confusion inputs differ in length");
  }
  std::vector<std::vector<int>> d(num_classes, std::vector<int>(num_classes, 0));
  for (size_t i = 0; i < labels.size(); ++i) {
    d.at(labels[i]).at(fusion_preds[i]) += 1;
    d.at(labels[i]).at(baseline_preds[i]) -= 1;
  }
  return d;
}

std::optional<std::vector<double>> gate_shift(
    const std::vector<SampleStatus>& statuses) {
  std::vector<double> rescued, correct;
  int n_rescued = 0, n_correct = 0;
  for (const auto& s : statuses) {
    std::vector<double>* acc = nullptr;
    if (s.status == Status::kRescued) {
      acc = &rescued;
      ++n_rescued;
    } else if (s.status == Status::kBothCorrect) {
      acc = &correct;
      ++n_correct;
    } else {
      continue;
    }
    if (acc->empty()) acc->assign(s.gates.size(), 0.0);
    for (size_t b = 0; b < s.gates.size(); ++b) (*acc)[b] += s.gates[b];
  }
  if (n_rescued == 0 || n_correct == 0 || rescued.empty()) return std::nullopt;
  std::vector<double> shift(rescued.size());
  for (size_t b = 0; b < shift.size(); ++b) {
    shift[b] = rescued[b] / n_rescued - correct[b] / n_correct;
  }
  return shift;
}

std::vector<std::vector<GateBin>> gate_bin_profile(
    const std::vector<SampleStatus>& statuses, int bins) {
  if (bins < 1) throw ParamError("gate profile needs at least one bin");
  if (statuses.empty()) return {};
  const size_t branches = statuses.front().gates.size();
  std::vector<std::vector<GateBin>> out(branches, std::vector<GateBin>(bins));
  std::vector<std::vector<int>> net(branches, std::vector<int>(bins, 0));
  for (const auto& s : statuses) {
    const int delta = s.status == Status::kRescued ? 1
                      : s.status == Status::kHurt  ? -1
                                                   : 0;
    for (size_t b = 0; b < branches; ++b) {
      const int bin =
          std::clamp(static_cast<int>(s.gates.at(b) * bins), 0, bins - 1);
      ++out[b][bin].count;
      net[b][bin] += delta;
    }
  }
  const double n = static_cast<double>(statuses.size());
  for (size_t b = 0; b < branches; ++b) {
    for (int k = 0; k < bins; ++k) {
      auto& g = out[b][k];
      g.lo = static_cast<double>(k) / bins;
      g.hi = static_cast<double>(k + 1) / bins;
      g.mass = g.count / n;
      g.net_rate = g.count > 0 ? static_cast<double>(net[b][k]) / g.count : 0.0;
    }
  }
  return out;
}

void write_status_csv(const std::vector<SampleStatus>& s,
                      const std::vector<std::string>& branch_names,
                      const std::filesystem::path& path) {
  csv::Table t;
  t.header = {"index", "label", "baseline_pred", "fusion_pred", "status"};
  for (const auto& b : branch_names) t.header.push_back("gate_" + b);
  for (const auto& x : s) {
    csv::Row r{std::to_string(x.index), std::to_string(x.label),
               std::to_string(x.baseline_pred), std::to_string(x.fusion_pred),
               std::string(status_name(x.status))};
    for (size_t b = 0; b < branch_names.size(); ++b) {
      r.push_back(b < x.gates.size() ? csv::num(x.gates[b]) : "");
    }
    t.rows.push_back(std::move(r));
  }
  csv::write(path, t);
}

void write_confusion_csv(const std::vector<std::vector<int>>& delta,
                         const std::filesystem::path& path) {
  csv::Table t;
  t.header = {"true"};
  for (size_t c = 0; c < delta.size(); ++c) {
    t.header.push_back("pred_" + std::to_string(c));
  }
  for (size_t r = 0; r < delta.size(); ++r) {
    csv::Row row{std::to_string(r)};
    for (int v : delta[r]) row.push_back(std::to_string(v));
    t.rows.push_back(std::move(row));
  }
  csv::write(path, t);
}

void write_gate_profile_csv(const std::vector<std::vector<GateBin>>& profile,
                            const std::vector<std::string>& branch_names,
                            const std::filesystem::path& path) {
  csv::Table t;
  t.header = {"branch", "bin_lo", "bin_hi", "count", "mass", "net_rate"};
  for (size_t b = 0; b < profile.size(); ++b) {
    for (const auto& g : profile[b]) {
      t.rows.push_back({b < branch_names.size() ? branch_names[b]
                                                : std::to_string(b),
                        csv::num(g.lo), csv::num(g.hi), std::to_string(g.count),
                        csv::num(g.mass), csv::num(g.net_rate)});
    }
  }
  csv::write(path, t);
}

}  // namespace tsfuse::case_study
