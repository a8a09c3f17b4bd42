#ifndef TSFUSE_CASE_STUDY_H_
#define TSFUSE_CASE_STUDY_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tsfuse::case_study {

enum class Status { kBothCorrect, kRescued, kHurt, kBothWrong };

std::string_view status_name(Status s);

struct SampleStatus {
  int index = 0;
  int label = 0;
  int baseline_pred = 0;
  int fusion_pred = 0;
  std::vector<double> gates;  // fusion gates, one per branch
  Status status = Status::kBothCorrect;
};

std::vector<SampleStatus> classify_samples(
    const std::vector<int>& baseline_preds,
    const std::vector<int>& fusion_preds, const std::vector<int>& labels,
    const std::vector<std::vector<double>>& gates);

struct StatusCounts {
  int both_correct = 0;
  int rescued = 0;
  int hurt = 0;
  int both_wrong = 0;
};

StatusCounts count_statuses(const std::vector<SampleStatus>& s);

// confusion(fusion) - confusion(baseline), row = true label.
std::vector<std::vector<int>> confusion_delta(
    const std::vector<int>& baseline_preds,
    const std::vector<int>& fusion_preds, const std::vector<int>& labels,
    int num_classes);

// Mean gate on rescued minus mean gate on both-correct samples. Empty when
// either group is empty.
std::optional<std::vector<double>> gate_shift(
    const std::vector<SampleStatus>& statuses);

struct GateBin {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
  double mass = 0.0;      // count / N
  double net_rate = 0.0;  // (rescued - hurt) / count; 0 for empty bins
};

// Per branch, equal-width bins of the gate value over [0, 1].
std::vector<std::vector<GateBin>> gate_bin_profile(
    const std::vector<SampleStatus>& statuses, int bins = 10);

void write_status_csv(const std::vector<SampleStatus>& s,
                      const std::vector<std::string>& branch_names,
                      const std::filesystem::path& path);
void write_confusion_csv(const std::vector<std::vector<int>>& delta,
                         const std::filesystem::path& path);
void write_gate_profile_csv(const std::vector<std::vector<GateBin>>& profile,
                            const std::vector<std::string>& branch_names,
                            const std::filesystem::path& path);

}  // namespace tsfuse::case_study

#endif  // TSFUSE_CASE_STUDY_H_
