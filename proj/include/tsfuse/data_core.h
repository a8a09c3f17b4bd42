#ifndef TSFUSE_DATA_CORE_H_
#define TSFUSE_DATA_CORE_H_

#include <filesystem>
#include <string>
#include <vector>

namespace tsfuse {

// A labeled collection of equal-length univariate series.
struct LabeledDataset {
  std::string name;
  std::vector<std::vector<double>> series;
  std::vector<int> labels;  // in [0, num_classes)
  int num_classes = 0;
  // Original label token of each class id, in first-seen order.
  std::vector<std::string> class_names;

  size_t size() const { return series.size(); }
  size_t length() const { return series.empty() ? 0 : series.front().size(); }
  std::vector<int> class_counts() const;
};

// Stratified k-fold assignment over the rows of a dataset.
struct FoldSplit {
  std::vector<int> fold_of;  // per-sample fold id in [0, k)
  int k = 0;

  std::vector<int> test_indices(int fold) const;
  std::vector<int> train_indices(int fold) const;
};

// Reads a UCR archive text file: one series per line, the class label first,
// values separated by tabs, commas or spaces. Labels are remapped to
// contiguous ids in first-seen order. Rows containing NaN or infinite values
// are dropped with a warning.
LabeledDataset load_ucr_text(const std::filesystem::path& path,
                             std::string name = {});

// Writes the same format back (tab separated, 17 significant digits).
void write_ucr_text(const LabeledDataset& d, const std::filesystem::path& path);

// Checks the structural invariants (equal lengths, label range, every class
// present, length >= 3). Throws DataError.
void validate(const LabeledDataset& d);

// Per-instance z-normalization with the population standard deviation.
// Constant series become all zeros.
LabeledDataset z_normalize(const LabeledDataset& d);
void z_normalize_inplace(std::vector<double>& x);

// Concatenates the archive's train and test splits (test labels are mapped
// through the train label names) and assigns stratified folds.
std::pair<LabeledDataset, FoldSplit> merge_and_fold(const LabeledDataset& train,
                                                    const LabeledDataset& test,
                                                    int k, uint64_t seed);

// Stratified fold assignment. Members of each class are shuffled under
// `seed`, classes are laid out in id order and positions are dealt to folds
// round-robin, which balances both per-class and total fold sizes.
FoldSplit stratified_folds(const std::vector<int>& labels, int num_classes,
                           int k, uint64_t seed);

// Selects rows of a dataset (labels and class metadata are kept).
LabeledDataset subset(const LabeledDataset& d, const std::vector<int>& rows);

}  // namespace tsfuse

#endif  // TSFUSE_DATA_CORE_H_
