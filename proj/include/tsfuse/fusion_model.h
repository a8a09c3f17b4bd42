#ifndef TSFUSE_FUSION_MODEL_H_
#define TSFUSE_FUSION_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tsfuse/feature_matrix.h"
#include "tsfuse/rng.h"

namespace tsfuse::fusion {

enum class Branch : uint8_t { kSax = 0, kSfa = 1, kRocket = 2 };

std::string_view branch_name(Branch b);

// Model families: full three-way fusion, the two-way ablations and the solo
// baselines that share the same head.
enum class Family : uint8_t {
  kF3,
  kF2SR,
  kF2SFR,
  kF2SS,
  kSoloSax,
  kSoloSfa,
  kSoloRocket,
};

std::string_view family_name(Family f);
Family parse_family(std::string_view name);  // throws ConfigError
std::vector<Branch> family_branches(Family f);
const std::vector<Family>& all_families();

struct FusionConfig {
  std::vector<Branch> branches{Branch::kSax, Branch::kSfa, Branch::kRocket};
  int embed_dim = 64;
  int hidden_dim = 64;
  double dropout = 0.2;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 25;
  int patience = 5;
  uint64_t seed = 42;

  void validate() const;  // throws ConfigError
};

// Per-branch feature rows fed to a model: one matrix per branch, rows are
// samples, in the order of FusionConfig::branches.
using BranchFeatures = std::vector<Matrix>;

// Affine layer y = x * weight + bias; weight is (in x out), bias is 1 x out.
struct Dense {
  Eigen::MatrixXd weight;
  Eigen::MatrixXd bias;
};

struct ForwardResult {
  Eigen::VectorXd logits;
  Eigen::VectorXd gates;
  Eigen::VectorXd fused;
};

struct Prediction {
  int label = 0;  // argmax of the logits, lowest index on ties
  Eigen::VectorXd gates;
};

// Branch projections (affine + ReLU), a sigmoid-normalized gate over the
// concatenated embeddings, a gate-weighted sum, then hidden affine + ReLU +
// dropout + output affine. Single-branch models have no gate parameters and
// a gate fixed at 1.
class GatedFusionModel {
 public:
  GatedFusionModel(FusionConfig cfg, std::vector<int> input_dims,
                   int num_classes);

  const FusionConfig& config() const { return cfg_; }
  const std::vector<int>& input_dims() const { return input_dims_; }
  int num_classes() const { return num_classes_; }
  int num_branches() const { return static_cast<int>(cfg_.branches.size()); }

  // Inference on a single sample (dropout inactive).
  ForwardResult forward(std::span<const Eigen::VectorXd> features) const;

  // Named parameter tensors in a fixed order.
  std::vector<std::pair<std::string, Eigen::MatrixXd*>> tensors();
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> tensors() const;

  std::vector<Dense>& projections() { return projections_; }
  Dense& gate() { return gate_; }
  Dense& hidden() { return hidden_; }
  Dense& output() { return output_; }

  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

 private:
  FusionConfig cfg_;
  std::vector<int> input_dims_;
  int num_classes_;
  std::vector<Dense> projections_;
  Dense gate_;
  Dense hidden_;
  Dense output_;
  Rng rng_;  // dropout and shuffling stream; persisted in checkpoints
};

// Intermediate values of a batched forward pass, kept for backpropagation.
struct BatchCache {
  std::vector<Eigen::MatrixXd> pre;  // per branch, n x d
  std::vector<Eigen::MatrixXd> emb;
  Eigen::MatrixXd concat;            // n x (B d)
  Eigen::MatrixXd sig;               // n x B sigmoid of gate logits
  Eigen::MatrixXd gates;             // n x B
  Eigen::MatrixXd fused;             // n x d
  Eigen::MatrixXd hidden_pre;        // n x h
  Eigen::MatrixXd hidden_out;        // after ReLU and dropout
  Eigen::MatrixXd mask;              // dropout multipliers (empty at eval)
  Eigen::MatrixXd logits;            // n x C
};

// Batched forward. `dropout_mask`, when given, multiplies the hidden ReLU
// output (entries are 0 or 1/(1-p)).
void forward_batch(const GatedFusionModel& model, const BranchFeatures& x,
                   const Eigen::MatrixXd* dropout_mask, BatchCache& cache);

// Mean cross-entropy of cached logits against labels.
double cross_entropy(const Eigen::MatrixXd& logits, std::span<const int> y);

// Gradients of the mean cross-entropy w.r.t. every tensor, parallel to
// GatedFusionModel::tensors().
std::vector<Eigen::MatrixXd> backward_batch(const GatedFusionModel& model,
                                            const BranchFeatures& x,
                                            std::span<const int> y,
                                            const BatchCache& cache);

// Loss of a batch under a fixed dropout mask (nullptr disables dropout).
double batch_loss(const GatedFusionModel& model, const BranchFeatures& x,
                  std::span<const int> y, const Eigen::MatrixXd* dropout_mask);

struct TrainRecord {
  std::vector<double> train_loss;  // mean batch loss per epoch
  std::vector<double> val_loss;
  std::vector<double> val_accuracy;
  int selected_epoch = 0;  // 1-based
  std::string stop_reason;  // "early_stop" or "max_epochs"
};

// Tracks the best validation loss and decides when to stop.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  // Records a completed epoch (1-based). Returns true when training should
  // stop: `patience` consecutive epochs without strict improvement.
  bool observe(int epoch, double loss);
  bool improved_last() const { return improved_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  int patience_;
  int best_epoch_ = 0;
  double best_loss_ = 0.0;
  int stale_ = 0;
  bool improved_ = false;
};

// Mini-batch Adam (beta1 0.9, beta2 0.999, eps 1e-8) on mean cross-entropy
// with seeded shuffling, early stopping on validation loss and restoration
// of the best epoch's parameters. An empty validation set falls back to the
// training loss. Throws TrainingDiverged on a non-finite loss.
TrainRecord train(GatedFusionModel& model, const BranchFeatures& train_x,
                  std::span<const int> train_y, const BranchFeatures& val_x,
                  std::span<const int> val_y, const FusionConfig& cfg);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<Prediction> predictions;
};

Evaluation evaluate(const GatedFusionModel& model, const BranchFeatures& x,
                    std::span<const int> y);

Prediction predict(const GatedFusionModel& model,
                   std::span<const Eigen::VectorXd> features);
std::vector<Prediction> predict_batch(const GatedFusionModel& model,
                                      const BranchFeatures& x);

// First index of the maximum.
int argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& v);

// Compares backpropagated gradients with central differences (h = 1e-5) on
// every parameter, under one fixed dropout mask. Relative error per entry is
// |a - n| / max(|a| + |n|, 1e-6); returns the maximum.
double analytic_gradient_check(GatedFusionModel& model,
                               const BranchFeatures& x, std::span<const int> y);

// Binary checkpoint; layout in docs/checkpoint_format.md.
void save_checkpoint(const GatedFusionModel& model,
                     const std::filesystem::path& path);
GatedFusionModel load_checkpoint(const std::filesystem::path& path);

// Copies selected rows of every branch matrix.
BranchFeatures gather_rows(const BranchFeatures& x, std::span<const int> rows);

}  // namespace tsfuse::fusion

#endif  // TSFUSE_FUSION_MODEL_H_
