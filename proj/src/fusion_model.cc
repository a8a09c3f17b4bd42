#include "tsfuse/fusion_model.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "tsfuse/errors.h"

namespace tsfuse::fusion {

namespace {

// log(sigmoid(v)) without overflow or underflow.
double log_sigmoid(double v) {
  return v >= 0.0 ? -std::log1p(std::exp(-v)) : v - std::log1p(std::exp(v));
}

constexpr Eigen::Index kEvalChunk = 256;

void init_uniform(Dense& layer, int in, int out, double bound, Rng& rng) {
  layer.weight.resize(in, out);
  for (int r = 0; r < in; ++r) {
    for (int c = 0; c < out; ++c) layer.weight(r, c) = rng.uniform(-bound, bound);
  }
  layer.bias = Eigen::MatrixXd::Zero(1, out);
}

template <typename Derived>
Eigen::MatrixXd affine(const Eigen::MatrixBase<Derived>& x, const Dense& layer) {
  Eigen::MatrixXd out = x * layer.weight;
  out.rowwise() += layer.bias.row(0);
  return out;
}

Eigen::MatrixXd draw_mask(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                          double dropout) {
  const double keep_scale = 1.0 / (1.0 - dropout);
  Eigen::MatrixXd mask(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      mask(r, c) = rng.uniform() < dropout ? 0.0 : keep_scale;
    }
  }
  return mask;
}

void check_inputs(const GatedFusionModel& model, const BranchFeatures& x) {
  if (x.size() != model.input_dims().size()) {
    throw ModelError(fmt::format("model has {} branches, got {} feature sets",
                                 model.input_dims().size(), x.size()));
  }
  for (size_t b = 0; b < x.size(); ++b) {
    if (x[b].cols() != model.input_dims()[b]) {
      throw ModelError(fmt::format("branch {} expects {} features, got {}",
                                   b, model.input_dims()[b], x[b].cols()));
    }
    if (x[b].rows() != x[0].rows()) {
      throw ModelError("branch feature matrices differ in row count");
    }
  }
}

std::vector<Eigen::MatrixXd> snapshot(const GatedFusionModel& model) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& [name, t] : model.tensors()) out.push_back(*t);
  return out;
}

void restore(GatedFusionModel& model, const std::vector<Eigen::MatrixXd>& s) {
  auto tensors = model.tensors();
  for (size_t i = 0; i < tensors.size(); ++i) *tensors[i].second = s[i];
}

}  // namespace

std::string_view branch_name(Branch b) {
  switch (b) {
    case Branch::kSax:
      return "SAX";
    case Branch::kSfa:
      return "SFA";
    case Branch::kRocket:
      return "ROCKET";
  }
  return "?";
}

std::string_view family_name(Family f) {
  switch (f) {
    case Family::kF3:
      return "F3";
    case Family::kF2SR:
      return "F2_SR";
    case Family::kF2SFR:
      return "F2_SFR";
    case Family::kF2SS:
      return "F2_SS";
    case Family::kSoloSax:
      return "solo_SAX";
    case Family::kSoloSfa:
      return "solo_SFA";
    case Family::kSoloRocket:
      return "solo_ROCKET";
  }
  return "?";
}

const std::vector<Family>& all_families() {
  static const std::vector<Family> families{
      Family::kF3,      Family::kF2SR,    Family::kF2SFR,    Family::kF2SS,
      Family::kSoloSax, Family::kSoloSfa, Family::kSoloRocket};
  return families;
}

Family parse_family(std::string_view name) {
  for (Family f : all_families()) {
    if (family_name(f) == name) return f;
  }
  throw ConfigError(fmt::format("unknown model family '{}'", name));
}

std::vector<Branch> family_branches(Family f) {
  switch (f) {
    case Family::kF3:
      return {Branch::kSax, Branch::kSfa, Branch::kRocket};
    case Family::kF2SR:
      return {Branch::kSax, Branch::kRocket};
    case Family::kF2SFR:
      return {Branch::kSfa, Branch::kRocket};
    case Family::kF2SS:
      return {Branch::kSax, Branch::kSfa};
    case Family::kSoloSax:
      return {Branch::kSax};
    case Family::kSoloSfa:
      return {Branch::kSfa};
    case Family::kSoloRocket:
      return {Branch::kRocket};
  }
  return {};
}

void FusionConfig::validate() const {
  if (branches.empty() || branches.size() > 3) {
    throw ConfigError("a fusion model needs between 1 and 3 branches");
  }
  if (embed_dim < 1 || hidden_dim < 1) {
    throw ConfigError("embedding and hidden sizes must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ConfigError("dropout must lie in [0, 1)");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (batch_size < 1 || max_epochs < 1 || patience < 1) {
    throw ConfigError("batch size, max epochs and patience must be >= 1");
  }
}

GatedFusionModel::GatedFusionModel(FusionConfig cfg, std::vector<int> input_dims,
                                   int num_classes)
    : cfg_(std::move(cfg)),
      input_dims_(std::move(input_dims)),
      num_classes_(num_classes),
      rng_(derive_seed(cfg_.seed, {"train"})) {
  cfg_.validate();
  if (input_dims_.size() != cfg_.branches.size()) {
    throw ModelError("one input dimension per branch is required");
  }
  if (num_classes_ < 2) throw ModelError("need at least 2 classes");
  Rng init(derive_seed(cfg_.seed, {"init"}));
  const int d = cfg_.embed_dim;
  for (int in : input_dims_) {
    if (in < 1) throw ModelError("branch input dimension must be positive");
    Dense layer;
    init_uniform(layer, in, d, std::sqrt(6.0 / in), init);
    projections_.push_back(std::move(layer));
  }
  const int branches = num_branches();
  if (branches > 1) {
    init_uniform(gate_, branches * d, branches,
                 1.0 / std::sqrt(static_cast<double>(branches * d)), init);
  }
  init_uniform(hidden_, d, cfg_.hidden_dim, std::sqrt(6.0 / d), init);
  init_uniform(output_, cfg_.hidden_dim, num_classes_,
               1.0 / std::sqrt(static_cast<double>(cfg_.hidden_dim)), init);
}

std::vector<std::pair<std::string, Eigen::MatrixXd*>> GatedFusionModel::tensors() {
  std::vector<std::pair<std::string, Eigen::MatrixXd*>> out;
  for (size_t b = 0; b < projections_.size(); ++b) {
    const auto name = fmt::format("proj.{}", branch_name(cfg_.branches[b]));
    out.emplace_back(name + ".weight", &projections_[b].weight);
    out.emplace_back(name + ".bias", &projections_[b].bias);
  }
  if (num_branches() > 1) {
    out.emplace_back("gate.weight", &gate_.weight);
    out.emplace_back("gate.bias", &gate_.bias);
  }
  out.emplace_back("hidden.weight", &hidden_.weight);
  out.emplace_back("hidden.bias", &hidden_.bias);
  out.emplace_back("output.weight", &output_.weight);
  out.emplace_back("output.bias", &output_.bias);
  return out;
}

std::vector<std::pair<std::string, const Eigen::MatrixXd*>>
GatedFusionModel::tensors() const {
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> out;
  for (auto& [name, t] : const_cast<GatedFusionModel*>(this)->tensors()) {
    out.emplace_back(name, t);
  }
  return out;
}

void forward_batch(const GatedFusionModel& model, const BranchFeatures& x,
                   const Eigen::MatrixXd* dropout_mask, BatchCache& cache) {
  check_inputs(model, x);
  auto& m = const_cast<GatedFusionModel&>(model);
  const int branches = model.num_branches();
  const Eigen::Index n = x[0].rows();
  const int d = model.config().embed_dim;
  cache.pre.resize(branches);
  cache.emb.resize(branches);
  for (int b = 0; b < branches; ++b) {
    cache.pre[b] = affine(x[b], m.projections()[b]);
    cache.emb[b] = cache.pre[b].cwiseMax(0.0);
  }
  if (branches == 1) {
    cache.concat = cache.emb[0];
    cache.sig = Eigen::MatrixXd::Ones(n, 1);
    cache.gates = Eigen::MatrixXd::Ones(n, 1);
    cache.fused = cache.emb[0];
  } else {
    cache.concat.resize(n, branches * d);
    for (int b = 0; b < branches; ++b) {
      cache.concat.middleCols(b * d, d) = cache.emb[b];
    }
    const Eigen::MatrixXd gate_logits = affine(cache.concat, m.gate());
    cache.sig = gate_logits.unaryExpr(
        [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    // sigma_i / sum_j sigma_j evaluated as a softmax of log-sigmoids, so the
    // gates sum to 1 even when every sigmoid is tiny.
    cache.gates = gate_logits.unaryExpr(&log_sigmoid);
    for (Eigen::Index r = 0; r < n; ++r) {
      auto row = cache.gates.row(r);
      row.array() = (row.array() - row.maxCoeff()).exp();
      row /= row.sum();
    }
    cache.fused = Eigen::MatrixXd::Zero(n, d);
    for (int b = 0; b < branches; ++b) {
      cache.fused.array() +=
          cache.emb[b].array().colwise() * cache.gates.col(b).array();
    }
  }
  cache.hidden_pre = affine(cache.fused, m.hidden());
  cache.hidden_out = cache.hidden_pre.cwiseMax(0.0);
  if (dropout_mask != nullptr) {
    cache.mask = *dropout_mask;
    cache.hidden_out.array() *= cache.mask.array();
  } else {
    cache.mask.resize(0, 0);
  }
  cache.logits = affine(cache.hidden_out, m.output());
}

double cross_entropy(const Eigen::MatrixXd& logits, std::span<const int> y) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double top = logits.row(r).maxCoeff();
    const double lse =
        top + std::log((logits.row(r).array() - top).exp().sum());
    total += lse - logits(r, y[r]);
  }
  return total / static_cast<double>(logits.rows());
}

std::vector<Eigen::MatrixXd> backward_batch(const GatedFusionModel& model,
                                            const BranchFeatures& x,
                                            std::span<const int> y,
                                            const BatchCache& cache) {
  auto& m = const_cast<GatedFusionModel&>(model);
  const int branches = model.num_branches();
  const Eigen::Index n = cache.logits.rows();
  const int d = model.config().embed_dim;

  Eigen::MatrixXd dlogits(n, cache.logits.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    const double top = cache.logits.row(r).maxCoeff();
    Eigen::RowVectorXd p = (cache.logits.row(r).array() - top).exp();
    p /= p.sum();
    p[y[r]] -= 1.0;
    dlogits.row(r) = p / static_cast<double>(n);
  }
  const Eigen::MatrixXd g_out_w = cache.hidden_out.transpose() * dlogits;
  const Eigen::MatrixXd g_out_b = dlogits.colwise().sum();
  Eigen::MatrixXd dhidden = dlogits * m.output().weight.transpose();
  if (cache.mask.size() > 0) dhidden.array() *= cache.mask.array();
  dhidden.array() *= (cache.hidden_pre.array() > 0.0).cast<double>();
  const Eigen::MatrixXd g_hid_w = cache.fused.transpose() * dhidden;
  const Eigen::MatrixXd g_hid_b = dhidden.colwise().sum();
  const Eigen::MatrixXd dfused = dhidden * m.hidden().weight.transpose();

  std::vector<Eigen::MatrixXd> demb(branches);
  Eigen::MatrixXd g_gate_w;
  Eigen::MatrixXd g_gate_b;
  if (branches == 1) {
    demb[0] = dfused;
  } else {
    Eigen::MatrixXd dgates(n, branches);
    for (int b = 0; b < branches; ++b) {
      demb[b] = dfused.array().colwise() * cache.gates.col(b).array();
      dgates.col(b) = (dfused.array() * cache.emb[b].array()).rowwise().sum();
    }
    // With g = sigma / sum(sigma): dL/dz_i = (dg_i - <dg, g>) g_i (1 - sigma_i).
    const Eigen::ArrayXd weighted =
        (dgates.array() * cache.gates.array()).rowwise().sum();
    Eigen::MatrixXd dlogit_gate(n, branches);
    for (int b = 0; b < branches; ++b) {
      dlogit_gate.col(b) = ((dgates.col(b).array() - weighted) *
                            cache.gates.col(b).array() *
                            (1.0 - cache.sig.col(b).array()))
                               .matrix();
    }
    g_gate_w = cache.concat.transpose() * dlogit_gate;
    g_gate_b = dlogit_gate.colwise().sum();
    const Eigen::MatrixXd dconcat = dlogit_gate * m.gate().weight.transpose();
    for (int b = 0; b < branches; ++b) demb[b] += dconcat.middleCols(b * d, d);
  }

  std::vector<Eigen::MatrixXd> grads;
  for (int b = 0; b < branches; ++b) {
    const Eigen::MatrixXd dpre =
        demb[b].array() * (cache.pre[b].array() > 0.0).cast<double>();
    grads.push_back(x[b].transpose() * dpre);
    grads.push_back(dpre.colwise().sum());
  }
  if (branches > 1) {
    grads.push_back(std::move(g_gate_w));
    grads.push_back(std::move(g_gate_b));
  }
  grads.push_back(g_hid_w);
  grads.push_back(g_hid_b);
  grads.push_back(g_out_w);
  grads.push_back(g_out_b);
  return grads;
}

double batch_loss(const GatedFusionModel& model, const BranchFeatures& x,
                  std::span<const int> y, const Eigen::MatrixXd* dropout_mask) {
  BatchCache cache;
  forward_batch(model, x, dropout_mask, cache);
  return cross_entropy(cache.logits, y);
}

ForwardResult GatedFusionModel::forward(
    std::span<const Eigen::VectorXd> features) const {
  BranchFeatures x;
  for (const auto& f : features) x.push_back(f.transpose());
  BatchCache cache;
  forward_batch(*this, x, nullptr, cache);
  return {cache.logits.row(0).transpose(), cache.gates.row(0).transpose(),
          cache.fused.row(0).transpose()};
}

int argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

BranchFeatures gather_rows(const BranchFeatures& x, std::span<const int> rows) {
  BranchFeatures out;
  out.reserve(x.size());
  for (const auto& m : x) {
    Matrix sub(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (size_t i = 0; i < rows.size(); ++i) sub.row(i) = m.row(rows[i]);
    out.push_back(std::move(sub));
  }
  return out;
}

Evaluation evaluate(const GatedFusionModel& model, const BranchFeatures& x,
                    std::span<const int> y) {
  Evaluation ev;
  check_inputs(model, x);
  const Eigen::Index n = x.empty() ? 0 : x[0].rows();
  if (n == 0) return ev;
  double loss_sum = 0.0;
  int correct = 0;
  BatchCache cache;
  for (Eigen::Index start = 0; start < n; start += kEvalChunk) {
    const Eigen::Index len = std::min(kEvalChunk, n - start);
    BranchFeatures chunk;
    for (const auto& m : x) chunk.push_back(m.middleRows(start, len));
    forward_batch(model, chunk, nullptr, cache);
    if (!y.empty()) {
      loss_sum += cross_entropy(cache.logits, y.subspan(start, len)) *
                  static_cast<double>(len);
    }
    for (Eigen::Index r = 0; r < len; ++r) {
      Prediction p;
      p.label = argmax_lowest(cache.logits.row(r).transpose());
      p.gates = cache.gates.row(r).transpose();
      if (!y.empty() && p.label == y[start + r]) ++correct;
      ev.predictions.push_back(std::move(p));
    }
  }
  if (!y.empty()) {
    ev.loss = loss_sum / static_cast<double>(n);
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  }
  return ev;
}

Prediction predict(const GatedFusionModel& model,
                   std::span<const Eigen::VectorXd> features) {
  const auto out = model.forward(features);
  return {argmax_lowest(out.logits), out.gates};
}

std::vector<Prediction> predict_batch(const GatedFusionModel& model,
                                      const BranchFeatures& x) {
  return evaluate(model, x, {}).predictions;
}

bool EarlyStopping::observe(int epoch, double loss) {
  improved_ = best_epoch_ == 0 || loss < best_loss_;
  if (improved_) {
    best_epoch_ = epoch;
    best_loss_ = loss;
    stale_ = 0;
  } else {
    ++stale_;
  }
  return stale_ >= patience_;
}

TrainRecord train(GatedFusionModel& model, const BranchFeatures& train_x,
                  std::span<const int> train_y, const BranchFeatures& val_x,
                  std::span<const int> val_y, const FusionConfig& cfg) {
  cfg.validate();
  check_inputs(model, train_x);
  const auto n = static_cast<int>(train_x[0].rows());
  if (n == 0 || train_y.size() != static_cast<size_t>(n)) {
    throw ModelError("training labels do not match the feature rows");
  }
  for (int label : train_y) {
    if (label < 0 || label >= model.num_classes()) {
      throw ModelError(fmt::format("label {} out of range", label));
    }
  }
  const bool has_val = !val_x.empty() && val_x[0].rows() > 0;

  auto tensors = model.tensors();
  std::vector<Eigen::MatrixXd> adam_m, adam_v;
  for (const auto& [name, t] : tensors) {
    adam_m.push_back(Eigen::MatrixXd::Zero(t->rows(), t->cols()));
    adam_v.push_back(Eigen::MatrixXd::Zero(t->rows(), t->cols()));
  }
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;

  TrainRecord record;
  EarlyStopping stopper(cfg.patience);
  std::vector<Eigen::MatrixXd> best = snapshot(model);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> batch_y;
  BatchCache cache;
  record.stop_reason = "max_epochs";

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    model.rng().shuffle(order);
    double loss_sum = 0.0;
    int batches = 0;
    for (int start = 0; start < n; start += cfg.batch_size, ++batches) {
      const int len = std::min(cfg.batch_size, n - start);
      const std::span<const int> rows(order.data() + start, len);
      const BranchFeatures xb = gather_rows(train_x, rows);
      batch_y.resize(len);
      for (int i = 0; i < len; ++i) batch_y[i] = train_y[rows[i]];
      Eigen::MatrixXd mask;
      if (cfg.dropout > 0.0) {
        mask = draw_mask(model.rng(), len, model.config().hidden_dim,
                         cfg.dropout);
      }
      forward_batch(model, xb, cfg.dropout > 0.0 ? &mask : nullptr, cache);
      const double loss = cross_entropy(cache.logits, batch_y);
      if (!std::isfinite(loss)) throw TrainingDiverged(epoch, batches);
      loss_sum += loss;
      const auto grads = backward_batch(model, xb, batch_y, cache);
      beta1_pow *= kBeta1;
      beta2_pow *= kBeta2;
      const double lr_t =
          cfg.learning_rate * std::sqrt(1.0 - beta2_pow) / (1.0 - beta1_pow);
      const double eps_t = kEps * std::sqrt(1.0 - beta2_pow);
      for (size_t t = 0; t < tensors.size(); ++t) {
        adam_m[t] = kBeta1 * adam_m[t] + (1.0 - kBeta1) * grads[t];
        adam_v[t] = kBeta2 * adam_v[t] +
                    (1.0 - kBeta2) * grads[t].cwiseAbs2();
        tensors[t].second->array() -=
            lr_t * adam_m[t].array() / (adam_v[t].array().sqrt() + eps_t);
      }
    }
    record.train_loss.push_back(loss_sum / batches);
    const Evaluation ev = has_val ? evaluate(model, val_x, val_y)
                                  : evaluate(model, train_x, train_y);
    if (!std::isfinite(ev.loss)) throw TrainingDiverged(epoch, batches);
    record.val_loss.push_back(ev.loss);
    record.val_accuracy.push_back(ev.accuracy);
    const bool stop = stopper.observe(epoch, ev.loss);
    if (stopper.improved_last()) best = snapshot(model);
    if (stop) {
      record.stop_reason = "early_stop";
      break;
    }
  }
  restore(model, best);
  record.selected_epoch = stopper.best_epoch();
  return record;
}

double analytic_gradient_check(GatedFusionModel& model,
                               const BranchFeatures& x,
                               std::span<const int> y) {
  constexpr double h = 1e-5;
  const Eigen::Index n = x.at(0).rows();
  Eigen::MatrixXd mask;
  const Eigen::MatrixXd* mask_ptr = nullptr;
  if (model.config().dropout > 0.0) {
    Rng rng(derive_seed(model.config().seed, {"gradcheck"}));
    mask = draw_mask(rng, n, model.config().hidden_dim, model.config().dropout);
    mask_ptr = &mask;
  }
  BatchCache cache;
  forward_batch(model, x, mask_ptr, cache);
  const auto grads = backward_batch(model, x, y, cache);
  auto tensors = model.tensors();
  double worst = 0.0;
  for (size_t t = 0; t < tensors.size(); ++t) {
    Eigen::MatrixXd& param = *tensors[t].second;
    for (Eigen::Index i = 0; i < param.size(); ++i) {
      const double saved = param.data()[i];
      param.data()[i] = saved + h;
      const double up = batch_loss(model, x, y, mask_ptr);
      param.data()[i] = saved - h;
      const double down = batch_loss(model, x, y, mask_ptr);
      param.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grads[t].data()[i];
      const double denom =
          std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace tsfuse::fusion
