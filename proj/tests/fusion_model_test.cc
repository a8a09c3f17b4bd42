#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "tsfuse/errors.h"
#include "tsfuse/fusion_model.h"
#include "tsfuse/rng.h"

using namespace tsfuse;
using namespace tsfuse::fusion;

namespace {

FusionConfig tiny_config(Family f, uint64_t seed) {
  FusionConfig cfg;
  cfg.branches = family_branches(f);
  cfg.embed_dim = 5;
  cfg.hidden_dim = 6;
  cfg.dropout = 0.3;
  cfg.seed = seed;
  return cfg;
}

BranchFeatures random_features(int branches, int n, const std::vector<int>& dims,
                               Rng& rng) {
  BranchFeatures x;
  for (int b = 0; b < branches; ++b) {
    Matrix m(n, dims[b]);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    x.push_back(m);
  }
  return x;
}

// Two 4-dim Gaussian blobs whose means differ by 6 sd along every axis.
void blobs(int n, Rng& rng, BranchFeatures& x, std::vector<int>& y, int branches) {
  Matrix m(n, 4);
  y.resize(n);
  for (int i = 0; i < n; ++i) {
    y[i] = i % 2;
    for (int j = 0; j < 4; ++j) m(i, j) = rng.normal() + (y[i] ? 3.0 : -3.0);
  }
  x.assign(branches, m);
}

// Fresh models start with zero biases; a dead embedding row then sits exactly
// on the hidden ReLU kink, where finite differences are one-sided.
void randomize_biases(GatedFusionModel& model, Rng& rng) {
  for (auto& [name, t] : model.tensors()) {
    if (name.ends_with(".bias")) {
      for (Eigen::Index i = 0; i < t->size(); ++i) t->data()[i] = 0.2 * rng.normal();
    }
  }
}

}  // namespace

TEST_CASE("family names roundtrip") {
  for (Family f : all_families()) CHECK(parse_family(family_name(f)) == f);
  CHECK(all_families().size() == 7);
  CHECK(family_branches(Family::kF3).size() == 3);
  CHECK(family_branches(Family::kF2SR) ==
        std::vector<Branch>{Branch::kSax, Branch::kRocket});
  CHECK(family_branches(Family::kSoloRocket) == std::vector<Branch>{Branch::kRocket});
  CHECK_THROWS_AS(parse_family("F4"), ConfigError);
}

TEST_CASE("config validation") {
  FusionConfig cfg;
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.branches.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.embed_dim = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  FusionConfig{}.validate();
}

TEST_CASE("gate contract across families") {
  Rng rng(77);
  for (Family f : all_families()) {
    const auto cfg = tiny_config(f, 5);
    const int nb = static_cast<int>(cfg.branches.size());
    std::vector<int> dims(nb);
    for (int b = 0; b < nb; ++b) dims[b] = 3 + b;
    GatedFusionModel model(cfg, dims, 3);
    for (int t = 0; t < 200; ++t) {
      std::vector<Eigen::VectorXd> feats(nb);
      for (int b = 0; b < nb; ++b) {
        feats[b] = Eigen::VectorXd(dims[b]);
        for (auto& v : feats[b]) v = 3 * rng.normal();
      }
      const auto r = model.forward(feats);
      CHECK(r.logits.size() == 3);
      CHECK(r.fused.size() == 5);
      REQUIRE(r.gates.size() == nb);
      CHECK(std::abs(r.gates.sum() - 1.0) < 1e-6);
      CHECK(r.gates.minCoeff() >= 0.0);
      CHECK(r.gates.maxCoeff() <= 1.0);
      if (nb == 1) CHECK(r.gates[0] == 1.0);
    }
  }
}

TEST_CASE("equal gate logits give uniform gates") {
  auto cfg = tiny_config(Family::kF3, 1);
  GatedFusionModel model(cfg, {2, 2, 2}, 2);
  model.gate().weight.setZero();
  model.gate().bias.setConstant(0.4);
  std::vector<Eigen::VectorXd> feats(3, Eigen::VectorXd::Ones(2));
  const auto r = model.forward(feats);
  for (int b = 0; b < 3; ++b) CHECK(r.gates[b] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("gates stay normalized when every sigmoid underflows") {
  auto cfg = tiny_config(Family::kF3, 1);
  GatedFusionModel model(cfg, {2, 2, 2}, 2);
  model.gate().weight.setZero();
  model.gate().bias << -800, -801, -900;
  std::vector<Eigen::VectorXd> feats(3, Eigen::VectorXd::Ones(2));
  const auto r = model.forward(feats);
  CHECK(std::abs(r.gates.sum() - 1.0) < 1e-15);
  CHECK(r.gates[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK(r.gates[2] < 1e-40);
}

TEST_CASE("fused vector is linear in the embeddings for fixed gates") {
  auto cfg = tiny_config(Family::kF3, 2);
  GatedFusionModel model(cfg, {2, 2, 2}, 2);
  model.gate().weight.setZero();
  std::vector<Eigen::VectorXd> feats(3, Eigen::VectorXd::Constant(2, 0.7));
  const auto a = model.forward(feats);
  for (auto& p : model.projections()) {
    p.weight *= 2.5;
    p.bias *= 2.5;
  }
  const auto b = model.forward(feats);
  CHECK((b.fused - 2.5 * a.fused).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((b.gates - a.gates).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("analytic gradients match finite differences") {
  Rng rng(3);
  for (uint64_t seed = 0; seed < 10; ++seed) {
    for (Family f : {Family::kF3, Family::kF2SS, Family::kSoloSfa}) {
      const auto cfg = tiny_config(f, seed);
      const int nb = static_cast<int>(cfg.branches.size());
      std::vector<int> dims{4, 3, 5};
      dims.resize(nb);
      GatedFusionModel model(cfg, dims, 3);
      randomize_biases(model, rng);
      const auto x = random_features(nb, 7, dims, rng);
      std::vector<int> y(7);
      for (int& v : y) v = static_cast<int>(rng.below(3));
      CHECK(analytic_gradient_check(model, x, y) < 1e-4);
    }
  }
}

TEST_CASE("dead ReLU branch weights do not change the loss") {
  auto cfg = tiny_config(Family::kF3, 9);
  cfg.dropout = 0.0;
  GatedFusionModel model(cfg, {2, 2, 2}, 2);
  Rng rng(1);
  auto x = random_features(3, 6, {2, 2, 2}, rng);
  x[0] = x[0].cwiseAbs();
  std::vector<int> y{0, 1, 0, 1, 1, 0};
  auto& p = model.projections()[0];
  p.weight = -p.weight.cwiseAbs();
  p.bias.setConstant(-1.0);
  const double before = batch_loss(model, x, y, nullptr);
  CHECK(batch_loss(model, x, y, nullptr) == before);
  BatchCache cache;
  forward_batch(model, x, nullptr, cache);
  const auto grads = backward_batch(model, x, y, cache);
  CHECK(grads[0].cwiseAbs().maxCoeff() == 0.0);
  p.weight *= 2.0;
  CHECK(std::abs(batch_loss(model, x, y, nullptr) - before) < 1e-12);
}

TEST_CASE("separable blobs are learned") {
  Rng rng(11);
  BranchFeatures x;
  std::vector<int> y;
  blobs(40, rng, x, y, 3);
  FusionConfig cfg;
  cfg.embed_dim = 8;
  cfg.hidden_dim = 8;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 8;
  GatedFusionModel model(cfg, {4, 4, 4}, 2);
  const auto rec = train(model, x, y, {}, {}, cfg);
  CHECK(rec.train_loss.size() <= 25);
  CHECK(evaluate(model, x, y).accuracy == 1.0);
}

TEST_CASE("training is deterministic") {
  Rng rng(12);
  BranchFeatures x;
  std::vector<int> y;
  blobs(30, rng, x, y, 2);
  auto cfg = tiny_config(Family::kF2SR, 4);
  cfg.max_epochs = 5;
  GatedFusionModel a(cfg, {4, 4}, 2), b(cfg, {4, 4}, 2);
  const auto va = gather_rows(x, std::vector<int>{0, 1, 2, 3});
  const std::vector<int> vy{y[0], y[1], y[2], y[3]};
  const auto ra = train(a, x, y, va, vy, cfg);
  const auto rb = train(b, x, y, va, vy, cfg);
  CHECK(ra.train_loss == rb.train_loss);
  CHECK(ra.val_loss == rb.val_loss);
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  for (size_t i = 0; i < ta.size(); ++i) CHECK(*ta[i].second == *tb[i].second);
}

TEST_CASE("early stopping contract") {
  EarlyStopping es(5);
  CHECK_FALSE(es.observe(1, 1.0));
  int stopped = 0;
  for (int e = 2; e <= 20 && !stopped; ++e) {
    if (es.observe(e, 1.0 + e)) stopped = e;
  }
  CHECK(stopped == 6);
  CHECK(es.best_epoch() == 1);
  CHECK(es.best_loss() == 1.0);

  EarlyStopping flat(2);
  CHECK_FALSE(flat.observe(1, 0.5));
  CHECK_FALSE(flat.observe(2, 0.5));
  CHECK(flat.observe(3, 0.5));
  CHECK(flat.best_epoch() == 1);
}

TEST_CASE("argmax takes the lowest index on ties") {
  Eigen::VectorXd v(4);
  v << 1, 3, 3, 2;
  CHECK(argmax_lowest(v) == 1);
}

TEST_CASE("checkpoint roundtrip") {
  auto cfg = tiny_config(Family::kF3, 21);
  GatedFusionModel model(cfg, {3, 4, 5}, 4);
  model.rng().next();
  const auto path = std::filesystem::temp_directory_path() / "tsfuse_ckpt_test.bin";
  save_checkpoint(model, path);
  auto loaded = load_checkpoint(path);
  CHECK(loaded.input_dims() == model.input_dims());
  CHECK(loaded.num_classes() == 4);
  CHECK(loaded.config().dropout == cfg.dropout);
  const auto ta = model.tensors();
  const auto tb = loaded.tensors();
  REQUIRE(ta.size() == tb.size());
  for (size_t i = 0; i < ta.size(); ++i) {
    CHECK(ta[i].first == tb[i].first);
    CHECK(*ta[i].second == *tb[i].second);
  }
  CHECK(loaded.rng().next() == model.rng().next());
  std::filesystem::remove(path);
  CHECK_THROWS(load_checkpoint(path));
}
