#include <gtest/gtest.h>

#include <cmath>

#include "hoga/stats.hpp"
#include "hoga/train.hpp"
#include "oracles.hpp"

using namespace hoga;

namespace {

TEST(Accuracy, KnownCases) {
  Tensor logits({3, 2}, {2.0, 1.0, 0.0, 1.0, 3.0, 0.0});
  std::vector<std::int32_t> labels{0, 1, 1};
  std::vector<std::uint8_t> all{1, 1, 1};
  EXPECT_NEAR(accuracy(logits, labels, all), 2.0 / 3.0, 1e-15);

  std::vector<std::int32_t> perfect{0, 1, 0};
  EXPECT_DOUBLE_EQ(accuracy(logits, perfect, all), 1.0);

  std::vector<std::int32_t> adversarial{1, 0, 1};
  EXPECT_DOUBLE_EQ(accuracy(logits, adversarial, all), 0.0);

  EXPECT_THROW(accuracy(logits, labels, {0, 0, 0}), error);
}

TEST(Accuracy, ArgmaxTiesBreakTowardLowestClass) {
  Tensor logits({1, 3}, {1.0, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(accuracy(logits, {0}, {1}), 1.0);
  EXPECT_DOUBLE_EQ(accuracy(logits, {1}, {1}), 0.0);
}

TEST(DirichletEnergy, KnownAndOracleCases) {
  auto single = build_graph(std::vector<edge_pair>{{0, 1}}, 2);
  Tensor x01({2, 1}, {0.0, 1.0});
  EXPECT_DOUBLE_EQ(dirichlet_energy(x01, single), 0.5);

  Tensor constant({2, 1}, {3.0, 3.0});
  EXPECT_DOUBLE_EQ(dirichlet_energy(constant, single), 0.0);

  auto p4 = build_graph(oracle::path_edges(4), 4);
  Tensor xr = Tensor::zeros({4, 3});
  std::mt19937_64 rng(5);
  for (double& v : xr.v_mut()) v = uniform_real01(rng);
  double direct = 0.0;  // independent summation over the three path edges
  for (int e = 0; e < 3; ++e)
    for (int f = 0; f < 3; ++f) {
      double d = xr.at(e, f) - xr.at(e + 1, f);
      direct += d * d;
    }
  EXPECT_NEAR(dirichlet_energy(xr, p4), 0.5 * direct, 1e-12);
}

TEST(DirichletEnergy, ZeroIffConstantPerComponent) {
  auto g = build_graph(std::vector<edge_pair>{{0, 1}, {2, 3}}, 4);
  Tensor per_component({4, 1}, {2.0, 2.0, -1.0, -1.0});
  EXPECT_DOUBLE_EQ(dirichlet_energy(per_component, g), 0.0);
  Tensor off({4, 1}, {2.0, 2.0 + 1e-3, -1.0, -1.0});
  EXPECT_GT(dirichlet_energy(off, g), 0.0);
}

TEST(Wilcoxon, IdenticalSequencesGiveOne) {
  std::vector<double> a{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  EXPECT_DOUBLE_EQ(wilcoxon_signed_rank(a, a), 1.0);
}

TEST(Wilcoxon, SixPositiveDistinctDifferences) {
  std::vector<double> b{0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  std::vector<double> a{0.1, 0.25, 0.37, 0.42, 0.58, 0.66};
  EXPECT_DOUBLE_EQ(wilcoxon_signed_rank(a, b), 2.0 / 64.0);
}

TEST(Wilcoxon, RejectsShortInput) {
  std::vector<double> a{1, 2, 3, 4};
  EXPECT_THROW(wilcoxon_signed_rank(a, a), error);
}

// Brute-force oracle: enumerate all 2^n sign assignments directly.
double wilcoxon_bruteforce(const std::vector<double>& a,
                           const std::vector<double>& b) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  if (d.empty()) return 1.0;
  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return std::abs(d[x]) < std::abs(d[y]);
  });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
    for (std::size_t k = i; k < j; ++k)
      rank[order[k]] = static_cast<double>(i + j + 1) / 2.0;
    i = j;
  }
  double w_obs = 0.0, total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    total += rank[k];
    if (d[k] > 0) w_obs += rank[k];
  }
  const double center = total / 2.0;
  const double dev = std::abs(w_obs - center);
  std::size_t hits = 0;
  for (std::size_t bits = 0; bits < (1u << n); ++bits) {
    double w = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      if (bits & (1u << k)) w += rank[k];
    if (std::abs(w - center) >= dev - 1e-12) ++hits;
  }
  return std::min(1.0, static_cast<double>(hits) / std::pow(2.0, static_cast<double>(n)));
}

TEST(Wilcoxon, MatchesEnumerationOracle) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 5 + uniform_index(rng, 8);  // 5..12 pairs
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      // quantized values produce zero diffs and ties with real probability
      a[i] = static_cast<double>(uniform_index(rng, 8)) / 8.0;
      b[i] = static_cast<double>(uniform_index(rng, 8)) / 8.0;
    }
    EXPECT_NEAR(wilcoxon_signed_rank(a, b), wilcoxon_bruteforce(a, b), 1e-12)
        << "trial " << trial;
  }
}

TEST(Wilcoxon, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(23);
  std::vector<double> a(10), b(10);
  for (std::size_t i = 0; i < 10; ++i) {
    a[i] = uniform_real01(rng);
    b[i] = uniform_real01(rng);
  }
  std::vector<double> a2(10), b2(10);
  for (std::size_t i = 0; i < 10; ++i) {
    a2[i] = 2.0 * a[i] + 1.0;
    b2[i] = 2.0 * b[i] + 1.0;
  }
  EXPECT_DOUBLE_EQ(wilcoxon_signed_rank(a, b), wilcoxon_signed_rank(a2, b2));
}

TEST(Wilcoxon, NormalApproximationAboveExactCutoff) {
  std::vector<double> a(30), b(30);
  std::mt19937_64 rng(29);
  for (std::size_t i = 0; i < 30; ++i) {
    b[i] = uniform_real01(rng);
    a[i] = b[i] + 0.05 + 0.01 * uniform_real01(rng);  // consistent positive shift
  }
  const double p = wilcoxon_signed_rank(a, b);
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1e-4);
}

TEST(AggregateRuns, MeanAndBesselStd) {
  TrainReport r1, r2;
  r1.test_acc = 0.8;
  r2.test_acc = 0.8;
  auto [m0, s0] = aggregate_runs({r1, r2});
  EXPECT_DOUBLE_EQ(m0, 0.8);
  EXPECT_DOUBLE_EQ(s0, 0.0);

  r1.test_acc = 0.7;
  r2.test_acc = 0.9;
  auto [m1, s1] = aggregate_runs({r1, r2});
  EXPECT_DOUBLE_EQ(m1, 0.8);
  EXPECT_NEAR(s1, 0.1414213562, 1e-9);

  EXPECT_THROW(aggregate_runs({r1}), error);

  std::vector<TrainReport> many(20);
  std::mt19937_64 rng(31);
  double sum = 0.0;
  for (auto& r : many) {
    r.test_acc = uniform_real01(rng);
    sum += r.test_acc;
  }
  const double mean = sum / 20.0;
  double ss = 0.0;
  for (auto& r : many) ss += (r.test_acc - mean) * (r.test_acc - mean);
  auto [m2, s2] = aggregate_runs(many);
  EXPECT_NEAR(m2, mean, 1e-12);
  EXPECT_NEAR(s2, std::sqrt(ss / 19.0), 1e-12);
}

// --- end-to-end training fixtures -------------------------------------------

struct Toy {
  Graph g;
  FeatureMatrix feats;
  std::shared_ptr<const SparseMatrix> sparse;
  LabeledSplit split;
  std::vector<PreparedOrder> orders;
};

// Two 6-node clusters with separable features and one bridge.
Toy make_separable_toy(int heads) {
  Toy t;
  std::vector<edge_pair> edges;
  for (node_t base : {0, 6}) {
    for (node_t i = base; i < base + 5; ++i) edges.emplace_back(i, i + 1);
    edges.emplace_back(base, base + 2);
    edges.emplace_back(base + 1, base + 3);
  }
  edges.emplace_back(5, 6);
  t.g = build_graph(edges, 12);

  t.feats.rows = 12;
  t.feats.cols = 4;
  t.feats.values.assign(48, 0.0);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 12; ++i) {
    t.feats.at(i, i < 6 ? 0 : 1) = 1.0;
    t.feats.at(i, 2) = 0.2 * uniform_real01(rng);
    t.feats.at(i, 3) = 0.2 * uniform_real01(rng);
  }
  t.sparse = std::make_shared<const SparseMatrix>(SparseMatrix::from_dense(t.feats));

  t.split.num_classes = 2;
  t.split.labels.assign(12, 0);
  for (int i = 6; i < 12; ++i) t.split.labels[static_cast<std::size_t>(i)] = 1;
  t.split.train_mask.assign(12, 0);
  t.split.val_mask.assign(12, 0);
  t.split.test_mask.assign(12, 0);
  for (int i : {0, 1, 6, 7}) t.split.train_mask[static_cast<std::size_t>(i)] = 1;
  for (int i : {2, 8}) t.split.val_mask[static_cast<std::size_t>(i)] = 1;
  for (int i : {3, 4, 5, 9, 10, 11}) t.split.test_mask[static_cast<std::size_t>(i)] = 1;

  SamplerConfig scfg;
  scfg.seed = 1;
  std::vector<HeadSampleSet> higher{sample_heads(t.g, t.feats, 2, scfg, heads)};
  t.orders = prepare_orders(t.g, higher, heads);
  return t;
}

HogaConfig toy_config(int heads) {
  HogaConfig cfg;
  cfg.k_max = 2;
  cfg.heads_first = heads;
  cfg.heads_rest = 1;
  cfg.layers = 2;
  cfg.hidden = 8;
  cfg.dropout = 0.2;
  return cfg;
}

TEST(Train, SeparableToyReachesPerfectTestAccuracy) {
  auto toy = make_separable_toy(2);
  auto model = HogaGatModel::init(toy_config(2), 4, 2, 11);
  DataBundle data{&toy.g, toy.sparse, &toy.split};
  TrainConfig cfg;
  cfg.lr = 0.01;
  cfg.max_epochs = 200;
  cfg.patience = 200;
  cfg.seed = 11;
  auto report = train(model, data, toy.orders, cfg);
  EXPECT_FALSE(report.diverged);
  EXPECT_DOUBLE_EQ(report.test_acc, 1.0);
  EXPECT_DOUBLE_EQ(report.epochs.back().train_acc, 1.0);
  EXPECT_LE(report.epochs.size(), 200u);
  EXPECT_EQ(report.dirichlet_energies.size(), 2u);
  for (double e : report.dirichlet_energies) EXPECT_GE(e, 0.0);
}

TEST(Train, ZeroLearningRateLeavesParametersUntouched) {
  auto toy = make_separable_toy(1);
  auto model = HogaGatModel::init(toy_config(1), 4, 2, 3);
  auto before = model.bind(nullptr);
  DataBundle data{&toy.g, toy.sparse, &toy.split};
  TrainConfig cfg;
  cfg.lr = 0.0;
  cfg.max_epochs = 5;
  cfg.seed = 3;
  auto report = train(model, data, toy.orders, cfg);
  auto after = model.bind(nullptr);
  for (std::size_t i = 0; i < before.size(); ++i)
    EXPECT_EQ(before[i].v(), after[i].v());
  // accuracy equals the initialization accuracy at every epoch
  for (const auto& e : report.epochs)
    EXPECT_DOUBLE_EQ(e.val_acc, report.epochs.front().val_acc);
}

TEST(Train, DeterministicUpToWallClock) {
  auto toy = make_separable_toy(1);
  TrainConfig cfg;
  cfg.lr = 0.01;
  cfg.max_epochs = 40;
  cfg.seed = 9;
  DataBundle data{&toy.g, toy.sparse, &toy.split};
  auto m1 = HogaGatModel::init(toy_config(1), 4, 2, 9);
  auto m2 = HogaGatModel::init(toy_config(1), 4, 2, 9);
  auto r1 = train(m1, data, toy.orders, cfg);
  auto r2 = train(m2, data, toy.orders, cfg);
  EXPECT_EQ(r1.best_val_epoch, r2.best_val_epoch);
  EXPECT_EQ(r1.test_acc, r2.test_acc);
  ASSERT_EQ(r1.epochs.size(), r2.epochs.size());
  for (std::size_t i = 0; i < r1.epochs.size(); ++i) {
    EXPECT_EQ(r1.epochs[i].train_loss, r2.epochs[i].train_loss);
    EXPECT_EQ(r1.epochs[i].val_acc, r2.epochs[i].val_acc);
  }
  EXPECT_EQ(r1.dirichlet_energies, r2.dirichlet_energies);
}

TEST(Train, ReportsTestAccuracyFromBestValidationCheckpoint) {
  auto toy = make_separable_toy(1);
  auto model = HogaGatModel::init(toy_config(1), 4, 2, 21);
  DataBundle data{&toy.g, toy.sparse, &toy.split};
  TrainConfig cfg;
  cfg.lr = 0.01;
  cfg.max_epochs = 60;
  cfg.patience = 15;
  cfg.seed = 21;
  auto report = train(model, data, toy.orders, cfg);
  ASSERT_GE(report.best_val_epoch, 0);
  // early stopping: no more than patience epochs beyond the best one
  EXPECT_LE(static_cast<int>(report.epochs.size()),
            report.best_val_epoch + cfg.patience + 1);
  EXPECT_DOUBLE_EQ(report.epochs[static_cast<std::size_t>(report.best_val_epoch)].val_acc,
                   report.best_val_acc);
  // the model was restored to the checkpoint: re-evaluating reproduces test_acc
  auto bound = model.bind(nullptr);
  auto logits = model.forward(nullptr, bound, toy.sparse, toy.orders, false, 0);
  EXPECT_DOUBLE_EQ(accuracy(logits, toy.split.labels, toy.split.test_mask),
                   report.test_acc);
}

TEST(Train, LossNonIncreasingEarlyOnSmoothProblem) {
  auto toy = make_separable_toy(1);
  HogaConfig cfg = toy_config(1);
  cfg.dropout = 0.0;  // smooth objective for the sanity check
  auto model = HogaGatModel::init(cfg, 4, 2, 13);
  DataBundle data{&toy.g, toy.sparse, &toy.split};
  TrainConfig tc;
  tc.lr = 0.005;
  tc.max_epochs = 12;
  tc.seed = 13;
  auto report = train(model, data, toy.orders, tc);
  for (std::size_t i = 1; i < 10; ++i)
    EXPECT_LE(report.epochs[i].train_loss, report.epochs[i - 1].train_loss + 1e-9);
}

TEST(Train, DivergenceProducesPartialReport) {
  auto toy = make_separable_toy(1);
  auto model = HogaGatModel::init(toy_config(1), 4, 2, 5);
  DataBundle data{&toy.g, toy.sparse, &toy.split};
  TrainConfig cfg;
  cfg.lr = 1.0;
  cfg.weight_decay = 1e8;  // parameter magnitudes explode geometrically
  cfg.max_epochs = 200;
  cfg.seed = 5;
  auto report = train(model, data, toy.orders, cfg);
  EXPECT_TRUE(report.diverged);
  EXPECT_FALSE(report.divergence_message.empty());
  EXPECT_LT(report.epochs.size(), 200u);
}

}  // namespace
