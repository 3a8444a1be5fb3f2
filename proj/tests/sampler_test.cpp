#include <gtest/gtest.h>

#include <map>
#include <set>

#include "hoga/khop.hpp"
#include "hoga/sampler.hpp"
#include "oracles.hpp"

using namespace hoga;

namespace {

SamplerConfig walk_config(std::uint64_t seed = 0) {
  SamplerConfig cfg;
  cfg.method = SampleMethod::heuristic_walk;
  cfg.seed = seed;
  return cfg;
}

TEST(CosineDissimilarity, KnownValues) {
  std::vector<double> x{1.0, 2.0}, y{0.0, 1.0}, ax{1.0, 0.0}, nx{-1.0, 0.0};
  EXPECT_NEAR(cosine_dissimilarity(x, x), 0.0, 1e-15);
  EXPECT_NEAR(cosine_dissimilarity(ax, y), 1.0, 1e-15);
  EXPECT_NEAR(cosine_dissimilarity(ax, nx), 2.0, 1e-15);
  std::vector<double> zero{0.0, 0.0};
  EXPECT_DOUBLE_EQ(cosine_dissimilarity(zero, x), 1.0);
  EXPECT_DOUBLE_EQ(cosine_dissimilarity(x, zero), 1.0);
}

TEST(EmaBuffer, LiteralUnnormalizedSum) {
  std::vector<std::vector<double>> h1{{3.0, -1.0}};
  EXPECT_EQ(ema_buffer(h1, 0.3), (std::vector<double>{3.0, -1.0}));

  std::vector<std::vector<double>> h2{{1.0, 0.0}, {0.0, 1.0}};
  auto out = ema_buffer(h2, 0.5);  // 0.5 * v1 + v2
  EXPECT_DOUBLE_EQ(out[0], 0.5);
  EXPECT_DOUBLE_EQ(out[1], 1.0);

  std::vector<std::vector<double>> h3{{1.0}, {2.0}, {4.0}};
  EXPECT_DOUBLE_EQ(ema_buffer(h3, 1.0)[0], 7.0);  // gamma = 1: plain sum

  EXPECT_THROW(ema_buffer({}, 0.5), error);
}

TEST(DissimilarityScore, BlendsGreedyAndHistoryTerms) {
  std::vector<double> xi{1.0, 0.0}, xj{0.0, 1.0}, xhat{1.0, 1.0};
  // gamma = 1: greedy only
  EXPECT_DOUBLE_EQ(dissimilarity_score(xi, xj, xhat, 1.0),
                   cosine_dissimilarity(xi, xj));
  // gamma = 0: history only
  EXPECT_DOUBLE_EQ(dissimilarity_score(xi, xj, xhat, 0.0),
                   cosine_dissimilarity(xhat, xj));
  // hand case: f(xi,xj) = 1, f(xhat',xj) = 0.5 -> 0.75
  std::vector<double> xhat2{0.0, 1.0};
  const double f2 = 0.5;
  std::vector<double> mix{1.0, 1.0 + std::sqrt(2.0)};
  // construct xhat with f(xhat,xj) = 0.5 exactly: angle 60 degrees
  std::vector<double> xhat3{std::sqrt(3.0) / 2.0, 0.5};
  EXPECT_NEAR(cosine_dissimilarity(xhat3, xj), f2, 1e-12);
  EXPECT_NEAR(dissimilarity_score(xi, xj, xhat3, 0.5), 0.75, 1e-12);
  (void)xhat2;
  (void)mix;
}

TEST(SparseScoring, MatchesDenseContractFunctions) {
  auto f = oracle::random_features(12, 7, 5, 0.0, 1.0);
  // sprinkle exact zeros so sparse and dense paths genuinely differ in layout
  for (std::size_t i = 0; i < f.values.size(); i += 3) f.values[i] = 0.0;
  auto sp = SparseMatrix::from_dense(f);
  auto norms = row_norms(sp);
  for (std::int64_t a = 0; a < f.rows; ++a)
    for (std::int64_t b = 0; b < f.rows; ++b) {
      const double na = norms[static_cast<std::size_t>(a)];
      const double nb = norms[static_cast<std::size_t>(b)];
      double got = (na == 0.0 || nb == 0.0)
                       ? 1.0
                       : 1.0 - sparse_dot(sp, a, b) / (na * nb);
      EXPECT_NEAR(got, cosine_dissimilarity(f.row(a), f.row(b)), 1e-13);
    }

  // EMA accumulation over sparse rows equals the dense contract op
  std::deque<node_t> hist{0, 3, 7, 9};
  std::vector<double> dense_hist_out;
  {
    std::vector<std::vector<double>> hist_vecs;
    for (node_t i : hist)
      hist_vecs.emplace_back(f.row(i).begin(), f.row(i).end());
    dense_hist_out = ema_buffer(hist_vecs, 0.9);
  }
  std::vector<double> sparse_out(static_cast<std::size_t>(f.cols), 0.0);
  ema_accumulate(sp, hist, 0.9, sparse_out);
  for (std::size_t c = 0; c < sparse_out.size(); ++c)
    EXPECT_DOUBLE_EQ(sparse_out[c], dense_hist_out[c]);
}

TEST(HeuristicWalk, EveryPairAtExactDistance) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    auto edges = oracle::erdos_renyi(60, 0.08, seed);
    auto g = build_graph(edges, 60);
    auto f = oracle::random_features(60, 5, seed + 100, 0.0, 1.0);
    auto fw = oracle::floyd_warshall(60, edges);
    for (int k : {2, 3}) {
      auto s = heuristic_walk_sample(g, f, k, walk_config(seed));
      for (auto [i, j] : s.pairs) EXPECT_EQ(fw[i][j], k);
      EXPECT_LE(static_cast<std::int64_t>(s.pairs.size()),
                std::min(g.num_edges, std::int64_t{90000}));
    }
  }
}

TEST(HeuristicWalk, IdenticalFeaturesFallBackToUniform) {
  auto g = build_graph(oracle::cycle_edges(8), 8);
  FeatureMatrix f;
  f.rows = 8;
  f.cols = 3;
  f.values.assign(24, 0.5);  // all nodes identical: every score is 0
  auto s = heuristic_walk_sample(g, f, 2, walk_config(4));
  EXPECT_FALSE(s.pairs.empty());
  auto ek = build_khop_edges(g, 2).pairs;
  for (auto p : s.pairs)
    EXPECT_TRUE(std::binary_search(ek.begin(), ek.end(), p));
}

TEST(HeuristicWalk, CycleAntipodesFullyRecovered) {
  auto g = build_graph(oracle::cycle_edges(6), 6);
  auto f = oracle::random_features(6, 4, 17, 0.0, 1.0);
  auto s = heuristic_walk_sample(g, f, 3, walk_config(123));
  // |E_3| = 3 <= target, so the full antipodal set must come back
  EXPECT_EQ(s.pairs, (std::vector<edge_pair>{{0, 3}, {1, 4}, {2, 5}}));
}

TEST(HeuristicWalk, EmptyKhopYieldsWarningStatus) {
  auto g = build_graph(oracle::star_edges(4), 5);
  auto f = oracle::random_features(5, 3, 2, 0.0, 1.0);
  auto s = heuristic_walk_sample(g, f, 3, walk_config(0));
  EXPECT_EQ(s.status, SampleStatus::empty_khop);
  EXPECT_TRUE(s.pairs.empty());
}

TEST(HeuristicWalk, DeterministicGivenConfig) {
  auto edges = oracle::erdos_renyi(40, 0.1, 8);
  auto g = build_graph(edges, 40);
  auto f = oracle::random_features(40, 6, 3, 0.0, 1.0);
  auto a = heuristic_walk_sample(g, f, 2, walk_config(77));
  auto b = heuristic_walk_sample(g, f, 2, walk_config(77));
  EXPECT_EQ(a.pairs, b.pairs);
  auto c = heuristic_walk_sample(g, f, 2, walk_config(78));
  EXPECT_EQ(a.status, SampleStatus::ok);
  (void)c;
}

TEST(HeuristicWalk, RespectsTinyEdgeCap) {
  auto g = build_graph(oracle::erdos_renyi(50, 0.15, 4), 50);
  auto f = oracle::random_features(50, 4, 5, 0.0, 1.0);
  auto cfg = walk_config(1);
  cfg.edge_cap = 5;
  auto s = heuristic_walk_sample(g, f, 2, cfg);
  EXPECT_LE(s.pairs.size(), 5u);
}

TEST(BaselineSamplers, CycleFullSetAndSoundness) {
  auto g = build_graph(oracle::cycle_edges(6), 6);
  SamplerConfig cfg;
  cfg.method = SampleMethod::random_sample;
  cfg.seed = 5;
  auto s = baseline_sample(g, 3, cfg);
  EXPECT_EQ(s.pairs, (std::vector<edge_pair>{{0, 3}, {1, 4}, {2, 5}}));
}

TEST(BaselineSamplers, BreadthFirstOnPathRestarts) {
  // G_2 of P4 is two disjoint edges {(0,2), (1,3)}; tree search must restart
  // on the second component and recover both.
  auto g = build_graph(oracle::path_edges(4), 4);
  SamplerConfig cfg;
  cfg.method = SampleMethod::breadth_first;
  cfg.seed = 0;
  auto s = baseline_sample(g, 2, cfg);
  EXPECT_EQ(s.pairs, (std::vector<edge_pair>{{0, 2}, {1, 3}}));
}

TEST(BaselineSamplers, AllMethodsSoundAndCapped) {
  auto edges = oracle::erdos_renyi(70, 0.07, 21);
  auto g = build_graph(edges, 70);
  auto fw = oracle::floyd_warshall(70, edges);
  for (auto m : {SampleMethod::random_sample, SampleMethod::random_walk,
                 SampleMethod::breadth_first, SampleMethod::depth_first}) {
    SamplerConfig cfg;
    cfg.method = m;
    cfg.seed = 9;
    auto s = baseline_sample(g, 2, cfg);
    EXPECT_LE(static_cast<std::int64_t>(s.pairs.size()),
              std::min(g.num_edges, cfg.edge_cap));
    for (auto [i, j] : s.pairs) EXPECT_EQ(fw[i][j], 2) << to_string(m);
    auto again = baseline_sample(g, 2, cfg);
    EXPECT_EQ(s.pairs, again.pairs) << to_string(m);
  }
}

TEST(SampleHeads, SingletonAndDeterminism) {
  auto g = build_graph(oracle::erdos_renyi(30, 0.15, 2), 30);
  auto f = oracle::random_features(30, 5, 6, 0.0, 1.0);
  auto one = sample_heads(g, f, 2, walk_config(3), 1);
  ASSERT_EQ(one.heads.size(), 1u);
  EXPECT_EQ(one.heads[0].pairs, heuristic_walk_sample(g, f, 2, walk_config(3)).pairs);

  auto eight = sample_heads(g, f, 2, walk_config(3), 8);
  ASSERT_EQ(eight.heads.size(), 8u);
  for (int h = 0; h < 8; ++h)
    EXPECT_EQ(eight.heads[static_cast<std::size_t>(h)].provenance.seed,
              3u + static_cast<std::uint64_t>(h));

  auto again = sample_heads(g, f, 2, walk_config(3), 8);
  for (int h = 0; h < 8; ++h)
    EXPECT_EQ(eight.heads[static_cast<std::size_t>(h)].pairs,
              again.heads[static_cast<std::size_t>(h)].pairs);
}

// Successor law: empirical frequencies proportional to scores within three
// standard errors per candidate over 1e5 draws.
TEST(SuccessorLaw, EmpiricalFrequenciesMatchScores) {
  const std::vector<double> scores{0.1, 0.4, 0.05, 0.9, 0.25, 0.3, 0.7,
                                   0.15, 0.6, 0.2, 0.45, 0.05, 0.8, 0.35,
                                   0.5, 0.1, 0.65, 0.4, 0.55, 0.3};
  ASSERT_EQ(scores.size(), 20u);
  double total = 0.0;
  for (double s : scores) total += s;
  const int draws = 100000;
  std::vector<int> counts(scores.size(), 0);
  std::mt19937_64 rng(31);
  for (int t = 0; t < draws; ++t) ++counts[weighted_choice(rng, scores)];
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = scores[i] / total;
    const double se = std::sqrt(p * (1.0 - p) / draws);
    EXPECT_NEAR(static_cast<double>(counts[i]) / draws, p, 3.0 * se)
        << "candidate " << i;
  }
}

// Two-cluster diversity: with cluster-constant features the heuristic walk
// crosses clusters more often than uniform random pair sampling (soft,
// averaged over 50 seeds).
TEST(DiversityTendency, HeuristicPrefersCrossClusterPairs) {
  // clusters {0..9} and {10..19}, dense inside, bridged by 9-10
  std::vector<edge_pair> edges;
  auto clique_path = [&](node_t lo) {
    for (node_t i = lo; i < lo + 9; ++i) {
      edges.emplace_back(i, i + 1);
      if (i + 2 < lo + 10) edges.emplace_back(i, i + 2);
    }
  };
  clique_path(0);
  clique_path(10);
  edges.emplace_back(9, 10);
  auto g = build_graph(edges, 20);

  FeatureMatrix f;
  f.rows = 20;
  f.cols = 2;
  f.values.assign(40, 0.0);
  for (int i = 0; i < 10; ++i) f.at(i, 0) = 1.0;
  for (int i = 10; i < 20; ++i) f.at(i, 1) = 1.0;

  auto ek = build_khop_edges(g, 2).pairs;
  auto cross_fraction = [&](const std::vector<edge_pair>& pairs) {
    if (pairs.empty()) return 0.0;
    int cross = 0;
    for (auto [i, j] : pairs)
      if ((i < 10) != (j < 10)) ++cross;
    return static_cast<double>(cross) / static_cast<double>(pairs.size());
  };
  ASSERT_GT(cross_fraction(ek), 0.0);

  double walk_mean = 0.0, uniform_mean = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto cfg = walk_config(seed);
    cfg.edge_cap = 8;  // force a real subset
    walk_mean += cross_fraction(heuristic_walk_sample(g, f, 2, cfg).pairs);
    SamplerConfig ucfg = cfg;
    ucfg.method = SampleMethod::random_sample;
    uniform_mean += cross_fraction(baseline_sample(g, 2, ucfg).pairs);
  }
  EXPECT_GT(walk_mean / 50.0, uniform_mean / 50.0);
}

}  // namespace
