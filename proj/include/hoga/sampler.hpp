// Tractable subsets S_k of the distance-k edge sets.
//
// The heuristic probabilistic walk steps through G_k choosing successors with
// probability proportional to a feature dissimilarity score: a greedy cosine
// term against the current node blended with a cosine term against an
// exponential moving average of the last n visited feature-vectors. Four
// purely topological baselines (uniform pair sampling, uniform walk,
// breadth-first, depth-first) share the same size target and cap.
//
// Every sampler run is a pure function of (graph, features, config), so runs
// for different heads or hop orders may execute concurrently.

#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <string>
#include <unordered_set>
#include <vector>

#include "hoga/common.hpp"
#include "hoga/graph.hpp"
#include "hoga/khop.hpp"
#include "hoga/sparse.hpp"

namespace hoga {

enum class SampleMethod {
  heuristic_walk,
  random_sample,
  random_walk,
  breadth_first,
  depth_first,
};

inline const char* to_string(SampleMethod m) {
  switch (m) {
    case SampleMethod::heuristic_walk: return "heuristic-walk";
    case SampleMethod::random_sample: return "random-sample";
    case SampleMethod::random_walk: return "random-walk";
    case SampleMethod::breadth_first: return "breadth-first";
    case SampleMethod::depth_first: return "depth-first";
  }
  return "?";
}

inline SampleMethod parse_sample_method(const std::string& s) {
  if (s == "heuristic-walk") return SampleMethod::heuristic_walk;
  if (s == "random-sample") return SampleMethod::random_sample;
  if (s == "random-walk") return SampleMethod::random_walk;
  if (s == "breadth-first") return SampleMethod::breadth_first;
  if (s == "depth-first") return SampleMethod::depth_first;
  throw config_error("unknown sampler method '" + s + "'");
}

struct SamplerConfig {
  SampleMethod method = SampleMethod::heuristic_walk;
  double gamma = 0.9;          // decay rate blending greedy vs history terms
  double jump_prob = 0.05;     // random-jump probability of the walk
  std::int64_t edge_cap = 90000;
  int history_size = 16;       // n, length of the EMA buffer
  std::uint64_t seed = 0;
};

inline void validate(const SamplerConfig& cfg) {
  if (cfg.gamma < 0.0 || cfg.gamma > 1.0)
    throw config_error("sampler: gamma must be in [0,1]");
  if (cfg.jump_prob < 0.0 || cfg.jump_prob > 1.0)
    throw config_error("sampler: jump-prob must be in [0,1]");
  if (cfg.edge_cap < 0) throw config_error("sampler: edge-cap must be >= 0");
  if (cfg.history_size < 1)
    throw config_error("sampler: history-size must be >= 1");
}

enum class SampleStatus {
  ok,
  empty_khop,         // E_k empty on every component; sample is empty
  budget_exhausted,   // step budget ran out before reaching the target
};

struct SampleSet {
  int k = 1;
  std::vector<edge_pair> pairs;  // subset of E_k, (i, j) with i < j, sorted
  SamplerConfig provenance;
  SampleStatus status = SampleStatus::ok;
};

struct HeadSampleSet {
  int k = 1;
  std::vector<SampleSet> heads;
};

// 1 - cos(a, b), in [0, 2]. Defined as 1 (the neutral midpoint) when either
// vector is zero.
inline double cosine_dissimilarity(std::span<const double> a,
                                   std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  std::size_t m = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < m; ++i) dot += a[i] * b[i];
  for (double v : a) na += v * v;
  for (double v : b) nb += v * v;
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

// Weights gamma^{n-1-t} for buffer slots t = 0..n-1 (newest slot weight 1),
// built by repeated multiplication so every consumer rounds identically.
inline std::vector<double> ema_weights(std::size_t n, double gamma) {
  std::vector<double> w(n, 1.0);
  for (std::size_t t = n; t-- > 1;) w[t - 1] = w[t] * gamma;
  return w;
}

// Literal unnormalized EMA over the history buffer: sum_t gamma^{n-t} x_t
// with the newest entry weighted gamma^0.
inline std::vector<double> ema_buffer(
    const std::vector<std::vector<double>>& history, double gamma) {
  if (history.empty()) throw error("ema_buffer: empty history");
  auto w = ema_weights(history.size(), gamma);
  std::vector<double> out(history.front().size(), 0.0);
  for (std::size_t t = 0; t < history.size(); ++t)
    for (std::size_t c = 0; c < out.size(); ++c)
      out[c] += w[t] * history[t][c];
  return out;
}

// s_n = gamma * f(x_i, x_j) + (1 - gamma) * f(x_hat, x_j), in [0, 2].
inline double dissimilarity_score(std::span<const double> xi,
                                  std::span<const double> xj,
                                  std::span<const double> xhat, double gamma) {
  return gamma * cosine_dissimilarity(xi, xj) +
         (1.0 - gamma) * cosine_dissimilarity(xhat, xj);
}

// Sparse-row counterpart of ema_buffer: accumulates weighted rows of feats
// into a dense scratch vector, same term order and weights as the dense form.
inline void ema_accumulate(const SparseMatrix& feats,
                           const std::deque<node_t>& history, double gamma,
                           std::vector<double>& out) {
  std::fill(out.begin(), out.end(), 0.0);
  auto w = ema_weights(history.size(), gamma);
  for (std::size_t t = 0; t < history.size(); ++t) {
    auto cols = feats.row_cols(history[t]);
    auto vals = feats.row_vals(history[t]);
    for (std::size_t i = 0; i < cols.size(); ++i)
      out[static_cast<std::size_t>(cols[i])] += w[t] * vals[i];
  }
}

// Walk position plus the bounded buffer of recently visited nodes.
struct WalkState {
  node_t current = 0;
  std::deque<node_t> history;  // most recent last, length <= history_size
};

namespace detail {

struct PairHash {
  std::size_t operator()(const edge_pair& p) const {
    return splitmix64((static_cast<std::uint64_t>(p.first) << 32) |
                      static_cast<std::uint32_t>(p.second));
  }
};

using PairSet = std::unordered_set<edge_pair, PairHash>;

inline std::vector<edge_pair> sorted_pairs(const PairSet& set) {
  std::vector<edge_pair> out(set.begin(), set.end());
  std::sort(out.begin(), out.end());
  return out;
}

inline edge_pair ordered(node_t a, node_t b) {
  return a < b ? edge_pair{a, b} : edge_pair{b, a};
}

// Target size: min(|E|, edge_cap, |E_k|).
inline std::int64_t sample_target(const Graph& g, std::int64_t ek_count,
                                  const SamplerConfig& cfg) {
  return std::min({g.num_edges, cfg.edge_cap, ek_count});
}

}  // namespace detail

// The feature-diversity-driven walk on G_k. Successors are drawn with
// probability proportional to s_n over the candidate set N_k(current);
// teleports happen with probability jump_prob and whenever the candidate set
// is empty; the history buffer receives the landed node's features after
// every step (teleports included). Terminates at the target size or after a
// budget of 50x target steps.
inline SampleSet heuristic_walk_sample(const Graph& g, const SparseMatrix& feats,
                                       int k, const SamplerConfig& cfg,
                                       KhopNeighborCache* shared_cache = nullptr) {
  validate(cfg);
  if (cfg.method != SampleMethod::heuristic_walk)
    throw config_error("heuristic_walk_sample: wrong method in config");
  if (k < 1) throw config_error("heuristic_walk_sample: k must be >= 1");
  if (feats.rows != g.num_nodes)
    throw error("heuristic_walk_sample: feature row count mismatch");

  SampleSet out;
  out.k = k;
  out.provenance = cfg;
  const std::int64_t ek = count_khop_edges(g, k);
  if (ek == 0) {
    out.status = SampleStatus::empty_khop;
    return out;
  }
  const std::int64_t target = detail::sample_target(g, ek, cfg);
  if (target == 0) return out;

  KhopNeighborCache local_cache(g, k);
  KhopNeighborCache& cache = shared_cache ? *shared_cache : local_cache;
  const std::vector<double> norms = row_norms(feats);

  std::mt19937_64 rng(cfg.seed);
  WalkState state;
  state.current = static_cast<node_t>(uniform_index(rng, g.num_nodes));
  auto visit = [&](node_t v) {
    state.history.push_back(v);
    if (state.history.size() > static_cast<std::size_t>(cfg.history_size))
      state.history.pop_front();
  };
  visit(state.current);

  detail::PairSet pairs;
  std::vector<double> xhat(static_cast<std::size_t>(feats.cols), 0.0);
  std::vector<double> scores;
  const std::int64_t budget = 50 * target;

  for (std::int64_t step = 0;
       step < budget && static_cast<std::int64_t>(pairs.size()) < target; ++step) {
    if (uniform_real01(rng) < cfg.jump_prob) {
      state.current = static_cast<node_t>(uniform_index(rng, g.num_nodes));
      visit(state.current);
      continue;
    }
    const auto& cands = cache.candidates(state.current);
    if (cands.empty()) {
      state.current = static_cast<node_t>(uniform_index(rng, g.num_nodes));
      visit(state.current);
      continue;
    }

    ema_accumulate(feats, state.history, cfg.gamma, xhat);
    double xhat_sq = 0.0;
    for (double v : xhat) xhat_sq += v * v;
    const double xhat_norm = std::sqrt(xhat_sq);
    const double cur_norm = norms[static_cast<std::size_t>(state.current)];

    scores.clear();
    for (node_t j : cands) {
      const double nj = norms[static_cast<std::size_t>(j)];
      double greedy = 1.0, global = 1.0;  // zero-vector convention
      if (cur_norm != 0.0 && nj != 0.0)
        greedy = 1.0 - sparse_dot(feats, state.current, j) / (cur_norm * nj);
      if (xhat_norm != 0.0 && nj != 0.0)
        global = 1.0 - dense_sparse_dot(xhat, feats, j) / (xhat_norm * nj);
      scores.push_back(cfg.gamma * greedy + (1.0 - cfg.gamma) * global);
    }

    node_t next = cands[weighted_choice(rng, scores)];
    pairs.insert(detail::ordered(state.current, next));
    state.current = next;
    visit(next);
  }

  if (static_cast<std::int64_t>(pairs.size()) < target)
    out.status = SampleStatus::budget_exhausted;
  out.pairs = detail::sorted_pairs(pairs);
  return out;
}

inline SampleSet heuristic_walk_sample(const Graph& g, const FeatureMatrix& f,
                                       int k, const SamplerConfig& cfg,
                                       KhopNeighborCache* cache = nullptr) {
  return heuristic_walk_sample(g, SparseMatrix::from_dense(f), k, cfg, cache);
}

namespace detail {

// Uniform without replacement from E_k: draws `target` distinct pair indices
// (Floyd), then resolves them in one streaming pass over the canonical
// enumeration order, never holding E_k itself.
inline SampleSet random_pair_sample(const Graph& g, int k,
                                    const SamplerConfig& cfg, std::int64_t ek,
                                    std::int64_t target) {
  SampleSet out;
  out.k = k;
  out.provenance = cfg;
  std::mt19937_64 rng(cfg.seed);
  std::unordered_set<std::int64_t> chosen;
  for (std::int64_t i = ek - target; i < ek; ++i) {
    auto r = static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(i) + 1));
    if (!chosen.insert(r).second) chosen.insert(i);
  }
  std::vector<std::int64_t> wanted(chosen.begin(), chosen.end());
  std::sort(wanted.begin(), wanted.end());

  std::size_t cursor = 0;
  std::int64_t index = 0;
  for (node_t i = 0; i < g.num_nodes && cursor < wanted.size(); ++i) {
    auto dist = bfs_distances(g, i, k);
    for (node_t j = i + 1; j < g.num_nodes && cursor < wanted.size(); ++j) {
      if (dist[static_cast<std::size_t>(j)] != k) continue;
      if (index == wanted[cursor]) {
        out.pairs.emplace_back(i, j);
        ++cursor;
      }
      ++index;
    }
  }
  return out;  // enumeration order is already sorted
}

inline SampleSet uniform_walk_sample(const Graph& g, int k,
                                     const SamplerConfig& cfg,
                                     std::int64_t target,
                                     KhopNeighborCache& cache) {
  SampleSet out;
  out.k = k;
  out.provenance = cfg;
  std::mt19937_64 rng(cfg.seed);
  node_t current = static_cast<node_t>(uniform_index(rng, g.num_nodes));
  PairSet pairs;
  const std::int64_t budget = 50 * target;
  for (std::int64_t step = 0;
       step < budget && static_cast<std::int64_t>(pairs.size()) < target; ++step) {
    if (uniform_real01(rng) < cfg.jump_prob) {
      current = static_cast<node_t>(uniform_index(rng, g.num_nodes));
      continue;
    }
    const auto& cands = cache.candidates(current);
    if (cands.empty()) {
      current = static_cast<node_t>(uniform_index(rng, g.num_nodes));
      continue;
    }
    node_t next = cands[uniform_index(rng, cands.size())];
    pairs.insert(ordered(current, next));
    current = next;
  }
  if (static_cast<std::int64_t>(pairs.size()) < target)
    out.status = SampleStatus::budget_exhausted;
  out.pairs = sorted_pairs(pairs);
  return out;
}

// Tree-edge collection on G_k, restarting from a fresh unvisited root when a
// component is exhausted. Yields at most n-1 pairs by construction.
inline SampleSet tree_search_sample(const Graph& g, int k,
                                    const SamplerConfig& cfg,
                                    std::int64_t target, bool breadth_first,
                                    KhopNeighborCache& cache) {
  SampleSet out;
  out.k = k;
  out.provenance = cfg;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(g.num_nodes), 0);
  std::int64_t unvisited = g.num_nodes;
  PairSet pairs;

  auto pick_root = [&]() -> node_t {
    auto r = static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(unvisited)));
    for (node_t i = 0; i < g.num_nodes; ++i)
      if (!visited[static_cast<std::size_t>(i)] && r-- == 0) return i;
    throw error("tree_search_sample: root selection failed");
  };

  while (unvisited > 0 && static_cast<std::int64_t>(pairs.size()) < target) {
    std::deque<node_t> frontier;
    node_t root = pick_root();
    visited[static_cast<std::size_t>(root)] = 1;
    --unvisited;
    frontier.push_back(root);
    while (!frontier.empty() &&
           static_cast<std::int64_t>(pairs.size()) < target) {
      node_t u;
      if (breadth_first) {
        u = frontier.front();
        frontier.pop_front();
      } else {
        u = frontier.back();
        frontier.pop_back();
      }
      for (node_t v : cache.candidates(u)) {
        if (visited[static_cast<std::size_t>(v)]) continue;
        visited[static_cast<std::size_t>(v)] = 1;
        --unvisited;
        pairs.insert(ordered(u, v));
        frontier.push_back(v);
        if (static_cast<std::int64_t>(pairs.size()) >= target) break;
      }
    }
  }
  out.pairs = sorted_pairs(pairs);
  return out;
}

}  // namespace detail

// The four topological baselines. Same target and cap as the heuristic walk.
inline SampleSet baseline_sample(const Graph& g, int k, const SamplerConfig& cfg,
                                 KhopNeighborCache* shared_cache = nullptr) {
  validate(cfg);
  if (cfg.method == SampleMethod::heuristic_walk)
    throw config_error("baseline_sample: heuristic-walk is not a baseline");
  if (k < 1) throw config_error("baseline_sample: k must be >= 1");

  const std::int64_t ek = count_khop_edges(g, k);
  if (ek == 0) {
    SampleSet out;
    out.k = k;
    out.provenance = cfg;
    out.status = SampleStatus::empty_khop;
    return out;
  }
  const std::int64_t target = detail::sample_target(g, ek, cfg);
  KhopNeighborCache local_cache(g, k);
  KhopNeighborCache& cache = shared_cache ? *shared_cache : local_cache;

  switch (cfg.method) {
    case SampleMethod::random_sample:
      return detail::random_pair_sample(g, k, cfg, ek, target);
    case SampleMethod::random_walk:
      return detail::uniform_walk_sample(g, k, cfg, target, cache);
    case SampleMethod::breadth_first:
      return detail::tree_search_sample(g, k, cfg, target, true, cache);
    case SampleMethod::depth_first:
      return detail::tree_search_sample(g, k, cfg, target, false, cache);
    default:
      throw config_error("baseline_sample: unsupported method");
  }
}

inline SampleSet sample_edges(const Graph& g, const SparseMatrix& feats, int k,
                              const SamplerConfig& cfg,
                              KhopNeighborCache* cache = nullptr) {
  if (cfg.method == SampleMethod::heuristic_walk)
    return heuristic_walk_sample(g, feats, k, cfg, cache);
  return baseline_sample(g, k, cfg, cache);
}

// One sample set per head with derived seeds seed + h. Head h is a pure
// function of (inputs, seed + h), so reruns are bitwise identical.
inline HeadSampleSet sample_heads(const Graph& g, const SparseMatrix& feats,
                                  int k, const SamplerConfig& cfg, int num_heads,
                                  KhopNeighborCache* shared_cache = nullptr) {
  if (num_heads < 1) throw config_error("sample_heads: need at least one head");
  KhopNeighborCache local_cache(g, k);
  KhopNeighborCache& cache = shared_cache ? *shared_cache : local_cache;
  HeadSampleSet out;
  out.k = k;
  for (int h = 0; h < num_heads; ++h) {
    SamplerConfig head_cfg = cfg;
    head_cfg.seed = cfg.seed + static_cast<std::uint64_t>(h);
    out.heads.push_back(sample_edges(g, feats, k, head_cfg, &cache));
  }
  return out;
}

inline HeadSampleSet sample_heads(const Graph& g, const FeatureMatrix& f, int k,
                                  const SamplerConfig& cfg, int num_heads,
                                  KhopNeighborCache* cache = nullptr) {
  return sample_heads(g, SparseMatrix::from_dense(f), k, cfg, num_heads, cache);
}

}  // namespace hoga
