// Immutable CSR graph with node features, labels and split masks.
//
// Adjacency is undirected, symmetric, sorted per row, deduplicated, with no
// stored self-loops (the attention layer injects the self term itself).
// Construction is single-threaded; built objects are safe to share across
// concurrent readers.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hoga/common.hpp"

namespace hoga {

using node_t = std::int32_t;
using edge_pair = std::pair<node_t, node_t>;

struct Graph {
  std::int64_t num_nodes = 0;
  std::int64_t num_edges = 0;  // undirected edges, each counted once
  std::vector<std::int64_t> offsets;
  std::vector<node_t> adj;

  std::span<const node_t> neighbors(node_t i) const {
    return {adj.data() + offsets[i],
            static_cast<std::size_t>(offsets[i + 1] - offsets[i])};
  }
  std::int64_t degree(node_t i) const { return offsets[i + 1] - offsets[i]; }

  // Undirected edge list, (i, j) with i < j, sorted.
  std::vector<edge_pair> edge_pairs() const {
    std::vector<edge_pair> out;
    out.reserve(static_cast<std::size_t>(num_edges));
    for (node_t i = 0; i < num_nodes; ++i)
      for (node_t j : neighbors(i))
        if (i < j) out.emplace_back(i, j);
    return out;
  }
};

// Symmetrizes, deduplicates and strips self-loops. Rejects out-of-range ids.
inline Graph build_graph(std::span<const edge_pair> edges, std::int64_t num_nodes) {
  if (num_nodes < 0) throw error("build_graph: negative node count");
  std::vector<edge_pair> directed;
  directed.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
      throw error("build_graph: edge (" + std::to_string(u) + ", " +
                  std::to_string(v) + ") out of range for " +
                  std::to_string(num_nodes) + " nodes");
    if (u == v) continue;
    directed.emplace_back(u, v);
    directed.emplace_back(v, u);
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  Graph g;
  g.num_nodes = num_nodes;
  g.num_edges = static_cast<std::int64_t>(directed.size()) / 2;
  g.offsets.assign(static_cast<std::size_t>(num_nodes) + 1, 0);
  for (const auto& [u, v] : directed) g.offsets[static_cast<std::size_t>(u) + 1]++;
  for (std::size_t i = 1; i < g.offsets.size(); ++i) g.offsets[i] += g.offsets[i - 1];
  g.adj.reserve(directed.size());
  for (const auto& [u, v] : directed) g.adj.push_back(v);
  return g;
}

// Average node degree: 2|E| / |V| (0 for the empty graph).
inline double branching_factor(const Graph& g) {
  if (g.num_nodes == 0) return 0.0;
  return 2.0 * static_cast<double>(g.num_edges) / static_cast<double>(g.num_nodes);
}

struct FeatureMatrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> values;  // row-major

  std::span<const double> row(std::int64_t i) const {
    return {values.data() + i * cols, static_cast<std::size_t>(cols)};
  }
  std::span<double> row(std::int64_t i) {
    return {values.data() + i * cols, static_cast<std::size_t>(cols)};
  }
  double& at(std::int64_t i, std::int64_t j) { return values[i * cols + j]; }
  double at(std::int64_t i, std::int64_t j) const { return values[i * cols + j]; }
};

// Row-wise L1 normalization; all-zero rows pass through unchanged.
inline FeatureMatrix preprocess_features(const FeatureMatrix& f) {
  for (double v : f.values)
    if (!std::isfinite(v)) throw error("preprocess_features: non-finite entry");
  FeatureMatrix out = f;
  for (std::int64_t i = 0; i < out.rows; ++i) {
    auto r = out.row(i);
    double norm = 0.0;
    for (double v : r) norm += std::abs(v);
    if (norm > 0.0)
      for (double& v : r) v /= norm;
  }
  return out;
}

struct LabeledSplit {
  std::vector<std::int32_t> labels;
  std::vector<std::uint8_t> train_mask, val_mask, test_mask;
  std::int32_t num_classes = 0;
};

// Masks must be pairwise disjoint and every masked node must carry a valid class.
inline void validate_split(const LabeledSplit& s, std::int64_t num_nodes) {
  auto n = static_cast<std::size_t>(num_nodes);
  if (s.labels.size() != n || s.train_mask.size() != n ||
      s.val_mask.size() != n || s.test_mask.size() != n)
    throw error("validate_split: size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    int in = s.train_mask[i] + s.val_mask[i] + s.test_mask[i];
    if (in > 1)
      throw error("validate_split: node " + std::to_string(i) +
                  " in multiple splits");
    if (in == 1 && (s.labels[i] < 0 || s.labels[i] >= s.num_classes))
      throw error("validate_split: node " + std::to_string(i) +
                  " has invalid label " + std::to_string(s.labels[i]));
  }
}

}  // namespace hoga
