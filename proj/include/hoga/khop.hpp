// Exact distance-k edge sets E_k via truncated breadth-first search.
//
// E_k connects node pairs whose shortest-path distance is exactly k, i.e. the
// edges of the hop-augmented graph G_k. |E_k| grows like O(b^k), so the
// sampler consumes per-node candidate sets N_k(i) on demand (see
// KhopNeighborCache); full materialization is reserved for stats and tests.

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hoga/graph.hpp"

namespace hoga {

inline constexpr node_t kUnreachable = -1;

// Distances from src, exact up to cap hops; beyond cap (or disconnected)
// nodes are marked kUnreachable.
inline std::vector<node_t> bfs_distances(const Graph& g, node_t src, int cap) {
  if (src < 0 || src >= g.num_nodes) throw error("bfs_distances: bad source");
  if (cap < 1) throw error("bfs_distances: cap must be >= 1");
  std::vector<node_t> dist(static_cast<std::size_t>(g.num_nodes), kUnreachable);
  std::vector<node_t> queue;
  queue.reserve(64);
  dist[static_cast<std::size_t>(src)] = 0;
  queue.push_back(src);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    node_t u = queue[head];
    node_t du = dist[static_cast<std::size_t>(u)];
    if (du == cap) continue;  // never expand past the cap
    for (node_t v : g.neighbors(u)) {
      auto& dv = dist[static_cast<std::size_t>(v)];
      if (dv == kUnreachable) {
        dv = du + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

// N_k(i): nodes at shortest-path distance exactly k, ascending.
inline std::vector<node_t> khop_neighbors(const Graph& g, node_t i, int k) {
  auto dist = bfs_distances(g, i, k);
  std::vector<node_t> out;
  for (node_t j = 0; j < g.num_nodes; ++j)
    if (dist[static_cast<std::size_t>(j)] == k) out.push_back(j);
  return out;
}

struct KHopEdgeSet {
  int k = 1;
  std::vector<edge_pair> pairs;  // (i, j) with i < j, sorted
};

// Full E_k. For k = 1 this reproduces the input edge list exactly.
inline KHopEdgeSet build_khop_edges(const Graph& g, int k) {
  if (k < 1) throw error("build_khop_edges: k must be >= 1");
  KHopEdgeSet out;
  out.k = k;
  for (node_t i = 0; i < g.num_nodes; ++i) {
    auto dist = bfs_distances(g, i, k);
    for (node_t j = i + 1; j < g.num_nodes; ++j)
      if (dist[static_cast<std::size_t>(j)] == k) out.pairs.emplace_back(i, j);
  }
  return out;
}

// |E_k| without materializing the pair list.
inline std::int64_t count_khop_edges(const Graph& g, int k) {
  if (k < 1) throw error("count_khop_edges: k must be >= 1");
  std::int64_t count = 0;
  for (node_t i = 0; i < g.num_nodes; ++i) {
    auto dist = bfs_distances(g, i, k);
    for (node_t j = i + 1; j < g.num_nodes; ++j)
      if (dist[static_cast<std::size_t>(j)] == k) ++count;
  }
  return count;
}

// Lazily materialized N_k lists, filled as a walk touches nodes. Lookups are
// deterministic, so sharing one cache across sampler runs is sound.
class KhopNeighborCache {
 public:
  KhopNeighborCache(const Graph& g, int k) : g_(g), k_(k) {
    if (k < 1) throw error("KhopNeighborCache: k must be >= 1");
    lists_.resize(static_cast<std::size_t>(g.num_nodes));
    filled_.assign(static_cast<std::size_t>(g.num_nodes), 0);
  }

  const std::vector<node_t>& candidates(node_t i) {
    auto idx = static_cast<std::size_t>(i);
    if (!filled_[idx]) {
      lists_[idx] = khop_neighbors(g_, i, k_);
      filled_[idx] = 1;
    }
    return lists_[idx];
  }

  int k() const { return k_; }
  const Graph& graph() const { return g_; }

 private:
  const Graph& g_;
  int k_;
  std::vector<std::vector<node_t>> lists_;
  std::vector<std::uint8_t> filled_;
};

// Text pair format shared by khop dumps and the sample cache:
// one "i<TAB>j" line per pair, i < j, sorted.
inline void save_pairs(const std::filesystem::path& path,
                       const std::vector<edge_pair>& pairs) {
  std::ofstream out(path);
  if (!out) throw error("save_pairs: cannot open " + path.string());
  for (const auto& [i, j] : pairs) out << i << '\t' << j << '\n';
}

inline std::vector<edge_pair> load_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw error("load_pairs: cannot open " + path.string());
  std::vector<edge_pair> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const char* begin = line.data();
    const char* end = begin + line.size();
    node_t i = 0, j = 0;
    auto r1 = std::from_chars(begin, end, i);
    if (r1.ec != std::errc{} || r1.ptr == end)
      throw error("load_pairs: malformed line '" + line + "'");
    auto r2 = std::from_chars(r1.ptr + 1, end, j);
    if (r2.ec != std::errc{})
      throw error("load_pairs: malformed line '" + line + "'");
    pairs.emplace_back(i, j);
  }
  return pairs;
}

}  // namespace hoga
