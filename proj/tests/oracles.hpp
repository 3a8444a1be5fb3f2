// Test-only oracles and fixture builders. Everything here is implemented
// independently of the library's code paths (dense loops, Floyd-Warshall,
// direct summation) so the two routes can disagree when one is wrong.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hoga/graph.hpp"

namespace oracle {

inline constexpr int kUnreached = -1;

// All-pairs shortest paths by Floyd-Warshall on an explicit distance matrix.
inline std::vector<std::vector<int>> floyd_warshall(
    std::int64_t n, const std::vector<hoga::edge_pair>& edges) {
  const int inf = 1 << 28;
  std::vector<std::vector<int>> d(static_cast<std::size_t>(n),
                                  std::vector<int>(static_cast<std::size_t>(n), inf));
  for (std::int64_t i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& [u, v] : edges) {
    if (u == v) continue;
    d[u][v] = 1;
    d[v][u] = 1;
  }
  for (std::int64_t k = 0; k < n; ++k)
    for (std::int64_t i = 0; i < n; ++i) {
      if (d[i][k] >= inf) continue;
      for (std::int64_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
    }
  for (auto& row : d)
    for (auto& x : row)
      if (x >= inf) x = kUnreached;
  return d;
}

inline std::vector<hoga::edge_pair> fw_khop_pairs(
    const std::vector<std::vector<int>>& dist, int k) {
  std::vector<hoga::edge_pair> out;
  const auto n = static_cast<std::int64_t>(dist.size());
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i + 1; j < n; ++j)
      if (dist[i][j] == k)
        out.emplace_back(static_cast<hoga::node_t>(i), static_cast<hoga::node_t>(j));
  return out;
}

// --- fixture graphs ---------------------------------------------------------

inline std::vector<hoga::edge_pair> path_edges(int n) {
  std::vector<hoga::edge_pair> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return e;
}

inline std::vector<hoga::edge_pair> cycle_edges(int n) {
  auto e = path_edges(n);
  e.emplace_back(n - 1, 0);
  return e;
}

inline std::vector<hoga::edge_pair> star_edges(int leaves) {
  std::vector<hoga::edge_pair> e;
  for (int i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return e;
}

inline std::vector<hoga::edge_pair> erdos_renyi(int n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<hoga::edge_pair> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (static_cast<double>(rng() >> 11) * 0x1.0p-53 < p) e.emplace_back(i, j);
  return e;
}

inline hoga::FeatureMatrix random_features(std::int64_t rows, std::int64_t cols,
                                           std::uint64_t seed, double lo = -1.0,
                                           double hi = 1.0) {
  std::mt19937_64 rng(seed);
  hoga::FeatureMatrix f;
  f.rows = rows;
  f.cols = cols;
  f.values.resize(static_cast<std::size_t>(rows * cols));
  for (auto& v : f.values)
    v = lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  return f;
}

// --- numeric oracles --------------------------------------------------------

inline std::vector<double> triple_loop_matmul(const std::vector<double>& a,
                                              const std::vector<double>& b,
                                              std::int64_t n, std::int64_t p,
                                              std::int64_t m) {
  std::vector<double> c(static_cast<std::size_t>(n * m), 0.0);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::int64_t k = 0; k < p; ++k) acc += a[i * p + k] * b[k * m + j];
      c[i * m + j] = acc;
    }
  return c;
}

// exp(A t) for a small dense matrix, Taylor series with scaling and squaring.
inline std::vector<double> matrix_exponential(std::vector<double> a, std::int64_t n,
                                              double t) {
  for (auto& x : a) x *= t;
  int squarings = 0;
  double norm = 0.0;
  for (double x : a) norm = std::max(norm, std::abs(x));
  while (norm > 0.5) {
    for (auto& x : a) x /= 2.0;
    norm /= 2.0;
    ++squarings;
  }
  std::vector<double> result(static_cast<std::size_t>(n * n), 0.0);
  std::vector<double> term(result.size(), 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    result[i * n + i] = 1.0;
    term[i * n + i] = 1.0;
  }
  for (int k = 1; k <= 30; ++k) {
    term = triple_loop_matmul(term, a, n, n, n);
    for (auto& x : term) x /= static_cast<double>(k);
    for (std::size_t i = 0; i < result.size(); ++i) result[i] += term[i];
  }
  for (int s = 0; s < squarings; ++s)
    result = triple_loop_matmul(result, result, n, n, n);
  return result;
}

}  // namespace oracle
