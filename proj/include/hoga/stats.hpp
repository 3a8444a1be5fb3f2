// Paired statistical comparison used by the experiment tables: two-sided
// Wilcoxon signed-rank test. Zero differences are dropped, tied absolute
// differences get averaged ranks. For n <= 25 remaining pairs the exact null
// distribution of W+ is computed (dynamic program over the 2^n sign
// assignments); beyond that a normal approximation with tie correction.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "hoga/common.hpp"

namespace hoga {

inline double wilcoxon_signed_rank(std::span<const double> a,
                                   std::span<const double> b) {
  if (a.size() != b.size()) throw error("wilcoxon: length mismatch");
  if (a.size() < 5) throw error("wilcoxon: need at least 5 pairs");

  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.empty()) return 1.0;  // identical sequences
  const std::size_t n = diffs.size();

  // Ranks of |d| with ties averaged, scaled by 2 so they stay integral.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return std::abs(diffs[x]) < std::abs(diffs[y]);
  });
  std::vector<std::int64_t> rank2(n, 0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && std::abs(diffs[order[j]]) == std::abs(diffs[order[i]])) ++j;
    // positions i+1 .. j (1-based) share average rank (i+j+1)/2
    const std::int64_t r2 = static_cast<std::int64_t>(i + j + 1);
    for (std::size_t k = i; k < j; ++k) rank2[order[k]] = r2;
    i = j;
  }

  std::int64_t w2_plus = 0, s2 = 0;
  for (std::size_t k = 0; k < n; ++k) {
    s2 += rank2[k];
    if (diffs[k] > 0.0) w2_plus += rank2[k];
  }

  if (n <= 25) {
    // dp[s] = number of sign assignments with scaled W+ = s
    std::vector<double> dp(static_cast<std::size_t>(s2) + 1, 0.0);
    dp[0] = 1.0;
    for (std::size_t k = 0; k < n; ++k)
      for (std::int64_t s = s2; s >= rank2[k]; --s)
        dp[static_cast<std::size_t>(s)] += dp[static_cast<std::size_t>(s - rank2[k])];
    const std::int64_t center = s2 / 2;  // s2 = n(n+1) is even
    const std::int64_t dev = std::abs(w2_plus - center);
    double tail = 0.0;
    for (std::int64_t s = 0; s <= s2; ++s)
      if (s <= center - dev || s >= center + dev)
        tail += dp[static_cast<std::size_t>(s)];
    double p = tail / std::pow(2.0, static_cast<double>(n));
    return std::min(p, 1.0);
  }

  // Normal approximation with tie correction.
  const double w_plus = static_cast<double>(w2_plus) / 2.0;
  const double dn = static_cast<double>(n);
  const double mu = dn * (dn + 1.0) / 4.0;
  double tie_term = 0.0;
  std::size_t g = 0;
  while (g < n) {
    std::size_t h = g;
    while (h < n && std::abs(diffs[order[h]]) == std::abs(diffs[order[g]])) ++h;
    const double t = static_cast<double>(h - g);
    tie_term += t * t * t - t;
    g = h;
  }
  const double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_term / 48.0;
  const double z = (w_plus - mu) / std::sqrt(var);
  double p = std::erfc(std::abs(z) / std::sqrt(2.0));
  return std::min(std::max(p, 1e-300), 1.0);
}

}  // namespace hoga
