#pragma once

// Independent oracles used by the tests; deliberately share no code with
// the solver path they check.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "twomirror/core.hpp"

namespace oracles {

// Minimum assignment cost by bitmask dynamic programming over column
// subsets; exact for n <= ~20.
inline double assignment_dp(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  const std::size_t full = std::size_t{1} << n;
  std::vector<double> dp(full, std::numeric_limits<double>::infinity());
  dp[0] = 0.0;
  for (std::size_t mask = 0; mask < full; ++mask) {
    if (!std::isfinite(dp[mask])) continue;
    const std::size_t row = static_cast<std::size_t>(std::popcount(mask));
    if (row == n) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask & (std::size_t{1} << j)) continue;
      const std::size_t next = mask | (std::size_t{1} << j);
      dp[next] = std::min(dp[next], dp[mask] + cost[row][j]);
    }
  }
  return dp[full - 1];
}

// O(n^3) Hungarian algorithm (potentials form); returns the optimal
// assignment row -> column and its cost.
inline double hungarian(const std::vector<std::vector<double>>& cost,
                        std::vector<int>* assignment = nullptr) {
  const int n = static_cast<int>(cost.size());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = std::numeric_limits<double>::infinity();
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  if (assignment) assignment->assign(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] > 0) {
      total += cost[p[j] - 1][j - 1];
      if (assignment) (*assignment)[p[j] - 1] = j - 1;
    }
  }
  return total;
}

// 1D transport oracle for equal-count uniform-weight supports: sort both
// sides and match in order (monotone; optimal for convex costs). For the
// max-cost problem the optimal match is anti-monotone.
struct SortMatch {
  std::vector<int> match;  // source index -> target index
  double cost = 0.0;       // sum of per-pair quadratic costs times weight
};

inline SortMatch sort_oracle_1d(const std::vector<double>& xs,
                                const std::vector<double>& ps,
                                double weight_per_point, bool anti = false) {
  const std::size_t n = xs.size();
  std::vector<int> xi(n), pi(n);
  std::iota(xi.begin(), xi.end(), 0);
  std::iota(pi.begin(), pi.end(), 0);
  std::sort(xi.begin(), xi.end(), [&](int a, int b) { return xs[a] < xs[b]; });
  std::sort(pi.begin(), pi.end(), [&](int a, int b) { return ps[a] < ps[b]; });
  if (anti) std::reverse(pi.begin(), pi.end());
  SortMatch out;
  out.match.assign(n, -1);
  for (std::size_t k = 0; k < n; ++k) {
    out.match[xi[k]] = pi[k];
    const double d = xs[xi[k]] - ps[pi[k]];
    out.cost += weight_per_point * 0.5 * d * d;
  }
  return out;
}

}  // namespace oracles
