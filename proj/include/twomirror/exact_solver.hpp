#pragma once

// Primal network simplex specialized to the dense bipartite transportation
// problem: minimize sum_ij c_ij g_ij subject to row sums = supplies and
// column sums = demands, g >= 0. Returns a basic optimal solution together
// with exact tree duals (u_i + v_j = c_ij on basic arcs).
//
// The basis is a spanning tree over m + n nodes (sources then targets).
// Entering arc: most negative reduced cost found by block pricing over the
// lexicographically ordered arc list, ties to the lowest (i, j). Leaving
// arc: maximum flow reduction, ties to the first edge met along the cycle
// walk. After a long run of degenerate pivots the entering rule falls back
// to Bland (first negative arc) which guarantees termination.

#include <algorithm>
#include <cstdint>
#include <tuple>
#include <limits>
#include <stdexcept>
#include <vector>

#include "twomirror/core.hpp"

namespace twomirror {

struct SimplexConfig {
  // Arcs scanned per pricing round; also the rotation step, so different
  // block sizes explore the arc list in different orders.
  int block_size = 8192;
  // Offset of the first pricing scan into the arc list.
  int start_offset = 0;
  std::int64_t max_pivots = 0;  // 0 -> automatic limit
};

struct TransportSolution {
  std::vector<PlanEntry> basis;  // basic arcs with their flows
  std::vector<double> u;         // source duals
  std::vector<double> v;         // target duals
  double objective = 0.0;
  std::int64_t pivots = 0;
};

namespace detail {

class NetworkSimplex {
 public:
  NetworkSimplex(const std::vector<double>& supply,
                 const std::vector<double>& demand,
                 const std::vector<double>& cost,  // row-major m x n
                 const SimplexConfig& cfg)
      : m_(static_cast<int>(supply.size())),
        n_(static_cast<int>(demand.size())),
        cost_(cost),
        cfg_(cfg) {
    a_ = supply;
    b_ = demand;
    double scale = 1.0;
    for (double c : cost_) scale = std::max(scale, std::abs(c));
    tol_ = 1e-13 * scale;
  }

  TransportSolution solve() {
    build_initial_basis();
    rebuild_tree();

    const std::int64_t arc_count = static_cast<std::int64_t>(m_) * n_;
    std::int64_t max_pivots = cfg_.max_pivots > 0
                                  ? cfg_.max_pivots
                                  : 200LL * (m_ + n_) + 10000;
    std::int64_t degenerate_run = 0;
    bool bland = false;
    std::int64_t pos = cfg_.start_offset % arc_count;
    std::int64_t pivots = 0;

    for (;; ++pivots) {
      if (pivots > max_pivots)
        throw std::runtime_error("network simplex: pivot limit exceeded");
      int ei = -1, ej = -1;
      if (!bland) {
        if (!price_block(pos, ei, ej)) break;
      } else {
        if (!price_bland(ei, ej)) break;
      }
      const double theta = pivot(ei, ej);
      if (theta == 0.0) {
        if (++degenerate_run > 4LL * (m_ + n_)) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }
    }

    TransportSolution out;
    out.u = u_;
    out.v = v_;
    out.pivots = pivots;
    double obj = 0.0;
    for (int node = 1; node < m_ + n_; ++node) {
      const auto [i, j] = edge_endpoints(node);
      out.basis.push_back(PlanEntry{i, j, flow_[node]});
      obj += flow_[node] * cost_[static_cast<std::size_t>(i) * n_ + j];
    }
    out.objective = obj;
    return out;
  }

 private:
  // Node ids: 0..m-1 sources, m..m+n-1 targets. The tree is stored as
  // parent pointers; flow_[node] is the flow on the edge to its parent.
  int m_, n_;
  std::vector<double> a_, b_;
  const std::vector<double>& cost_;
  SimplexConfig cfg_;

  std::vector<int> parent_, depth_;
  std::vector<double> flow_;  // indexed by child node
  std::vector<std::vector<int>> adj_;
  std::vector<double> u_, v_;
  double tol_ = 1e-13;

  std::pair<int, int> edge_endpoints(int child) const {
    const int par = parent_[child];
    const int src = child < m_ ? child : par;
    const int tgt = child < m_ ? par : child;
    return {src, tgt - m_};
  }

  double arc_cost(int i, int j) const {
    return cost_[static_cast<std::size_t>(i) * n_ + j];
  }

  // Northwest-corner initial basis; yields a spanning path with m+n-1 arcs.
  void build_initial_basis() {
    adj_.assign(m_ + n_, {});
    std::vector<double> rem_a = a_, rem_b = b_;
    int i = 0, j = 0;
    std::vector<std::tuple<int, int, double>> arcs;
    while (i < m_ && j < n_) {
      const double f = std::min(rem_a[i], rem_b[j]);
      arcs.emplace_back(i, j, f);
      rem_a[i] -= f;
      rem_b[j] -= f;
      if (i == m_ - 1 && j == n_ - 1) break;
      // On ties advance the row, keeping the column arc (possibly with zero
      // flow) so the basis stays a tree.
      if (rem_a[i] <= rem_b[j] && i < m_ - 1)
        ++i;
      else
        ++j;
    }
    for (auto& [ai, aj, af] : arcs) {
      adj_[ai].push_back(m_ + aj);
      adj_[m_ + aj].push_back(ai);
      init_flows_.emplace_back(ai, m_ + aj, af);
    }
  }

  std::vector<std::tuple<int, int, double>> init_flows_;

  // Recomputes parent/depth/duals from the adjacency tree and, on the first
  // call, assigns the initial flows onto the parent-edge representation.
  void rebuild_tree() {
    const int N = m_ + n_;
    parent_.assign(N, -1);
    depth_.assign(N, 0);
    u_.assign(m_, 0.0);
    v_.assign(n_, 0.0);
    if (flow_.empty()) flow_.assign(N, 0.0);
    std::vector<int> order;
    order.reserve(N);
    std::vector<char> seen(N, 0);
    order.push_back(0);
    seen[0] = 1;
    for (std::size_t q = 0; q < order.size(); ++q) {
      const int node = order[q];
      for (int nb : adj_[node]) {
        if (!seen[nb]) {
          seen[nb] = 1;
          parent_[nb] = node;
          depth_[nb] = depth_[node] + 1;
          order.push_back(nb);
        }
      }
    }
    if (static_cast<int>(order.size()) != N)
      throw std::runtime_error("network simplex: basis is not spanning");
    for (int node : order) {
      if (node == 0) continue;
      const auto [i, j] = edge_endpoints(node);
      if (node < m_)
        u_[i] = arc_cost(i, j) - v_[j];
      else
        v_[j] = arc_cost(i, j) - u_[i];
    }
    if (!init_flows_.empty()) {
      for (auto& [x, y, f] : init_flows_) {
        const int child = parent_[y] == x ? y : x;
        flow_[child] = f;
      }
      init_flows_.clear();
    }
  }

  bool price_block(std::int64_t& pos, int& ei, int& ej) const {
    const std::int64_t arc_count = static_cast<std::int64_t>(m_) * n_;
    const double tol = tol_;
    std::int64_t scanned = 0;
    while (scanned < arc_count) {
      double best = -tol;
      std::int64_t best_arc = -1;
      const std::int64_t block =
          std::min<std::int64_t>(cfg_.block_size, arc_count - scanned);
      for (std::int64_t k = 0; k < block; ++k) {
        const std::int64_t arc = (pos + k) % arc_count;
        const int i = static_cast<int>(arc / n_);
        const int j = static_cast<int>(arc % n_);
        const double r = arc_cost(i, j) - u_[i] - v_[j];
        if (r < best || (r == best && best_arc >= 0 && arc < best_arc)) {
          best = r;
          best_arc = arc;
        }
      }
      scanned += block;
      pos = (pos + block) % arc_count;
      if (best_arc >= 0) {
        ei = static_cast<int>(best_arc / n_);
        ej = static_cast<int>(best_arc % n_);
        return true;
      }
    }
    return false;
  }

  bool price_bland(int& ei, int& ej) const {
    const double tol = tol_;
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < n_; ++j)
        if (arc_cost(i, j) - u_[i] - v_[j] < -tol) {
          ei = i;
          ej = j;
          return true;
        }
    return false;
  }


  // Applies one pivot with entering arc (ei, ej); returns the flow shift.
  double pivot(int ei, int ej) {
    const int s = ei, t = m_ + ej;
    // Collect the tree paths from both endpoints up to their LCA.
    std::vector<int> path_s, path_t;
    {
      int x = s, y = t;
      while (depth_[x] > depth_[y]) {
        path_s.push_back(x);
        x = parent_[x];
      }
      while (depth_[y] > depth_[x]) {
        path_t.push_back(y);
        y = parent_[y];
      }
      while (x != y) {
        path_s.push_back(x);
        path_t.push_back(y);
        x = parent_[x];
        y = parent_[y];
      }
    }
    // Signs alternate around the cycle starting with + on the entering arc.
    // Walk order: entering (s -> t), then t upward, then s's path downward.
    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;  // child node identifying the leaving edge
    int sign = -1;
    for (int node : path_t) {
      if (sign < 0 && flow_[node] < theta) {
        theta = flow_[node];
        leave = node;
      }
      sign = -sign;
    }
    sign = -1;
    for (auto it = path_s.begin(); it != path_s.end(); ++it) {
      // Traversing s upward is the reverse walk direction; the edge above
      // path_s.front() == s carries sign -1, alternating from there.
      if (sign < 0 && (flow_[*it] < theta ||
                       (flow_[*it] == theta && leave == -1))) {
        theta = flow_[*it];
        leave = *it;
      }
      sign = -sign;
    }
    if (leave == -1)
      throw std::runtime_error("network simplex: unbounded pivot");

    // Shift flows around the cycle.
    sign = -1;
    for (int node : path_t) {
      flow_[node] += sign < 0 ? -theta : theta;
      sign = -sign;
    }
    sign = -1;
    for (int node : path_s) {
      flow_[node] += sign < 0 ? -theta : theta;
      sign = -sign;
    }

    // Swap the leaving edge for the entering one and rebuild.
    const int lp = parent_[leave];
    auto drop = [this](int x, int y) {
      auto& va = adj_[x];
      va.erase(std::find(va.begin(), va.end(), y));
    };
    drop(leave, lp);
    drop(lp, leave);
    adj_[s].push_back(t);
    adj_[t].push_back(s);

    std::vector<double> edge_flow_backup = flow_;
    std::vector<int> old_parent = parent_;
    rebuild_tree();
    // Re-express flows in the new parent orientation: each tree edge keeps
    // its flow value regardless of which endpoint is the child.
    std::vector<double> new_flow(m_ + n_, 0.0);
    for (int node = 0; node < m_ + n_; ++node) {
      if (node == s && parent_[node] == t) {
        new_flow[node] = theta;
        continue;
      }
      if (node == t && parent_[node] == s) {
        new_flow[node] = theta;
        continue;
      }
      if (parent_[node] < 0) continue;
      const int p = parent_[node];
      if (old_parent[node] == p)
        new_flow[node] = edge_flow_backup[node];
      else if (old_parent[p] == node)
        new_flow[node] = edge_flow_backup[p];
      else
        throw std::runtime_error("network simplex: tree bookkeeping error");
    }
    flow_ = std::move(new_flow);
    return theta;
  }
};

}  // namespace detail

// Solves the transportation problem exactly. Supplies and demands must have
// equal totals (callers go through validate_problem first).
inline TransportSolution solve_transportation(
    const std::vector<double>& supply, const std::vector<double>& demand,
    const std::vector<double>& cost, const SimplexConfig& cfg = {}) {
  if (supply.empty() || demand.empty())
    throw std::invalid_argument("solve_transportation: empty side");
  detail::NetworkSimplex solver(supply, demand, cost, cfg);
  return solver.solve();
}

}  // namespace twomirror
