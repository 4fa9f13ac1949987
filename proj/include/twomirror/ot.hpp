#pragma once

// Discrete solve layer: exact transportation LP (type A <-> min cost,
// type B <-> max cost via negation), a log-domain Sinkhorn approximation,
// and the affine bridge between Kantorovich duals and reflector heights.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "twomirror/core.hpp"
#include "twomirror/exact_solver.hpp"

namespace twomirror {

enum class Direction { MinCost, MaxCost };
enum class Method { ExactLP, Entropic };

inline ReflectorKind kind_of(Direction d) {
  return d == Direction::MinCost ? ReflectorKind::TypeA : ReflectorKind::TypeB;
}

struct DualPotentials {
  // For MinCost: phi_i + psi_j <= |x_i - p_j|^2 / 2, equality on the plan
  // support. For MaxCost the inequality is reversed.
  std::vector<double> phi;
  std::vector<double> psi;
};

struct SolveResult {
  TransportPlan plan;
  DualPotentials duals;
  double objective = 0.0;
  std::int64_t iterations = 0;
  Method method = Method::ExactLP;
  double duality_gap = 0.0;
  bool converged = true;
};

struct SolverOptions {
  std::size_t max_points = 5000;  // per-side cap for the exact LP
  SimplexConfig simplex;
};

namespace detail {
inline void canonicalize_duals(std::vector<double>& u, std::vector<double>& v,
                               const std::vector<PlanEntry>& support,
                               const std::vector<double>& cost);
}  // namespace detail

inline std::vector<double> cost_matrix(const ProblemSpec& spec) {
  const auto& xs = spec.source.points();
  const auto& ps = spec.target.points();
  std::vector<double> c(xs.size() * ps.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ps.size(); ++j)
      c[i * ps.size() + j] = quadratic_cost(xs[i], ps[j]);
  return c;
}

// Exact solve of the discretized transport problem. The returned duals are
// tree duals of a basic optimal solution, so complementary slackness holds
// exactly on every plan entry.
inline SolveResult solve_exact(const ProblemSpec& spec, Direction direction,
                               const SolverOptions& opts = {},
                               const std::vector<double>* shared_cost = nullptr) {
  const std::size_t m = spec.source.size(), n = spec.target.size();
  if (m > opts.max_points || n > opts.max_points)
    throw ProblemTooLarge(
        "instance exceeds the exact-LP point cap; use the entropic method");
  std::vector<double> c = shared_cost ? *shared_cost : cost_matrix(spec);
  if (direction == Direction::MaxCost)
    for (double& v : c) v = -v;

  TransportSolution sol = solve_transportation(
      spec.source.weights(), spec.target.weights(), c, opts.simplex);

  SolveResult out;
  out.method = Method::ExactLP;
  out.iterations = sol.pivots;
  for (const PlanEntry& e : sol.basis)
    if (e.mass > 0.0) out.plan.entries.push_back(e);
  out.plan.cost = plan_cost(out.plan.entries, spec);
  detail::canonicalize_duals(sol.u, sol.v, out.plan.entries, c);
  out.objective =
      direction == Direction::MinCost ? sol.objective : -sol.objective;
  if (direction == Direction::MinCost) {
    out.duals.phi = sol.u;
    out.duals.psi = sol.v;
  } else {
    out.duals.phi = sol.u;
    out.duals.psi = sol.v;
    for (double& v : out.duals.phi) v = -v;
    for (double& v : out.duals.psi) v = -v;
  }
  double dual_obj = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    dual_obj += out.duals.phi[i] * spec.source.weights()[i];
  for (std::size_t j = 0; j < n; ++j)
    dual_obj += out.duals.psi[j] * spec.target.weights()[j];
  out.duality_gap = std::abs(out.plan.cost - dual_obj);
  return out;
}

namespace detail {

// Canonicalizes optimal duals so they depend only on the optimal plan, not
// on the particular simplex basis. Tight arcs (plan support) pin the duals
// within each connected component up to one additive constant; those
// constants are fixed at the midpoint of their feasible range, computed by
// shortest paths over the component graph of minimum cross slacks. The
// midpoint keeps every cross slack that can be positive strictly positive,
// so degenerate instances get an unambiguous ray-tracing map (and the
// identity instance gets its flat mirror back).
inline void canonicalize_duals(std::vector<double>& u, std::vector<double>& v,
                               const std::vector<PlanEntry>& support,
                               const std::vector<double>& cost) {
  const int m = static_cast<int>(u.size());
  const int n = static_cast<int>(v.size());
  std::vector<int> comp(m + n);
  for (int k = 0; k < m + n; ++k) comp[k] = k;
  std::function<int(int)> find = [&](int x) {
    while (comp[x] != x) {
      comp[x] = comp[comp[x]];
      x = comp[x];
    }
    return x;
  };
  for (const PlanEntry& e : support) {
    const int a = find(e.i), b = find(m + e.j);
    if (a != b) comp[a] = b;
  }
  std::vector<int> id(m + n, -1);
  int C = 0;
  for (int k = 0; k < m + n; ++k) {
    const int r = find(k);
    if (id[r] < 0) id[r] = C++;
    id[k] = id[r];
  }
  if (C == 1) return;

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> s(static_cast<std::size_t>(C) * C, inf);
  for (int i = 0; i < m; ++i) {
    const int a = id[i];
    for (int j = 0; j < n; ++j) {
      const int b = id[m + j];
      if (a == b) continue;
      const double slack =
          std::max(0.0, cost[static_cast<std::size_t>(i) * n + j] - u[i] - v[j]);
      double& cell = s[static_cast<std::size_t>(a) * C + b];
      cell = std::min(cell, slack);
    }
  }

  // Dense Dijkstra; weights are nonnegative slacks.
  auto dijkstra = [&](int src, bool reversed) {
    std::vector<double> dist(C, inf);
    std::vector<char> done(C, 0);
    dist[src] = 0.0;
    for (int round = 0; round < C; ++round) {
      int best = -1;
      for (int c = 0; c < C; ++c)
        if (!done[c] && dist[c] < inf && (best < 0 || dist[c] < dist[best]))
          best = c;
      if (best < 0) break;
      done[best] = 1;
      for (int c = 0; c < C; ++c) {
        if (done[c]) continue;
        const double w = reversed ? s[static_cast<std::size_t>(c) * C + best]
                                  : s[static_cast<std::size_t>(best) * C + c];
        if (w < inf && dist[best] + w < dist[c]) dist[c] = dist[best] + w;
      }
    }
    return dist;
  };
  const int anchor = id[0];
  const std::vector<double> fwd = dijkstra(anchor, false);  // t_b >= -fwd[b]
  const std::vector<double> rev = dijkstra(anchor, true);   // t_b <= rev[b]
  std::vector<double> t(C, 0.0);
  for (int c = 0; c < C; ++c)
    if (std::isfinite(fwd[c]) && std::isfinite(rev[c]))
      t[c] = 0.5 * (rev[c] - fwd[c]);
  for (int i = 0; i < m; ++i) u[i] += t[id[i]];
  for (int j = 0; j < n; ++j) v[j] -= t[id[m + j]];
}

inline double logsumexp(const std::vector<double>& terms) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double t : terms) mx = std::max(mx, t);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}

// Rounds an approximately feasible coupling onto the exact marginals:
// scale rows down, then columns down, then dump the remaining deficit as a
// rank-one correction (the feasibility-repair mass).
inline void round_to_marginals(std::vector<double>& gamma,
                               const std::vector<double>& a,
                               const std::vector<double>& b) {
  const std::size_t m = a.size(), n = b.size();
  std::vector<double> row(m, 0.0), col(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) row[i] += gamma[i * n + j];
  for (std::size_t i = 0; i < m; ++i) {
    const double s = row[i] > 0.0 ? std::min(1.0, a[i] / row[i]) : 0.0;
    for (std::size_t j = 0; j < n; ++j) gamma[i * n + j] *= s;
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) col[j] += gamma[i * n + j];
  for (std::size_t j = 0; j < n; ++j) {
    const double s = col[j] > 0.0 ? std::min(1.0, b[j] / col[j]) : 0.0;
    for (std::size_t i = 0; i < m; ++i) gamma[i * n + j] *= s;
  }
  std::vector<double> da(m, 0.0), db(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += gamma[i * n + j];
    da[i] = a[i] - s;
    total += da[i];
  }
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += gamma[i * n + j];
    db[j] = b[j] - s;
  }
  if (total > 0.0)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        gamma[i * n + j] += da[i] * db[j] / total;
}

}  // namespace detail

// Log-domain Sinkhorn iteration on the kernel exp(-c / epsilon). Marginals
// are restored exactly by the rounding step, so the returned plan is always
// feasible; `converged` reports whether the stopping rule was met.
inline SolveResult solve_entropic(const ProblemSpec& spec, Direction direction,
                                  double epsilon, std::int64_t max_iters = 20000,
                                  double tol = 1e-9) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("solve_entropic: epsilon <= 0");
  const std::size_t m = spec.source.size(), n = spec.target.size();
  std::vector<double> c = cost_matrix(spec);
  if (direction == Direction::MaxCost)
    for (double& v : c) v = -v;

  const double M = spec.source.total_mass();
  std::vector<double> la(m), lb(n);
  for (std::size_t i = 0; i < m; ++i)
    la[i] = std::log(spec.source.weights()[i] / M);
  for (std::size_t j = 0; j < n; ++j)
    lb[j] = std::log(spec.target.weights()[j] / M);

  std::vector<double> f(m, 0.0), g(n, 0.0), buf(std::max(m, n));
  std::int64_t it = 0;
  double marg_err = std::numeric_limits<double>::infinity();
  for (; it < max_iters; ++it) {
    for (std::size_t i = 0; i < m; ++i) {
      buf.resize(n);
      for (std::size_t j = 0; j < n; ++j)
        buf[j] = (g[j] - c[i * n + j]) / epsilon + lb[j];
      f[i] = -epsilon * detail::logsumexp(buf);
    }
    for (std::size_t j = 0; j < n; ++j) {
      buf.resize(m);
      for (std::size_t i = 0; i < m; ++i)
        buf[i] = (f[i] - c[i * n + j]) / epsilon + la[i];
      g[j] = -epsilon * detail::logsumexp(buf);
    }
    // Column update is exact by construction; check the row marginals.
    marg_err = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        s += std::exp((f[i] + g[j] - c[i * n + j]) / epsilon + la[i] + lb[j]);
      marg_err += std::abs(s - std::exp(la[i]));
    }
    if (marg_err < tol) {
      ++it;
      break;
    }
  }

  std::vector<double> gamma(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      gamma[i * n + j] =
          M * std::exp((f[i] + g[j] - c[i * n + j]) / epsilon + la[i] + lb[j]);
  detail::round_to_marginals(gamma, spec.source.weights(),
                             spec.target.weights());

  SolveResult out;
  out.method = Method::Entropic;
  out.iterations = it;
  out.converged = marg_err < tol;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (gamma[i * n + j] > 0.0)
        out.plan.entries.push_back(
            PlanEntry{static_cast<int>(i), static_cast<int>(j), gamma[i * n + j]});
  out.plan.cost = plan_cost(out.plan.entries, spec);
  out.objective = out.plan.cost;
  out.duals.phi = f;
  out.duals.psi = g;
  if (direction == Direction::MaxCost) {
    for (double& v : out.duals.phi) v = -v;
    for (double& v : out.duals.psi) v = -v;
  }
  double dual_obj = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    dual_obj += out.duals.phi[i] * spec.source.weights()[i];
  for (std::size_t j = 0; j < n; ++j)
    dual_obj += out.duals.psi[j] * spec.target.weights()[j];
  out.duality_gap = std::abs(out.plan.cost - dual_obj);
  return out;
}

// F(zeta, omega) = sum_i zeta_i I_i - sum_j omega_j L_j, the mass-weighted
// mean horizontal distance between the two reflector graphs.
inline double functional_F(const ReflectorPair& pair, const ProblemSpec& spec) {
  double f = 0.0;
  for (std::size_t i = 0; i < spec.source.size(); ++i)
    f += pair.zeta[i] * spec.source.weights()[i];
  for (std::size_t j = 0; j < spec.target.size(); ++j)
    f -= pair.omega[j] * spec.target.weights()[j];
  return f;
}

// Tightens a pair onto its paraboloid envelopes: zeta from omega, then
// omega from the new zeta. One pass lands on a mutual fixed point. The
// result is anchored so min zeta = 0.
inline ReflectorPair c_transform_pair(const ReflectorPair& in,
                                      const ProblemSpec& spec) {
  const auto& xs = spec.source.points();
  const auto& ps = spec.target.points();
  const bool type_a = in.kind == ReflectorKind::TypeA;
  ReflectorPair out = in;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double best = type_a ? -std::numeric_limits<double>::infinity()
                         : std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < ps.size(); ++j) {
      const double v = paraboloid_k(xs[i], ps[j], in.omega[j], in.beta);
      best = type_a ? std::max(best, v) : std::min(best, v);
    }
    out.zeta[i] = best;
  }
  for (std::size_t j = 0; j < ps.size(); ++j) {
    double best = type_a ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double v = paraboloid_h(ps[j], xs[i], out.zeta[i], in.beta);
      best = type_a ? std::min(best, v) : std::max(best, v);
    }
    out.omega[j] = best;
  }
  const double shift = *std::min_element(out.zeta.begin(), out.zeta.end());
  for (double& z : out.zeta) z -= shift;
  for (double& w : out.omega) w -= shift;
  out.gauge = GaugeAnchor::MinZetaZero;
  return out;
}

// Affine bridge from Kantorovich duals to reflector heights:
//   zeta_i = beta/2 - phi_i / beta,   omega_j = psi_j / beta.
// Dual feasibility maps exactly onto the admissibility inequality. The
// result is then envelope-tightened and gauge-anchored.
inline ReflectorPair duals_to_reflectors(const DualPotentials& duals,
                                         const ProblemSpec& spec,
                                         Direction direction,
                                         bool tighten = true) {
  ReflectorPair pair;
  pair.beta = spec.beta;
  pair.kind = kind_of(direction);
  pair.zeta.resize(duals.phi.size());
  pair.omega.resize(duals.psi.size());
  for (std::size_t i = 0; i < duals.phi.size(); ++i)
    pair.zeta[i] = spec.beta / 2.0 - duals.phi[i] / spec.beta;
  for (std::size_t j = 0; j < duals.psi.size(); ++j)
    pair.omega[j] = duals.psi[j] / spec.beta;
  if (!tighten) return pair;
  if (admissibility_margin(pair, spec) < -1e-9 * std::max(1.0, spec.beta))
    throw std::invalid_argument("duals_to_reflectors: infeasible duals");
  return c_transform_pair(pair, spec);
}

// Inverse of the affine bridge (before any gauge shift).
inline DualPotentials reflectors_to_duals(const ReflectorPair& pair) {
  DualPotentials d;
  d.phi.resize(pair.zeta.size());
  d.psi.resize(pair.omega.size());
  for (std::size_t i = 0; i < pair.zeta.size(); ++i)
    d.phi[i] = pair.beta * (pair.beta / 2.0 - pair.zeta[i]);
  for (std::size_t j = 0; j < pair.omega.size(); ++j)
    d.psi[j] = pair.beta * pair.omega[j];
  return d;
}

// Random feasible plan by a sequentially rounded greedy fill over permuted
// source/target orders; used as a comparator for the cost sandwich.
inline TransportPlan random_feasible_plan(const ProblemSpec& spec,
                                          std::mt19937_64& rng) {
  const std::size_t m = spec.source.size(), n = spec.target.size();
  std::vector<int> si(m), tj(n);
  for (std::size_t i = 0; i < m; ++i) si[i] = static_cast<int>(i);
  for (std::size_t j = 0; j < n; ++j) tj[j] = static_cast<int>(j);
  std::shuffle(si.begin(), si.end(), rng);
  std::shuffle(tj.begin(), tj.end(), rng);
  TransportPlan plan;
  std::size_t qi = 0, qj = 0;
  double ra = spec.source.weights()[si[0]];
  double rb = spec.target.weights()[tj[0]];
  while (true) {
    const double f = std::min(ra, rb);
    if (f > 0.0) plan.entries.push_back(PlanEntry{si[qi], tj[qj], f});
    ra -= f;
    rb -= f;
    if (ra <= rb) {
      if (++qi == m) break;
      ra = spec.source.weights()[si[qi]];
    } else {
      if (++qj == n) break;
      rb = spec.target.weights()[tj[qj]];
    }
  }
  plan.cost = plan_cost(plan.entries, spec);
  return plan;
}

// Random admissible pair of the requested kind: random omega, zeta taken as
// the corresponding envelope (plus a nonnegative bulge for type A / negative
// for type B so the pair is generically non-tight).
inline ReflectorPair random_admissible_pair(const ProblemSpec& spec,
                                            ReflectorKind kind,
                                            std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-0.5 * spec.beta, 0.5 * spec.beta);
  std::uniform_real_distribution<double> slack(0.0, 0.25 * spec.beta);
  ReflectorPair pair;
  pair.beta = spec.beta;
  pair.kind = kind;
  pair.omega.resize(spec.target.size());
  for (double& w : pair.omega) w = uni(rng);
  pair.zeta.assign(spec.source.size(), 0.0);
  const bool type_a = kind == ReflectorKind::TypeA;
  for (std::size_t i = 0; i < spec.source.size(); ++i) {
    double best = type_a ? -std::numeric_limits<double>::infinity()
                         : std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < spec.target.size(); ++j) {
      const double v = paraboloid_k(spec.source.points()[i],
                                    spec.target.points()[j], pair.omega[j],
                                    spec.beta);
      best = type_a ? std::max(best, v) : std::min(best, v);
    }
    pair.zeta[i] = best + (type_a ? slack(rng) : -slack(rng));
  }
  return pair;
}

}  // namespace twomirror
