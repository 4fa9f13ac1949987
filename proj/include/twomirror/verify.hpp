#pragma once

// Independent checks on a solved design: constancy of the optical path
// length, the reflection law at both mirrors, pushforward of the input
// intensity onto the output one, a Monge-Ampere residual on smooth
// instances, and LP optimality certificates.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "twomirror/core.hpp"
#include "twomirror/ot.hpp"
#include "twomirror/reflector.hpp"

namespace twomirror {

struct CheckThresholds {
  double opl = 1e-9;
  double flat_reflection = 1e-12;
  double pushforward_plan = 1e-10;
  double energy_balance = 1e-12;
  double slackness = 1e-9;
  double duality = 1e-9;
};

struct RandomPlanStats {
  int count = 0;
  double min_cost = 0.0;
  double max_cost = 0.0;
  double mean_cost = 0.0;
};

struct VerificationReport {
  double opl_max_abs_dev = 0.0;
  double reflection_max_angle_residual = 0.0;  // radians
  double pushforward_l1_error = 0.0;           // plan-based, fraction of mass
  double pushforward_map_l1_error = 0.0;       // single-valued-map accounting
  std::vector<double> monge_ampere_residuals;
  double energy_balance_rel_error = 0.0;
  double cost_A = 0.0;
  double cost_B = 0.0;
  RandomPlanStats random_plan_costs;
  bool opl_passed = false;
  bool reflection_passed = false;
  bool pushforward_passed = false;
  bool energy_passed = false;
  bool certificate_passed = false;
};

// Max over the source support of |z - w(P(x)) + t - beta|, computed from
// the stored heights. Zero up to roundoff whenever the pair is tight.
inline double check_opl(const ReflectorPair& pair, const ProblemSpec& spec) {
  double dev = 0.0;
  for (std::size_t i = 0; i < spec.source.size(); ++i) {
    const Point& x = spec.source.points()[i];
    const int j = trace_index(x, pair, spec);
    const double z = pair.zeta[i];
    const double w = pair.omega[j];
    const double dz = z - w;
    const double t =
        std::sqrt(sq_dist(x, spec.target.points()[j]) + dz * dz);
    dev = std::max(dev, std::abs(dz + t - pair.beta));
  }
  return dev;
}

namespace detail {

inline double angle_between(const std::vector<double>& a,
                            const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  const double denom = std::sqrt(na * nb);
  if (denom == 0.0) return 0.0;
  return std::acos(std::clamp(dot / denom, -1.0, 1.0));
}

// Reflects direction dir off the surface normal implied by gradient grad
// (surface a height field; normal (-grad, 1) before normalization).
inline std::vector<double> reflect(const std::vector<double>& dir,
                                   const Point& grad) {
  const std::size_t n = grad.size();
  std::vector<double> u(n + 1);
  double norm2 = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    u[k] = -grad[k];
    norm2 += grad[k] * grad[k];
  }
  u[n] = 1.0;
  double dot = 0.0;
  for (std::size_t k = 0; k <= n; ++k) dot += dir[k] * u[k];
  std::vector<double> out(n + 1);
  for (std::size_t k = 0; k <= n; ++k)
    out[k] = dir[k] - 2.0 * dot * u[k] / norm2;
  return out;
}

}  // namespace detail

// Reflection-law residual. The first mirror's slope at x is read off the
// transport structure itself, grad z = (P(x) - x) / beta, and the second
// mirror's slope at p = P(x) is grad w = (p - x_rep) / beta where x_rep is
// a canonical preimage of p: the lowest source index tracing to p.
// Residual 1 is the angle between the direction reflected off the first
// mirror and the actual segment to the second hit point, which is zero up
// to roundoff by the focal property of the paraboloids. Residual 2 is the
// angle between the twice-reflected direction and the axis; it is nonzero
// exactly where p has several preimages and the canonical one differs from
// the traced source, so it measures the angular spread of the contact
// facets and shrinks as the discretization refines. Returns the max of
// both over the source support. The third argument is reserved as a
// tolerance knob and is currently unused.
inline double check_reflection_law(const ReflectorPair& pair,
                                   const ProblemSpec& spec,
                                   double /*tol*/ = 1e-9) {
  const std::size_t n = spec.source.dim();
  const double beta = pair.beta;
  std::vector<double> axis(n + 1, 0.0);
  axis[n] = 1.0;

  // Trace every source point once; keep the lowest preimage per target.
  const std::size_t m = spec.source.size();
  std::vector<int> tj(m);
  std::vector<int> rep(spec.target.size(), -1);
  for (std::size_t i = 0; i < m; ++i) {
    tj[i] = trace_index(spec.source.points()[i], pair, spec);
    if (rep[tj[i]] < 0) rep[tj[i]] = static_cast<int>(i);
  }

  double worst = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const Point& x = spec.source.points()[i];
    const int j = tj[i];
    const Point& p = spec.target.points()[j];
    const RayTraceResult r = ray_trace(x, pair, spec);

    Point gz(n), gw(n);
    const Point& xr = spec.source.points()[rep[j]];
    for (std::size_t k = 0; k < n; ++k) {
      gz[k] = (p[k] - x[k]) / beta;
      gw[k] = (p[k] - xr[k]) / beta;
    }

    const std::vector<double> y = detail::reflect(axis, gz);
    std::vector<double> seg(n + 1);
    for (std::size_t k = 0; k < n; ++k) seg[k] = p[k] - x[k];
    seg[n] = r.w_height - r.z_height;
    worst = std::max(worst, detail::angle_between(y, seg));

    const std::vector<double> out = detail::reflect(y, gw);
    worst = std::max(worst, detail::angle_between(out, axis));
  }
  return worst;
}

struct PushforwardResult {
  double plan_l1 = 0.0;  // plan-based accounting, fraction of total mass
  double map_l1 = 0.0;   // single-valued-map accounting
};

// Compares the pushforward of the source intensity against the target
// intensity over a binning of the target support. bin_of maps a target
// index to a bin id in [0, bins).
inline PushforwardResult check_pushforward(
    const ReflectorPair& pair, const ProblemSpec& spec,
    const TransportPlan& plan, const std::vector<int>& bin_of, int bins) {
  if (static_cast<std::size_t>(spec.target.size()) != bin_of.size())
    throw std::invalid_argument("check_pushforward: bad bin assignment");
  for (int b : bin_of)
    if (b < 0 || b >= bins)
      throw std::invalid_argument("check_pushforward: bin out of range");
  std::vector<double> want(bins, 0.0), via_plan(bins, 0.0), via_map(bins, 0.0);
  for (std::size_t j = 0; j < spec.target.size(); ++j)
    want[bin_of[j]] += spec.target.weights()[j];
  for (const PlanEntry& e : plan.entries) via_plan[bin_of[e.j]] += e.mass;
  for (std::size_t i = 0; i < spec.source.size(); ++i) {
    const int j = trace_index(spec.source.points()[i], pair, spec);
    via_map[bin_of[j]] += spec.source.weights()[i];
  }
  const double M = spec.source.total_mass();
  PushforwardResult out;
  for (int b = 0; b < bins; ++b) {
    out.plan_l1 += std::abs(via_plan[b] - want[b]);
    out.map_l1 += std::abs(via_map[b] - want[b]);
  }
  out.plan_l1 /= M;
  out.map_l1 /= M;
  return out;
}

// Monge-Ampere residual of a solved pair on one grid level: median over
// interior grid nodes of |L(grad V) |det Hess V| - I| / max I, with grad
// and Hess taken by central differences of the eval-based potential at the
// grid spacing. The densities are the analytic ones the instance was
// sampled from. Median rather than max: finite differences are allowed to
// blow up where the weak solution is legitimately non-smooth.
inline double monge_ampere_residual(
    const ReflectorPair& pair, const ProblemSpec& spec, const GridSpec& grid,
    const std::function<double(const Point&)>& density_I,
    const std::function<double(const Point&)>& density_L) {
  const std::size_t n = grid.origin.size();
  auto vf = [&](const Point& q) { return potential_V(q, pair, spec); };
  std::vector<double> residuals;
  double max_I = 0.0;

  std::vector<int> idx(n, 0);
  const std::size_t total = grid_node_count(grid);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Point x = grid_node(grid, flat);
    // Interior test: one full spacing away from every grid face.
    bool interior = true;
    std::size_t rem = flat;
    for (std::size_t k = n; k-- > 0;) {
      const int s = grid.shape[k];
      const int ik = static_cast<int>(rem % static_cast<std::size_t>(s));
      rem /= static_cast<std::size_t>(s);
      if (ik == 0 || ik == s - 1) interior = false;
    }
    if (!interior) continue;

    const double v0 = vf(x);
    Point grad(n);
    std::vector<double> hess(n * n);
    for (std::size_t a = 0; a < n; ++a) {
      const double h = grid.spacing[a];
      Point xp = x, xm = x;
      xp[a] += h;
      xm[a] -= h;
      const double vp = vf(xp), vm = vf(xm);
      grad[a] = (vp - vm) / (2.0 * h);
      hess[a * n + a] = (vp - 2.0 * v0 + vm) / (h * h);
      for (std::size_t b = a + 1; b < n; ++b) {
        const double hb = grid.spacing[b];
        Point q1 = x, q2 = x, q3 = x, q4 = x;
        q1[a] += h; q1[b] += hb;
        q2[a] += h; q2[b] -= hb;
        q3[a] -= h; q3[b] += hb;
        q4[a] -= h; q4[b] -= hb;
        const double m = (vf(q1) - vf(q2) - vf(q3) + vf(q4)) / (4.0 * h * hb);
        hess[a * n + b] = hess[b * n + a] = m;
      }
    }
    double det = 1.0;
    if (n == 1) {
      det = hess[0];
    } else if (n == 2) {
      det = hess[0] * hess[3] - hess[1] * hess[2];
    } else {
      // Gaussian elimination for higher dimensions.
      std::vector<double> a2 = hess;
      for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r2 = col + 1; r2 < n; ++r2)
          if (std::abs(a2[r2 * n + col]) > std::abs(a2[piv * n + col])) piv = r2;
        if (piv != col) {
          for (std::size_t cc = 0; cc < n; ++cc)
            std::swap(a2[piv * n + cc], a2[col * n + cc]);
          det = -det;
        }
        const double d = a2[col * n + col];
        det *= d;
        if (d == 0.0) break;
        for (std::size_t r2 = col + 1; r2 < n; ++r2) {
          const double f = a2[r2 * n + col] / d;
          for (std::size_t cc = col; cc < n; ++cc)
            a2[r2 * n + cc] -= f * a2[col * n + cc];
        }
      }
    }
    const double I = density_I(x);
    max_I = std::max(max_I, I);
    residuals.push_back(std::abs(density_L(grad) * std::abs(det) - I));
  }
  if (residuals.empty())
    throw std::invalid_argument("monge_ampere_residual: no interior nodes");
  std::sort(residuals.begin(), residuals.end());
  const double median = residuals[residuals.size() / 2];
  return max_I > 0.0 ? median / max_I : median;
}

struct OptimalityCertificate {
  bool slackness_ok = false;
  double slackness_max_violation = 0.0;
  bool duality_ok = false;
  double duality_rel_error = 0.0;
  bool sandwich_ok = false;
  RandomPlanStats random_plans;
  bool passed() const { return slackness_ok && duality_ok && sandwich_ok; }
};

// Certifies optimality of an exact solve via (a) complementary slackness of
// the pair against the plan, (b) the strong-duality identity
// F = (beta/2) M - cost / beta, and (c) cost comparison against random
// feasible plans.
inline OptimalityCertificate certify_optimality(const ReflectorPair& pair,
                                                const ProblemSpec& spec,
                                                const TransportPlan& plan,
                                                int n_random_plans = 100,
                                                std::uint64_t seed = 7,
                                                const CheckThresholds& thr = {}) {
  OptimalityCertificate cert;
  const double beta = pair.beta;
  for (const PlanEntry& e : plan.entries) {
    const double rhs =
        (beta * beta -
         sq_dist(spec.source.points()[e.i], spec.target.points()[e.j])) /
        (2.0 * beta);
    cert.slackness_max_violation =
        std::max(cert.slackness_max_violation,
                 std::abs(pair.zeta[e.i] - pair.omega[e.j] - rhs));
  }
  cert.slackness_ok = cert.slackness_max_violation <= thr.slackness;

  const double M = spec.source.total_mass();
  const double f = functional_F(pair, spec);
  const double expected = 0.5 * beta * M - plan.cost / beta;
  cert.duality_rel_error =
      std::abs(f - expected) / std::max(1.0, std::abs(expected));
  cert.duality_ok = cert.duality_rel_error <= thr.duality;

  std::mt19937_64 rng(seed);
  const bool type_a = pair.kind == ReflectorKind::TypeA;
  cert.sandwich_ok = true;
  cert.random_plans.count = n_random_plans;
  cert.random_plans.min_cost = std::numeric_limits<double>::infinity();
  cert.random_plans.max_cost = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n_random_plans; ++k) {
    const TransportPlan rp = random_feasible_plan(spec, rng);
    cert.random_plans.min_cost = std::min(cert.random_plans.min_cost, rp.cost);
    cert.random_plans.max_cost = std::max(cert.random_plans.max_cost, rp.cost);
    cert.random_plans.mean_cost += rp.cost / n_random_plans;
    const double slack = type_a ? rp.cost - plan.cost : plan.cost - rp.cost;
    if (slack < -1e-9 * std::max(1.0, std::abs(plan.cost)))
      cert.sandwich_ok = false;
  }
  return cert;
}

inline double energy_balance_rel_error(const ProblemSpec& spec) {
  return std::abs(spec.source.total_mass() - spec.target.total_mass()) /
         spec.source.total_mass();
}

}  // namespace twomirror
