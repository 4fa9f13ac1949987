#pragma once

// Core domain types for the two-mirror beam shaping solver: weighted point
// clouds standing in for the input/output intensities, the problem record,
// reflector height pairs, transport plans, and the paraboloid primitives
// every other module is built from.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace twomirror {

using Point = std::vector<double>;

inline bool finite(const Point& p) {
  for (double c : p)
    if (!std::isfinite(c)) return false;
  return true;
}

inline double sq_dist(const Point& a, const Point& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("sq_dist: dimension mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

// Half squared distance |x-p|^2 / 2, the transport cost per unit mass.
inline double quadratic_cost(const Point& x, const Point& p) {
  return 0.5 * sq_dist(x, p);
}

// Paraboloid focused at (p, w) with focal parameter beta, evaluated at x.
// The first reflector is an envelope of these.
inline double paraboloid_k(const Point& x, const Point& p, double w,
                           double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("paraboloid_k: beta <= 0");
  if (!finite(x) || !finite(p) || !std::isfinite(w))
    throw std::invalid_argument("paraboloid_k: non-finite input");
  return (beta * beta - sq_dist(x, p)) / (2.0 * beta) + w;
}

// Paraboloid focused at (x, z), evaluated at p; envelope family of the
// second reflector. Satisfies h(p; x, z, beta) == -k(x; p, -z, beta).
inline double paraboloid_h(const Point& p, const Point& x, double z,
                           double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("paraboloid_h: beta <= 0");
  if (!finite(x) || !finite(p) || !std::isfinite(z))
    throw std::invalid_argument("paraboloid_h: non-finite input");
  return (sq_dist(x, p) - beta * beta) / (2.0 * beta) + z;
}

// Weighted point cloud on the base hyperplane; represents a discretized
// intensity distribution. Immutable after construction.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  DiscreteMeasure(std::vector<Point> points, std::vector<double> weights)
      : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.size() != weights_.size())
      throw std::invalid_argument("DiscreteMeasure: points/weights mismatch");
    if (points_.empty())
      throw std::invalid_argument("DiscreteMeasure: empty support");
    const std::size_t n = points_.front().size();
    bool any_positive = false;
    for (const Point& p : points_) {
      if (p.size() != n)
        throw std::invalid_argument("DiscreteMeasure: ragged dimensions");
      if (!finite(p))
        throw std::invalid_argument("DiscreteMeasure: non-finite point");
    }
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w))
        throw std::invalid_argument("DiscreteMeasure: bad weight");
      if (w > 0.0) any_positive = true;
    }
    if (!any_positive)
      throw std::invalid_argument("DiscreteMeasure: all weights zero");
    total_mass_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  }

  const std::vector<Point>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return points_.size(); }
  std::size_t dim() const { return points_.front().size(); }
  double total_mass() const { return total_mass_; }

  DiscreteMeasure scaled(double factor) const {
    std::vector<double> w = weights_;
    for (double& v : w) v *= factor;
    return DiscreteMeasure(points_, std::move(w));
  }

 private:
  std::vector<Point> points_;
  std::vector<double> weights_;
  double total_mass_ = 0.0;
};

struct ProblemSpec {
  DiscreteMeasure source;  // input intensity I on Omega
  DiscreteMeasure target;  // output intensity L on T
  double beta = 1.0;       // reduced optical path length, > 0
  double mass_tolerance = 1e-6;
};

enum class ReflectorKind { TypeA, TypeB };
enum class GaugeAnchor { Raw, MinZetaZero };

// Sampled reflector heights: zeta on the source support, omega on the
// target support. Type A pairs satisfy
//   zeta_i - omega_j >= (beta^2 - |x_i - p_j|^2) / (2 beta),
// type B the reversed inequality.
struct ReflectorPair {
  std::vector<double> zeta;
  std::vector<double> omega;
  double beta = 1.0;
  ReflectorKind kind = ReflectorKind::TypeA;
  GaugeAnchor gauge = GaugeAnchor::Raw;
};

struct PlanEntry {
  int i = 0;
  int j = 0;
  double mass = 0.0;
};

struct TransportPlan {
  std::vector<PlanEntry> entries;
  double cost = 0.0;  // sum gamma_ij |x_i - p_j|^2 / 2
};

inline double plan_cost(const std::vector<PlanEntry>& entries,
                        const ProblemSpec& spec) {
  double c = 0.0;
  for (const PlanEntry& e : entries)
    c += e.mass * quadratic_cost(spec.source.points()[e.i],
                                 spec.target.points()[e.j]);
  return c;
}

// Marginal defect of a plan against the spec weights, as max relative error.
inline double plan_marginal_error(const TransportPlan& plan,
                                  const ProblemSpec& spec) {
  std::vector<double> row(spec.source.size(), 0.0);
  std::vector<double> col(spec.target.size(), 0.0);
  for (const PlanEntry& e : plan.entries) {
    row[e.i] += e.mass;
    col[e.j] += e.mass;
  }
  const double scale = spec.source.total_mass();
  double err = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i)
    err = std::max(err, std::abs(row[i] - spec.source.weights()[i]) / scale);
  for (std::size_t j = 0; j < col.size(); ++j)
    err = std::max(err, std::abs(col[j] - spec.target.weights()[j]) / scale);
  return err;
}

struct UnsolvableProblem : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BalanceViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ProblemTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidatedProblem {
  ProblemSpec spec;        // zero-weight points dropped, target rescaled
  double rescale = 1.0;    // factor applied to target weights
};

// Normalizes a problem: drops zero-weight points, rescales the target so the
// masses match exactly, and rejects gross imbalance unless forced.
inline ValidatedProblem validate_problem(const ProblemSpec& in,
                                         bool force = false) {
  auto strip = [](const DiscreteMeasure& m) {
    std::vector<Point> pts;
    std::vector<double> w;
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (m.weights()[k] > 0.0) {
        pts.push_back(m.points()[k]);
        w.push_back(m.weights()[k]);
      }
    }
    if (pts.empty()) throw UnsolvableProblem("empty support after dropping zero weights");
    return DiscreteMeasure(std::move(pts), std::move(w));
  };
  if (!(in.beta > 0.0)) throw std::invalid_argument("validate_problem: beta <= 0");
  if (in.source.dim() != in.target.dim())
    throw std::invalid_argument("validate_problem: dimension mismatch");
  DiscreteMeasure src = strip(in.source);
  DiscreteMeasure tgt = strip(in.target);
  const double ms = src.total_mass();
  const double mt = tgt.total_mass();
  const double rel = std::abs(ms - mt) / ms;
  if (rel > in.mass_tolerance && !force)
    throw BalanceViolation("mass mismatch " + std::to_string(rel) +
                           " exceeds tolerance " +
                           std::to_string(in.mass_tolerance));
  const double factor = ms / mt;
  if (factor != 1.0) tgt = tgt.scaled(factor);
  ValidatedProblem out;
  out.spec = ProblemSpec{std::move(src), std::move(tgt), in.beta,
                         in.mass_tolerance};
  out.rescale = factor;
  return out;
}

// Admissibility slack of a pair: min over (i, j) of the constraint margin.
// Nonnegative (up to tolerance) for valid type A pairs; for type B the
// margin is negated so the same convention applies.
inline double admissibility_margin(const ReflectorPair& pair,
                                   const ProblemSpec& spec) {
  double margin = std::numeric_limits<double>::infinity();
  const auto& xs = spec.source.points();
  const auto& ps = spec.target.points();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < ps.size(); ++j) {
      const double rhs =
          (pair.beta * pair.beta - sq_dist(xs[i], ps[j])) / (2.0 * pair.beta);
      double m = pair.zeta[i] - pair.omega[j] - rhs;
      if (pair.kind == ReflectorKind::TypeB) m = -m;
      margin = std::min(margin, m);
    }
  }
  return margin;
}

}  // namespace twomirror
