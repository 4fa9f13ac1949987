#pragma once

// Continuous surface evaluation and ray tracing on top of a discrete
// reflector pair. Both reflectors are envelopes of paraboloids with focal
// parameter beta, so evaluation anywhere on the base hyperplane is an
// exhaustive argmax/argmin over the opposite support.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "twomirror/core.hpp"

namespace twomirror {

// First reflector height z(x): sup over target support of the paraboloids
// k_{p_j, omega_j} for type A, inf for type B. Defined on all of the base
// hyperplane, not just the source hull.
inline double eval_first(const Point& x, const ReflectorPair& pair,
                         const ProblemSpec& spec) {
  const auto& ps = spec.target.points();
  if (ps.empty()) throw std::logic_error("eval_first: empty target support");
  const bool type_a = pair.kind == ReflectorKind::TypeA;
  double best = type_a ? -std::numeric_limits<double>::infinity()
                       : std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < ps.size(); ++j) {
    const double v = paraboloid_k(x, ps[j], pair.omega[j], pair.beta);
    best = type_a ? std::max(best, v) : std::min(best, v);
  }
  return best;
}

// Second reflector height w(p): inf over source support of h_{x_i, zeta_i}
// for type A, sup for type B.
inline double eval_second(const Point& p, const ReflectorPair& pair,
                          const ProblemSpec& spec) {
  const auto& xs = spec.source.points();
  if (xs.empty()) throw std::logic_error("eval_second: empty source support");
  const bool type_a = pair.kind == ReflectorKind::TypeA;
  double best = type_a ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double v = paraboloid_h(p, xs[i], pair.zeta[i], pair.beta);
    best = type_a ? std::min(best, v) : std::max(best, v);
  }
  return best;
}

struct RayTraceResult {
  Point source_point;
  Point target_point;
  int target_index = -1;
  double z_height = 0.0;
  double w_height = 0.0;
  double segment_length = 0.0;  // t, distance between the two hit points
  double opl_reduced = 0.0;     // z - w + t; equals beta for tight pairs
};

// Index of the supporting paraboloid at x; the discrete ray-tracing map.
// Ties within roundoff of the extremum resolve to the lowest target index,
// which keeps the map stable under gauge shifts, rescaling, and the tiny
// dual perturbations different pivot orderings produce.
inline int trace_index(const Point& x, const ReflectorPair& pair,
                       const ProblemSpec& spec) {
  const auto& ps = spec.target.points();
  const bool type_a = pair.kind == ReflectorKind::TypeA;
  double best = paraboloid_k(x, ps[0], pair.omega[0], pair.beta);
  for (std::size_t j = 1; j < ps.size(); ++j) {
    const double v = paraboloid_k(x, ps[j], pair.omega[j], pair.beta);
    if (type_a ? v > best : v < best) best = v;
  }
  const double tol = 1e-12 * std::max(1.0, std::abs(best));
  for (std::size_t j = 0; j < ps.size(); ++j) {
    const double v = paraboloid_k(x, ps[j], pair.omega[j], pair.beta);
    if (type_a ? v >= best - tol : v <= best + tol)
      return static_cast<int>(j);
  }
  return 0;  // unreachable
}

// Full argmax set within tolerance; the ray splits into a cone at points
// where this has more than one element.
inline std::vector<int> trace_index_set(const Point& x,
                                        const ReflectorPair& pair,
                                        const ProblemSpec& spec,
                                        double tol = 1e-9) {
  const auto& ps = spec.target.points();
  const int arg = trace_index(x, pair, spec);
  const double best = paraboloid_k(x, ps[arg], pair.omega[arg], pair.beta);
  std::vector<int> set;
  for (std::size_t j = 0; j < ps.size(); ++j)
    if (std::abs(paraboloid_k(x, ps[j], pair.omega[j], pair.beta) - best) <=
        tol)
      set.push_back(static_cast<int>(j));
  return set;
}

inline RayTraceResult ray_trace(const Point& x, const ReflectorPair& pair,
                                const ProblemSpec& spec) {
  const int j = trace_index(x, pair, spec);
  RayTraceResult r;
  r.source_point = x;
  r.target_index = j;
  r.target_point = spec.target.points()[j];
  r.z_height = paraboloid_k(x, r.target_point, pair.omega[j], pair.beta);
  r.w_height = pair.omega[j];
  const double dz = r.z_height - r.w_height;
  r.segment_length = std::sqrt(sq_dist(x, r.target_point) + dz * dz);
  r.opl_reduced = dz + r.segment_length;
  return r;
}

// Discrete inverse map: all source support indices whose trace set contains
// the given target index. Nonempty for every target support point of a
// tight pair.
inline std::vector<int> inverse_trace_indices(int target_index,
                                              const ReflectorPair& pair,
                                              const ProblemSpec& spec,
                                              double tol = 1e-9) {
  std::vector<int> out;
  for (std::size_t i = 0; i < spec.source.size(); ++i) {
    for (int j : trace_index_set(spec.source.points()[i], pair, spec, tol))
      if (j == target_index) {
        out.push_back(static_cast<int>(i));
        break;
      }
  }
  return out;
}

inline std::vector<Point> inverse_ray_trace(const Point& p,
                                            const ReflectorPair& pair,
                                            const ProblemSpec& spec,
                                            double tol = 1e-9) {
  // Locate p in the target support, then invert by index.
  int jp = -1;
  for (std::size_t j = 0; j < spec.target.size(); ++j)
    if (sq_dist(spec.target.points()[j], p) <= tol * tol) {
      jp = static_cast<int>(j);
      break;
    }
  if (jp < 0)
    throw std::invalid_argument("inverse_ray_trace: p is not a support point");
  std::vector<Point> out;
  for (int i : inverse_trace_indices(jp, pair, spec, tol))
    out.push_back(spec.source.points()[i]);
  return out;
}

// Transport potential V(x) = |x|^2/2 + beta z(x) - beta^2/2; convex for
// type A pairs, concave for type B, with gradient equal to the map.
inline double potential_V(const Point& x, const ReflectorPair& pair,
                          const ProblemSpec& spec) {
  double x2 = 0.0;
  for (double c : x) x2 += c * c;
  return 0.5 * x2 + pair.beta * eval_first(x, pair, spec) -
         0.5 * pair.beta * pair.beta;
}

// Flattening/stretching symmetry: z' = lambda z, beta' = beta / lambda,
// w' = lambda w + (beta/2)(lambda - 1/lambda). Leaves the ray-tracing map
// unchanged.
inline ReflectorPair apply_scaling_symmetry(const ReflectorPair& pair,
                                            double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("apply_scaling_symmetry: lambda <= 0");
  ReflectorPair out = pair;
  out.beta = pair.beta / lambda;
  for (std::size_t i = 0; i < pair.zeta.size(); ++i)
    out.zeta[i] = lambda * pair.zeta[i];
  const double off = 0.5 * pair.beta * (lambda - 1.0 / lambda);
  for (std::size_t j = 0; j < pair.omega.size(); ++j)
    out.omega[j] = lambda * pair.omega[j] + off;
  out.gauge = GaugeAnchor::Raw;
  return out;
}

struct GridSpec {
  Point origin;                 // lower corner
  std::vector<double> spacing;  // per axis, > 0
  std::vector<int> shape;       // nodes per axis, >= 1
};

inline std::size_t grid_node_count(const GridSpec& g) {
  std::size_t n = 1;
  for (int s : g.shape) {
    if (s < 1) throw std::invalid_argument("grid: empty axis");
    n *= static_cast<std::size_t>(s);
  }
  return n;
}

inline Point grid_node(const GridSpec& g, std::size_t flat) {
  Point p(g.origin.size());
  for (std::size_t k = g.origin.size(); k-- > 0;) {
    const std::size_t s = static_cast<std::size_t>(g.shape[k]);
    p[k] = g.origin[k] + g.spacing[k] * static_cast<double>(flat % s);
    flat /= s;
  }
  return p;
}

struct SampledSurfaces {
  GridSpec first_grid;
  GridSpec second_grid;
  std::vector<double> first_heights;   // z over the first grid, row-major
  std::vector<double> second_heights;  // w over the second grid
};

// Dense samples of both envelope surfaces for meshing.
inline SampledSurfaces export_sampling(const ReflectorPair& pair,
                                       const ProblemSpec& spec,
                                       const GridSpec& first,
                                       const GridSpec& second) {
  auto check = [&](const GridSpec& g) {
    if (g.origin.size() != spec.source.dim() ||
        g.spacing.size() != g.origin.size() ||
        g.shape.size() != g.origin.size())
      throw std::invalid_argument("export_sampling: malformed grid");
    for (double s : g.spacing)
      if (!(s > 0.0)) throw std::invalid_argument("export_sampling: spacing <= 0");
  };
  check(first);
  check(second);
  SampledSurfaces out;
  out.first_grid = first;
  out.second_grid = second;
  out.first_heights.resize(grid_node_count(first));
  for (std::size_t k = 0; k < out.first_heights.size(); ++k)
    out.first_heights[k] = eval_first(grid_node(first, k), pair, spec);
  out.second_heights.resize(grid_node_count(second));
  for (std::size_t k = 0; k < out.second_heights.size(); ++k)
    out.second_heights[k] = eval_second(grid_node(second, k), pair, spec);
  return out;
}

}  // namespace twomirror
