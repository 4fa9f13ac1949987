#pragma once

// Canonical test instances. Each demo samples an analytic intensity pair on
// cell-centered grids, and keeps the analytic densities around for the
// Monge-Ampere diagnostics.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "twomirror/core.hpp"
#include "twomirror/reflector.hpp"

namespace twomirror {

struct DemoInstance {
  std::string name;
  ProblemSpec spec;
  GridSpec source_grid;  // cell-centered support grid of the source
  GridSpec target_grid;
  std::function<double(const Point&)> density_I;
  std::function<double(const Point&)> density_L;
};

namespace detail {

struct GridMeasure {
  DiscreteMeasure measure;
  GridSpec grid;
};

inline GridMeasure sample_grid(const Point& lo, const Point& hi,
                               const std::vector<int>& shape,
                               const std::function<double(const Point&)>& dens) {
  const std::size_t n = lo.size();
  GridSpec g;
  g.origin.resize(n);
  g.spacing.resize(n);
  g.shape = shape;
  double cell = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    g.spacing[k] = (hi[k] - lo[k]) / shape[k];
    g.origin[k] = lo[k] + 0.5 * g.spacing[k];  // cell centers
    cell *= g.spacing[k];
  }
  std::vector<Point> pts;
  std::vector<double> w;
  const std::size_t total = grid_node_count(g);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Point p = grid_node(g, flat);
    pts.push_back(p);
    w.push_back(dens(p) * cell);
  }
  return GridMeasure{DiscreteMeasure(std::move(pts), std::move(w)), g};
}

inline std::vector<int> square_shape(int points, int dim) {
  if (dim == 1) return {points};
  int side = 1;
  while ((side + 1) * (side + 1) <= points) ++side;
  return std::vector<int>(dim, side);
}

}  // namespace detail

inline std::vector<std::string> demo_names() {
  return {"identity", "shift", "stretch1d", "gaussian2d"};
}

// Builds a named demo with roughly `points` support points per side
// (exactly `points` in 1D; the nearest square in 2D).
inline DemoInstance make_demo(const std::string& name, int points,
                              double beta = 1.0) {
  if (points < 1) throw std::invalid_argument("make_demo: points < 1");
  DemoInstance out;
  out.name = name;
  auto one = [](const Point&) { return 1.0; };

  if (name == "identity") {
    const auto shape = detail::square_shape(points, 2);
    auto gm = detail::sample_grid({0.0, 0.0}, {1.0, 1.0}, shape, one);
    out.spec = ProblemSpec{gm.measure, gm.measure, beta, 1e-6};
    out.source_grid = gm.grid;
    out.target_grid = gm.grid;
    out.density_I = one;
    out.density_L = one;
  } else if (name == "shift") {
    const auto shape = detail::square_shape(points, 2);
    auto src = detail::sample_grid({0.0, 0.0}, {1.0, 1.0}, shape, one);
    auto tgt = detail::sample_grid({0.75, 0.5}, {1.75, 1.5}, shape, one);
    out.spec = ProblemSpec{src.measure, tgt.measure, beta, 1e-6};
    out.source_grid = src.grid;
    out.target_grid = tgt.grid;
    out.density_I = one;
    out.density_L = one;
  } else if (name == "stretch1d") {
    auto src = detail::sample_grid({0.0}, {1.0}, {points}, one);
    auto half = [](const Point&) { return 0.5; };
    auto tgt = detail::sample_grid({0.0}, {2.0}, {points}, half);
    out.spec = ProblemSpec{src.measure, tgt.measure, beta, 1e-6};
    out.source_grid = src.grid;
    out.target_grid = tgt.grid;
    out.density_I = one;
    out.density_L = half;
  } else if (name == "gaussian2d") {
    const auto shape = detail::square_shape(points, 2);
    auto src = detail::sample_grid({-1.0, -1.0}, {1.0, 1.0}, shape, one);
    const double sigma = 0.6;
    auto gauss = [sigma](const Point& p) {
      return std::exp(-(p[0] * p[0] + p[1] * p[1]) / (2.0 * sigma * sigma));
    };
    auto tgt = detail::sample_grid({-1.0, -1.0}, {1.0, 1.0}, shape, gauss);
    // Normalize the target to the source mass so the demo is balanced; the
    // analytic density carries the same factor.
    const double factor = src.measure.total_mass() / tgt.measure.total_mass();
    out.spec = ProblemSpec{src.measure, tgt.measure.scaled(factor), beta, 1e-6};
    out.source_grid = src.grid;
    out.target_grid = tgt.grid;
    out.density_I = one;
    out.density_L = [gauss, factor](const Point& p) {
      return factor * gauss(p);
    };
  } else {
    throw std::invalid_argument("make_demo: unknown demo '" + name + "'");
  }
  return out;
}

}  // namespace twomirror
