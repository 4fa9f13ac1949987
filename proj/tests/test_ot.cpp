#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "twomirror/demo.hpp"
#include "twomirror/ot.hpp"

using namespace twomirror;

namespace {

ProblemSpec uniform_1d(int n, double lo_s, double hi_s, double lo_t,
                       double hi_t, double beta = 1.0) {
  std::vector<Point> xs, ps;
  std::vector<double> w(n, 1.0 / n);
  for (int i = 0; i < n; ++i) {
    const double t = (i + 0.5) / n;
    xs.push_back({lo_s + t * (hi_s - lo_s)});
    ps.push_back({lo_t + t * (hi_t - lo_t)});
  }
  return ProblemSpec{DiscreteMeasure(xs, w), DiscreteMeasure(ps, w), beta,
                     1e-6};
}

ProblemSpec random_2d(int n, std::mt19937_64& rng, double beta = 1.0) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Point> xs, ps;
  std::vector<double> w(n, 1.0 / n);
  for (int i = 0; i < n; ++i) {
    xs.push_back({uni(rng), uni(rng)});
    ps.push_back({uni(rng) + 0.3, uni(rng) + 0.1});
  }
  return ProblemSpec{DiscreteMeasure(xs, w), DiscreteMeasure(ps, w), beta,
                     1e-6};
}

double dual_objective(const SolveResult& r, const ProblemSpec& spec) {
  double s = 0.0;
  for (std::size_t i = 0; i < spec.source.size(); ++i)
    s += r.duals.phi[i] * spec.source.weights()[i];
  for (std::size_t j = 0; j < spec.target.size(); ++j)
    s += r.duals.psi[j] * spec.target.weights()[j];
  return s;
}

}  // namespace

TEST_CASE("two-point instance, both directions") {
  ProblemSpec spec{DiscreteMeasure({{0.0}, {1.0}}, {0.5, 0.5}),
                   DiscreteMeasure({{0.0}, {1.0}}, {0.5, 0.5}), 1.0, 1e-6};
  SolveResult mn = solve_exact(spec, Direction::MinCost);
  CHECK(mn.plan.cost == doctest::Approx(0.0).epsilon(1e-15));
  REQUIRE(mn.plan.entries.size() == 2);
  for (const PlanEntry& e : mn.plan.entries) {
    CHECK(e.i == e.j);
    CHECK(e.mass == doctest::Approx(0.5));
  }
  SolveResult mx = solve_exact(spec, Direction::MaxCost);
  CHECK(mx.plan.cost == doctest::Approx(0.5));
  for (const PlanEntry& e : mx.plan.entries) CHECK(e.i != e.j);
}

TEST_CASE("1D 16-point stretch matches the sort oracle") {
  ProblemSpec spec = uniform_1d(16, 0.0, 1.0, 0.0, 2.0);
  std::vector<double> xs, ps;
  for (const Point& p : spec.source.points()) xs.push_back(p[0]);
  for (const Point& p : spec.target.points()) ps.push_back(p[0]);
  const auto oracle = oracles::sort_oracle_1d(xs, ps, 1.0 / 16);
  SolveResult res = solve_exact(spec, Direction::MinCost);
  CHECK(res.plan.cost == doctest::Approx(oracle.cost).epsilon(1e-12));
  for (const PlanEntry& e : res.plan.entries) CHECK(oracle.match[e.i] == e.j);

  const auto anti = oracles::sort_oracle_1d(xs, ps, 1.0 / 16, true);
  SolveResult mx = solve_exact(spec, Direction::MaxCost);
  CHECK(mx.plan.cost == doctest::Approx(anti.cost).epsilon(1e-12));
}

TEST_CASE("2D random instances match the Hungarian oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 8;
    ProblemSpec spec = random_2d(n, rng);
    std::vector<std::vector<double>> cost(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        cost[i][j] =
            quadratic_cost(spec.source.points()[i], spec.target.points()[j]);
    const double hung = oracles::hungarian(cost);
    CHECK(hung == doctest::Approx(oracles::assignment_dp(cost)).epsilon(1e-12));
    SolveResult res = solve_exact(spec, Direction::MinCost);
    CHECK(res.plan.cost == doctest::Approx(hung / n).epsilon(1e-12));
  }
}

TEST_CASE("strong duality and dual feasibility at the exact optimum") {
  std::mt19937_64 rng(12);
  ProblemSpec spec = random_2d(20, rng);
  for (Direction dir : {Direction::MinCost, Direction::MaxCost}) {
    SolveResult res = solve_exact(spec, dir);
    CHECK(res.duality_gap <= 1e-9 * std::max(1.0, std::abs(res.objective)));
    CHECK(dual_objective(res, spec) ==
          doctest::Approx(res.plan.cost).epsilon(1e-9));
    for (std::size_t i = 0; i < spec.source.size(); ++i)
      for (std::size_t j = 0; j < spec.target.size(); ++j) {
        const double c =
            quadratic_cost(spec.source.points()[i], spec.target.points()[j]);
        const double s = res.duals.phi[i] + res.duals.psi[j] - c;
        if (dir == Direction::MinCost)
          CHECK(s <= 1e-9);
        else
          CHECK(s >= -1e-9);
      }
    for (const PlanEntry& e : res.plan.entries) {
      const double c =
          quadratic_cost(spec.source.points()[e.i], spec.target.points()[e.j]);
      CHECK(res.duals.phi[e.i] + res.duals.psi[e.j] ==
            doctest::Approx(c).epsilon(1e-9));
    }
  }
}

TEST_CASE("direction consistency via cost negation") {
  std::mt19937_64 rng(13);
  ProblemSpec spec = random_2d(12, rng);
  SolveResult mx = solve_exact(spec, Direction::MaxCost);
  std::vector<double> negc = cost_matrix(spec);
  for (double& v : negc) v = -v;
  TransportSolution neg = solve_transportation(
      spec.source.weights(), spec.target.weights(), negc);
  CHECK(mx.objective == -neg.objective);
}

TEST_CASE("determinism: repeated solves give identical plans") {
  std::mt19937_64 rng(14);
  ProblemSpec spec = random_2d(25, rng);
  SolveResult a = solve_exact(spec, Direction::MinCost);
  SolveResult b = solve_exact(spec, Direction::MinCost);
  REQUIRE(a.plan.entries.size() == b.plan.entries.size());
  for (std::size_t k = 0; k < a.plan.entries.size(); ++k) {
    CHECK(a.plan.entries[k].i == b.plan.entries[k].i);
    CHECK(a.plan.entries[k].j == b.plan.entries[k].j);
    CHECK(a.plan.entries[k].mass == b.plan.entries[k].mass);
  }
}

TEST_CASE("point cap raises problem-too-large") {
  ProblemSpec spec = uniform_1d(16, 0.0, 1.0, 0.0, 1.0);
  SolverOptions opts;
  opts.max_points = 8;
  CHECK_THROWS_AS(solve_exact(spec, Direction::MinCost, opts), ProblemTooLarge);
}

TEST_CASE("plan marginals are feasible") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> uni(0.1, 1.0);
  const int n = 15;
  std::vector<Point> xs, ps;
  std::vector<double> wa, wb;
  for (int i = 0; i < n; ++i) {
    xs.push_back({uni(rng), uni(rng)});
    ps.push_back({uni(rng), uni(rng)});
    wa.push_back(uni(rng));
    wb.push_back(uni(rng));
  }
  ProblemSpec raw{DiscreteMeasure(xs, wa), DiscreteMeasure(ps, wb), 1.0, 10.0};
  ProblemSpec spec = validate_problem(raw, true).spec;
  SolveResult res = solve_exact(spec, Direction::MinCost);
  CHECK(plan_marginal_error(res.plan, spec) <= 1e-10);
}

TEST_CASE("entropic: identity instance cost shrinks with epsilon") {
  ProblemSpec spec = uniform_1d(12, 0.0, 1.0, 0.0, 1.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    SolveResult res = solve_entropic(spec, Direction::MinCost, eps);
    CHECK(res.plan.cost < prev);
    prev = res.plan.cost;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("entropic: stretch1d within 2% of exact, marginals tight") {
  ProblemSpec spec = uniform_1d(16, 0.0, 1.0, 0.0, 2.0);
  const double exact = solve_exact(spec, Direction::MinCost).plan.cost;
  double diam2 = 0.0;
  for (const Point& x : spec.source.points())
    for (const Point& p : spec.target.points())
      diam2 = std::max(diam2, sq_dist(x, p));
  SolveResult res = solve_entropic(spec, Direction::MinCost, 1e-3 * diam2);
  CHECK(std::abs(res.plan.cost - exact) <= 0.02 * exact);
  CHECK(plan_marginal_error(res.plan, spec) <= 1e-12);
}

TEST_CASE("entropic rejects nonpositive epsilon") {
  ProblemSpec spec = uniform_1d(4, 0.0, 1.0, 0.0, 1.0);
  CHECK_THROWS_AS(solve_entropic(spec, Direction::MinCost, 0.0),
                  std::invalid_argument);
}

TEST_CASE("duals_to_reflectors: zero duals give the flat pair") {
  ProblemSpec spec = uniform_1d(4, 0.0, 1.0, 0.0, 1.0);
  DualPotentials d;
  d.phi.assign(4, 0.0);
  d.psi.assign(4, 0.0);
  ReflectorPair pair = duals_to_reflectors(d, spec, Direction::MinCost, false);
  for (double z : pair.zeta) CHECK(z == doctest::Approx(0.5));
  for (double w : pair.omega) CHECK(w == doctest::Approx(0.0));
  CHECK(admissibility_margin(pair, spec) >= -1e-12);
}

TEST_CASE("duals round-trip through reflector heights") {
  std::mt19937_64 rng(16);
  ProblemSpec spec = random_2d(10, rng);
  SolveResult res = solve_exact(spec, Direction::MinCost);
  ReflectorPair pair =
      duals_to_reflectors(res.duals, spec, Direction::MinCost, false);
  DualPotentials back = reflectors_to_duals(pair);
  for (std::size_t i = 0; i < res.duals.phi.size(); ++i)
    CHECK(back.phi[i] == doctest::Approx(res.duals.phi[i]).epsilon(1e-12));
  for (std::size_t j = 0; j < res.duals.psi.size(); ++j)
    CHECK(back.psi[j] == doctest::Approx(res.duals.psi[j]).epsilon(1e-12));
}

TEST_CASE("c_transform_pair is a fixed point on envelope pairs") {
  std::mt19937_64 rng(17);
  ProblemSpec spec = random_2d(12, rng);
  SolveResult res = solve_exact(spec, Direction::MinCost);
  ReflectorPair tight = duals_to_reflectors(res.duals, spec, Direction::MinCost);
  ReflectorPair again = c_transform_pair(tight, spec);
  for (std::size_t i = 0; i < tight.zeta.size(); ++i)
    CHECK(again.zeta[i] == doctest::Approx(tight.zeta[i]).epsilon(1e-12));
  for (std::size_t j = 0; j < tight.omega.size(); ++j)
    CHECK(again.omega[j] == doctest::Approx(tight.omega[j]).epsilon(1e-12));
}

TEST_CASE("c_transform_pair pulls an inflated height back down") {
  ProblemSpec spec = uniform_1d(6, 0.0, 1.0, 0.0, 1.0);
  SolveResult res = solve_exact(spec, Direction::MinCost);
  ReflectorPair tight = duals_to_reflectors(res.duals, spec, Direction::MinCost);
  ReflectorPair bumped = tight;
  bumped.zeta[2] += 1.0;
  ReflectorPair fixed = c_transform_pair(bumped, spec);
  CHECK(fixed.zeta[2] == doctest::Approx(tight.zeta[2]).epsilon(1e-12));
}

TEST_CASE("c-transform does not increase F for type A") {
  std::mt19937_64 rng(18);
  ProblemSpec spec = random_2d(10, rng);
  for (int k = 0; k < 30; ++k) {
    ReflectorPair pair = random_admissible_pair(spec, ReflectorKind::TypeA, rng);
    const double before = functional_F(pair, spec);
    const double after = functional_F(c_transform_pair(pair, spec), spec);
    CHECK(after <= before + 1e-9);
  }
}

TEST_CASE("functional_F basics and the duality identity") {
  ProblemSpec spec = uniform_1d(8, 0.0, 1.0, 0.0, 1.0);
  ReflectorPair constant;
  constant.beta = 1.0;
  constant.zeta.assign(8, 3.7);
  constant.omega.assign(8, 3.7);
  CHECK(functional_F(constant, spec) == doctest::Approx(0.0).epsilon(1e-12));

  SolveResult res = solve_exact(spec, Direction::MinCost);
  ReflectorPair pair = duals_to_reflectors(res.duals, spec, Direction::MinCost);
  const double M = spec.source.total_mass();
  CHECK(functional_F(pair, spec) ==
        doctest::Approx(0.5 * spec.beta * M - res.plan.cost / spec.beta)
            .epsilon(1e-9));
  // Identity instance: cost 0, so F = (beta/2) M exactly.
  CHECK(functional_F(pair, spec) == doctest::Approx(0.5 * spec.beta * M));
}

TEST_CASE("sandwich: F bounds over random pairs, cost bounds over plans") {
  std::mt19937_64 rng(19);
  ProblemSpec spec = random_2d(12, rng);
  SolveResult a = solve_exact(spec, Direction::MinCost);
  SolveResult b = solve_exact(spec, Direction::MaxCost);
  ReflectorPair pa = duals_to_reflectors(a.duals, spec, Direction::MinCost);
  ReflectorPair pb = duals_to_reflectors(b.duals, spec, Direction::MaxCost);
  const double fa = functional_F(pa, spec);
  const double fb = functional_F(pb, spec);
  CHECK(fb <= fa + 1e-9);  // F(B) = (beta/2) M - C_max / beta <= F(A)
  for (int k = 0; k < 100; ++k) {
    ReflectorPair ra = random_admissible_pair(spec, ReflectorKind::TypeA, rng);
    CHECK(functional_F(ra, spec) >= fa - 1e-9);
    ReflectorPair rb = random_admissible_pair(spec, ReflectorKind::TypeB, rng);
    CHECK(functional_F(rb, spec) <= fb + 1e-9);
    TransportPlan plan = random_feasible_plan(spec, rng);
    CHECK(plan.cost >= a.plan.cost - 1e-9);
    CHECK(plan.cost <= b.plan.cost + 1e-9);
  }
  CHECK(a.plan.cost < b.plan.cost);  // strict on generic instances
}
