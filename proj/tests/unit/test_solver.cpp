#include <cmath>
#include <random>

#include <tbb/global_control.h>

#include "contact_hj/solver.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace contact_hj;
using contact_hj::testing::Arctan;
using contact_hj::testing::Coarse1D;
using contact_hj::testing::QuadraticLinear;

TEST_CASE("control lattice is lexicographic") {
  const auto c1 = ControlSet::Make(1, 1.0, 0.5);
  REQUIRE(c1.size() == 5);
  CHECK(c1.controls[0][0] == -1.0);
  CHECK(c1.controls[2][0] == 0.0);
  CHECK(c1.controls[4][0] == 1.0);
  const auto c2 = ControlSet::Make(2, 1.0, 0.5);
  CHECK(c2.size() == 13);
  for (std::size_t i = 1; i < c2.size(); ++i) {
    CHECK(c2.controls[i - 1] < c2.controls[i]);
  }
  CHECK_THROWS_AS(ControlSet::Make(1, 0.0, 0.5), ConfigError);
}

TEST_CASE("one step is monotone and commutes with constants at lambda = 0") {
  const auto d = Coarse1D();
  const auto m = QuadraticLinear();
  const auto g = d.BallGrid(3.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0), bump(0.0, 0.5);
  for (int trial = 0; trial < 10; ++trial) {
    GridField v(g), w(g), shifted(g);
    for (std::size_t k = 0; k < g->size(); ++k) {
      v[k] = u(rng);
      w[k] = v[k] + bump(rng);
      shifted[k] = v[k] + 0.75;
    }
    const auto tv = LaxOleinikStep(v, m, d.evaluator, d.controls, 0.1, 0.0, d.params.dt, true);
    const auto tw = LaxOleinikStep(w, m, d.evaluator, d.controls, 0.1, 0.0, d.params.dt, true);
    const auto t0 = LaxOleinikStep(v, m, d.evaluator, d.controls, 0.0, 0.0, d.params.dt, true);
    const auto ts = LaxOleinikStep(shifted, m, d.evaluator, d.controls, 0.0, 0.0, d.params.dt, true);
    for (std::size_t k = 0; k < g->size(); ++k) {
      if (!g->InMask(k)) continue;
      CHECK(tv[k] <= tw[k] + 1e-12);
      CHECK(ts[k] == doctest::Approx(t0[k] + 0.75).epsilon(1e-13));
    }
  }
}

TEST_CASE("worker count does not change the step") {
  tbb::global_control allow(tbb::global_control::max_allowed_parallelism, 4);
  const auto d = Coarse1D();
  const auto g = d.BallGrid(3.0);
  GridField v(g);
  for (std::size_t k = 0; k < g->size(); ++k) v[k] = std::cos(g->Node(k)[0]);
  const auto a = LaxOleinikStep(v, Arctan(), d.evaluator, d.controls, 0.2, std::numbers::pi, d.params.dt,
                                true, 1);
  const auto b = LaxOleinikStep(v, Arctan(), d.evaluator, d.controls, 0.2, std::numbers::pi, d.params.dt,
                                true, 4);
  CHECK(a.values() == b.values());
}

TEST_CASE("state-constraint solve converges to a bounded fixed point") {
  const auto d = Coarse1D();
  const auto s = SolveStateConstraint(QuadraticLinear(), d, 3.0, 0.2, 0.0);
  CHECK(s.converged);
  CHECK(s.final_residual <= d.params.tol);
  CHECK(s.residuals.size() == static_cast<std::size_t>(s.iterations));
  // 0 is a subsolution, and f <= 1 bounds the value by 1 / lambda.
  const auto& g = s.field.grid();
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.InMask(k)) continue;
    CHECK(s.field[k] >= -1e-9);
    CHECK(s.field[k] <= 1.0 / 0.2);
  }
  CHECK(std::abs(Interpolate(s.field, {0.0})) < 1e-6);
  CHECK(Interpolate(s.field, {1.0}) > 0.3);
  CHECK_THROWS_AS(SolveStateConstraint(QuadraticLinear(), d, 3.0, 0.0, 0.0), ConfigError);
}

TEST_CASE("invalid iteration parameters are rejected") {
  auto d = Coarse1D();
  d.params.damping = 1.5;
  CHECK_THROWS_AS(SolveStateConstraint(QuadraticLinear(), d, 3.0, 0.2, 0.0), ConfigError);
  d = Coarse1D();
  d.params.dt = 10.0;
  CHECK_THROWS_AS(SolveStateConstraint(QuadraticLinear(), d, 3.0, 0.2, 0.0), ConfigError);
}

TEST_CASE("critical value estimate on the quadratic-linear model") {
  const auto d = Coarse1D();
  const auto est = EstimateCriticalValue(QuadraticLinear(), d, 3.0, {0.4, 0.2});
  CHECK(std::abs(est.c) < 0.02);
  CHECK(est.m0 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(est.consistent);
  CHECK(est.rows.size() == 2);
  CHECK_THROWS_AS(EstimateCriticalValue(QuadraticLinear(), d, 3.0, {0.2}), ConfigError);
  CHECK_THROWS_AS(EstimateCriticalValue(QuadraticLinear(), d, 3.0, {0.2, 0.4}), ConfigError);
}

TEST_CASE("Mane potential and Aubry indicator") {
  const auto d = Coarse1D();
  const auto m = QuadraticLinear();
  const auto S = ManePotential(m, d, {0.0}, 0.0, 3.0);
  CHECK(S.converged);
  CHECK(S.field[S.field.grid().NearestNode({0.0})] == 0.0);
  // Symmetric potential, symmetric controls.
  CHECK(Interpolate(S.field, {1.5}) == doctest::Approx(Interpolate(S.field, {-1.5})).epsilon(1e-9));
  CHECK(Interpolate(S.field, {2.0}) > Interpolate(S.field, {1.0}));
  CHECK_THROWS_AS(ManePotential(m, d, {0.05}, 0.0, 3.0), ConfigError);

  const auto aubry = AubryIndicator(m, d, 0.0, 3.0, {{0.0}, {1.0}});
  REQUIRE(aubry.size() == 2);
  CHECK(aubry[0].delta <= 5e-3);
  CHECK(aubry[1].delta >= 0.1 * d.params.dt);
}

TEST_CASE("ergodic solve at the right and the wrong constant") {
  const auto d = Coarse1D();
  const auto m = QuadraticLinear();
  const auto e = SolveErgodic(m, d, 3.0, 0.0, {0.0});
  CHECK(e.converged);
  CHECK(e.field[e.field.grid().NearestNode({0.0})] == 0.0);
  CHECK(ErgodicResidual(m, d, e.field, 0.0, {0.0}) <= 5.0 * d.params.tol);
  CHECK_THROWS_AS(SolveErgodic(m, d, 3.0, 0.5, {0.0}, std::nullopt, 200), CriticalValueMismatch);
}

TEST_CASE("maximal solution stabilizes as the radius grows") {
  const auto d = Coarse1D();
  const auto out = SolveMaximalGlobal(QuadraticLinear(), d, 0.2, 0.0, {1.5, 2.0, 2.5, 3.0}, {0.0}, 1e-6);
  CHECK(out.rows.size() >= 2);
  CHECK(out.stabilized);
  CHECK(out.solve.field.meta().kind == FieldKind::kMaximalTruncated);
  CHECK_THROWS_AS(SolveMaximalGlobal(QuadraticLinear(), d, 0.2, 0.0, {3.0, 2.0}, {0.0}, 1e-6), ConfigError);
}

TEST_CASE("Aubry indicator is bounded below by the running cost off the Aubry set") {
  const auto d = Coarse1D();
  const auto aubry = AubryIndicator(QuadraticLinear(), d, 0.0, 3.0, {{2.0}, {-2.0}});
  const double f2 = 1.0 - std::exp(-4.0);
  for (const auto& e : aubry) CHECK(e.delta >= f2 * d.params.dt / 2.0);
}

TEST_CASE("state-constraint values decrease as the ball grows") {
  const auto d = Coarse1D();
  const auto small = SolveStateConstraint(QuadraticLinear(), d, 2.0, 0.2, 0.0);
  const auto large = SolveStateConstraint(QuadraticLinear(), d, 3.0, 0.2, 0.0);
  // Residual tol leaves at most tol / (lambda dt) of stopping error per solve.
  const double slack = 2.0 * d.params.tol / (0.2 * d.params.dt);
  for (double x : {-1.5, 0.0, 1.0, 2.0}) {
    CHECK(Interpolate(small.field, {x}) >= Interpolate(large.field, {x}) - slack);
  }
}

TEST_CASE("the fixed point does not depend on the initial guess") {
  const auto d = Coarse1D();
  const auto m = QuadraticLinear();
  const auto from_zero = SolveStateConstraint(m, d, 3.0, 0.2, 0.0);
  const auto from_high = SolveStateConstraint(m, d, 3.0, 0.2, 0.0, GridField(d.BallGrid(3.0), 1e3));
  CHECK(from_high.converged);
  // A contraction with factor 1 - lambda dt stopped at residual tol sits
  // within tol / (lambda dt) of the fixed point.
  const double bound = 2.0 * d.params.tol / (0.2 * d.params.dt);
  double diff = 0.0;
  for (std::size_t k = 0; k < from_zero.field.grid().size(); ++k) {
    if (from_zero.field.grid().InMask(k)) diff = std::max(diff, std::abs(from_zero.field[k] - from_high.field[k]));
  }
  CHECK(diff <= bound);
}
