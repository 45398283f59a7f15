#include <cmath>
#include <numbers>

#include "contact_hj/measures.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace contact_hj;
using contact_hj::testing::QuadraticLinear;

TEST_CASE("weights are normalized") {
  WeightedSampleMeasure mu(1, {{{1.0}, {0.5}, 2.0}, {{-1.0}, {0.0}, 6.0}});
  CHECK(mu.TotalWeight() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mu.samples()[0].w == doctest::Approx(0.25));
  CHECK(mu.SupportRadius() == 1.0);
  CHECK(mu.Pair([](const Point& x, const Point&) { return x[0]; }) == doctest::Approx(-0.5));
  const auto m = mu.Mirror();
  CHECK(m.samples()[0].x[0] == -1.0);
  CHECK(m.samples()[0].v[0] == -0.5);
  CHECK_THROWS_AS(WeightedSampleMeasure(1, {{{0.0}, {0.0}, 0.0}}), std::logic_error);
  CHECK_THROWS_AS(WeightedSampleMeasure(1, {{{0.0}, {0.0}, -1.0}}), ConfigError);
}

TEST_CASE("test-function battery") {
  CHECK(DefaultBattery(1).size() == 5);
  CHECK(DefaultBattery(2).size() == 11);
  const auto t = MakeTestFunction("sin(x)*y", 2);
  CHECK(t.grad[0]({0.0, 2.0}) == doctest::Approx(2.0));
  CHECK(t.grad[1]({std::numbers::pi / 2, 2.0}) == doctest::Approx(1.0));
}

TEST_CASE("closedness defect vanishes on a uniformly sampled periodic orbit") {
  std::vector<MeasureSample> s;
  const int n = 720;
  for (int i = 0; i < n; ++i) {
    const double th = 2.0 * std::numbers::pi * i / n;
    s.push_back({{std::cos(th), std::sin(th)}, {-std::sin(th), std::cos(th)}, 1.0});
  }
  const WeightedSampleMeasure circle(2, s);
  CHECK(ClosednessDefect(circle, DefaultBattery(2)) < 1e-12);
  // A one-directional drift is not closed.
  const auto drift = PointMass(1, {0.5}, {1.0});
  CHECK(ClosednessDefect(drift, DefaultBattery(1)) >= 1.0);
}

TEST_CASE("Mather defect and selection functional on point masses") {
  const auto m = QuadraticLinear();
  const auto ev = LagrangianEvaluator::ClosedForm();
  const auto rest = PointMass(1, {0.0}, {0.0});
  CHECK(MatherDefect(rest, m, ev, 0.0) == doctest::Approx(0.0));
  const auto moving = PointMass(1, {1.0}, {2.0});
  CHECK(MatherDefect(moving, m, ev, 0.0) == doctest::Approx(2.0 + 1.0 - std::exp(-1.0)));

  const auto g = std::make_shared<const UniformGrid>(MakeBox(1, -2.0, 2.0), std::array<int, 2>{41, 1});
  GridField w(g, 0.3);
  // du L = -phi = -1 for the linear coupling.
  CHECK(SelectionFunctional(moving, w, m, ev) == doctest::Approx(-0.3));
  CHECK_THROWS_AS(SelectionFunctional(PointMass(1, {5.0}, {0.0}), w, m, ev), DomainError);
}

TEST_CASE("weak-limit diagnostics") {
  const auto m = QuadraticLinear();
  const auto ev = LagrangianEvaluator::ClosedForm();
  std::vector<LabeledMeasure> seq;
  for (double lambda : {0.4, 0.2, 0.1}) {
    seq.push_back({lambda, PointMass(1, {lambda}, {0.0})});
  }
  const auto r = WeakLimitDiagnostics(seq, DefaultBattery(1), m, ev);
  REQUIRE(r.discrepancies.size() == 2);
  CHECK(r.cauchy_decreasing);
  CHECK(r.limit_proxy_lambda == 0.1);
  CHECK(r.discrepancies[1] > 0.0);
  CHECK(WeakDiscrepancy(seq[0].measure, seq[0].measure, DefaultBattery(1), m, ev) == 0.0);
  CHECK_THROWS_AS(WeakLimitDiagnostics({seq[0]}, DefaultBattery(1), m, ev), ConfigError);
}

TEST_CASE("measure CSV") {
  const auto mu = PointMass(2, {1.0, 2.0}, {0.5, 0.0});
  const auto csv = MeasureCsv(mu);
  CHECK(csv == "x,y,v,vy,w\n1,2,0.5,0,1\n");
}
