#include <cmath>

#include "contact_hj/trajectory.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace contact_hj;
using contact_hj::testing::Coarse1D;
using contact_hj::testing::QuadraticLinear;

namespace {

struct Traced {
  SolveOutcome solve;
  Curve curve;
};

Traced Trace(double lambda, double z, double horizon) {
  const auto d = Coarse1D();
  Traced t;
  t.solve = SolveStateConstraint(QuadraticLinear(), d, 3.0, lambda, 0.0);
  t.curve = Backtrace(t.solve.field, QuadraticLinear(), d.evaluator, d.controls, lambda, 0.0, {z}, horizon,
                      d.params.dt, d.params.tol);
  return t;
}

}  // namespace

TEST_CASE("backtraced curves follow their velocities") {
  const auto t = Trace(0.2, 1.0, 4.0);
  const auto& c = t.curve;
  REQUIRE(c.steps() == 80);
  CHECK(c.points.size() == c.steps() + 1);
  CHECK(c.points[0][0] == 1.0);
  CHECK(c.times[0] == 0.0);
  for (std::size_t k = 0; k < c.steps(); ++k) {
    CHECK(c.points[k + 1][0] == doctest::Approx(c.points[k][0] - c.dt * c.velocities[k][0]));
    CHECK(std::abs(c.points[k + 1][0]) <= 3.0 + 1e-12);
  }
  // Minimizers run toward the Aubry set at 0.
  CHECK(std::abs(c.points.back()[0]) < std::abs(c.points.front()[0]));
  CHECK(c.MaxDefect() <= c.defect_threshold);
  CHECK(c.warning.empty());
}

TEST_CASE("indices of a linear coupling are constant") {
  const auto t = Trace(0.2, 1.0, 4.0);
  const auto d = Coarse1D();
  const auto K = ComputeIndices(t.curve, QuadraticLinear(), d.evaluator, t.solve.field, 0.2, IndexKind::kK);
  REQUIRE(K.values.size() == t.curve.steps());
  REQUIRE(K.cumulative.size() == t.curve.steps() + 1);
  CHECK(K.cumulative[0] == 0.0);
  for (std::size_t k = 0; k < K.values.size(); ++k) {
    CHECK(K.values[k] == doctest::Approx(-1.0));
    CHECK(K.Weight(k) == doctest::Approx(std::exp(-0.2 * k * t.curve.dt)));
  }
  const auto KB = ComputeIndices(t.curve, QuadraticLinear(), d.evaluator, t.solve.field, 0.2,
                                 IndexKind::kKBold, 2.0);
  CHECK(KB.ReferenceLevel() == doctest::Approx(-0.4));
  CHECK(KB.values[3] == doctest::Approx(-1.0));
}

TEST_CASE("representation formula reproduces the field") {
  const double lambda = 0.2;
  const auto t = Trace(lambda, 1.0, 30.0);
  const auto d = Coarse1D();
  const auto m = QuadraticLinear();
  const double uz = Interpolate(t.solve.field, {1.0});
  for (auto kind : {IndexKind::kK, IndexKind::kKBold}) {
    const double c0 = IsBold(kind) ? t.solve.field.MaxAbs() : 0.0;
    const auto idx = ComputeIndices(t.curve, m, d.evaluator, t.solve.field, lambda, kind, c0);
    const double rep = RepresentationValue(t.curve, idx, m, d.evaluator, 0.0, t.solve.field);
    CHECK(std::abs(rep - uz) < 0.05);
    CHECK(TailError(t.curve, idx, t.solve.field) < 1e-2);
    const double w = WindowIdentityResidual(t.curve, idx, m, d.evaluator, 0.0, t.solve.field, 0, 40);
    CHECK(w < 10.0 * (d.params.tol + InterpolationErrorBound(t.solve.field)) * 2.0);
  }
  // Actions are additive over windows.
  const auto K = ComputeIndices(t.curve, m, d.evaluator, t.solve.field, lambda, IndexKind::kK);
  const double whole = ExponentialAction(t.curve, K, m, d.evaluator, 0.0, 0, 100);
  const double split = ExponentialAction(t.curve, K, m, d.evaluator, 0.0, 0, 37) +
                       ExponentialAction(t.curve, K, m, d.evaluator, 0.0, 37, 100);
  CHECK(whole == doctest::Approx(split).epsilon(1e-13));
  CHECK_THROWS_AS(ExponentialAction(t.curve, K, m, d.evaluator, 0.0, 5, 4), ConfigError);
}

TEST_CASE("index kinds and curve CSV") {
  for (auto k : {IndexKind::kKappa, IndexKind::kK, IndexKind::kKappaBold, IndexKind::kKBold}) {
    CHECK(IndexKindFromString(ToString(k)) == k);
  }
  CHECK(IsBold(IndexKind::kKappaBold));
  CHECK_FALSE(IsBold(IndexKind::kK));
  CHECK_THROWS_AS(IndexKindFromString("Q"), ConfigError);

  const auto t = Trace(0.2, 0.5, 0.2);
  const auto d = Coarse1D();
  const auto K = ComputeIndices(t.curve, QuadraticLinear(), d.evaluator, t.solve.field, 0.2, IndexKind::kK);
  const std::string csv = CurveCsv(t.curve, K);
  CHECK(csv.rfind("t,x,a,index_value,cumulative\n", 0) == 0);
  CHECK(csv.find("nan") != std::string::npos);
  CHECK_THROWS_AS(Backtrace(t.solve.field, QuadraticLinear(), d.evaluator, d.controls, 0.2, 0.0, {3.5}, 1.0,
                            d.params.dt),
                  DomainError);
}

TEST_CASE("curves from z = 2 are confined near the Aubry point") {
  const auto t = Trace(0.05, 2.0, 40.0);
  for (std::size_t k = 0; k < t.curve.steps(); ++k) {
    CHECK(t.curve.points[k + 1][0] <= t.curve.points[k][0] + 1e-12);
  }
  CHECK(std::abs(t.curve.points.back()[0]) < 0.2);
}

TEST_CASE("a curve parked at the Aubry point has zero action") {
  const auto t = Trace(0.05, 0.0, 10.0);
  const auto d = Coarse1D();
  for (const auto& a : t.curve.velocities) CHECK(a[0] == 0.0);
  const auto K = ComputeIndices(t.curve, QuadraticLinear(), d.evaluator, t.solve.field, 0.05, IndexKind::kK);
  const double rep = RepresentationValue(t.curve, K, QuadraticLinear(), d.evaluator, 0.0, t.solve.field);
  CHECK(std::abs(rep - Interpolate(t.solve.field, {0.0})) < 1e-2);
  CHECK(std::abs(PlainAction(t.curve, QuadraticLinear(), d.evaluator, 0.0)) < 1e-12);
}
