#include "contact_hj/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "contact_hj/io.hpp"

namespace contact_hj {

double Curve::MaxDefect() const {
  double m = 0.0;
  for (double d : defects) m = std::max(m, d);
  return m;
}

Curve Backtrace(const GridField& field, const HamiltonianModel& model,
                const LagrangianEvaluator& ev, const ControlSet& controls, double lambda, double c,
                const Point& z, double horizon, double dt, double tol) {
  const UniformGrid& g = field.grid();
  const Domain& dom = g.domain();
  if (!(dt > 0.0) || !(horizon > 0.0)) throw ConfigError("backtrace needs positive dt and horizon");
  if (!dom.Contains(z, 1e-12)) {
    throw DomainError("start point " + FormatPoint(z, g.dim()) + " outside " + dom.Describe());
  }
  const bool ball = std::holds_alternative<Ball>(dom.mask);
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  Curve curve;
  curve.dim = g.dim();
  curve.dt = dt;
  curve.defect_threshold = 10.0 * tol + InterpolationErrorBound(field);
  curve.points.push_back(z);
  curve.times.push_back(0.0);
  Point x = z;
  for (std::size_t k = 0; k < steps; ++k) {
    double best = std::numeric_limits<double>::infinity();
    Point best_a{};
    bool any = false;
    for (const Point& a : controls.controls) {
      const Point foot = x - dt * a;
      if (ball ? !dom.Contains(foot, 1e-12) : !dom.InBox(foot)) continue;
      const double w = Interpolate(field, foot);
      const double value = dt * (Legendre(model, ev, x, a, lambda * w) + c) + w;
      any = true;
      if (value < best) {
        best = value;
        best_a = a;
      }
    }
    if (!any) {
      throw ConfigError("no admissible control at " + FormatPoint(x, g.dim()) + ": mask too thin");
    }
    curve.defects.push_back(std::abs(Interpolate(field, x) - best));
    curve.velocities.push_back(best_a);
    x = x - dt * best_a;
    curve.points.push_back(x);
    curve.times.push_back(-static_cast<double>(k + 1) * dt);
  }
  const double worst = curve.MaxDefect();
  if (worst > curve.defect_threshold) {
    curve.warning = "max DPP defect " + FormatDouble(worst) + " exceeds " +
                    FormatDouble(curve.defect_threshold);
  }
  return curve;
}

// ---------------------------------------------------------------------------

std::string ToString(IndexKind kind) {
  switch (kind) {
    case IndexKind::kKappa: return "kappa";
    case IndexKind::kK: return "K";
    case IndexKind::kKappaBold: return "k_bold";
    case IndexKind::kKBold: return "K_bold";
  }
  return "?";
}

IndexKind IndexKindFromString(const std::string& s) {
  for (auto k : {IndexKind::kKappa, IndexKind::kK, IndexKind::kKappaBold, IndexKind::kKBold}) {
    if (ToString(k) == s) return k;
  }
  throw ConfigError("unknown index kind '" + s + "'");
}

bool IsBold(IndexKind kind) { return kind == IndexKind::kKappaBold || kind == IndexKind::kKBold; }

double IndexSeries::Weight(std::size_t k) const { return std::exp(lambda * cumulative[k]); }

IndexSeries ComputeIndices(const Curve& curve, const HamiltonianModel& model,
                           const LagrangianEvaluator& ev, const GridField& field, double lambda,
                           IndexKind kind, double c0) {
  IndexSeries s;
  s.kind = kind;
  s.lambda = lambda;
  s.c0 = c0;
  const double b = s.ReferenceLevel();
  s.values.reserve(curve.steps());
  s.cumulative.assign(1, 0.0);
  for (std::size_t k = 0; k < curve.steps(); ++k) {
    const double a = lambda * Interpolate(field, curve.points[k + 1]);
    const double v = DiscountIndex(model, ev, curve.points[k], curve.velocities[k], a, b);
    s.values.push_back(v);
    s.cumulative.push_back(s.cumulative.back() + v * curve.dt);
  }
  return s;
}

double ExponentialAction(const Curve& curve, const IndexSeries& indices,
                         const HamiltonianModel& model, const LagrangianEvaluator& ev, double c,
                         std::size_t begin, std::size_t end) {
  if (begin > end || end > curve.steps()) throw ConfigError("action window out of range");
  const double level = indices.ReferenceLevel();
  double sum = 0.0;
  for (std::size_t k = begin; k < end; ++k) {
    sum += indices.Weight(k) *
           (Legendre(model, ev, curve.points[k], curve.velocities[k], level) + c) * curve.dt;
  }
  return sum;
}

namespace {

double Shift(const IndexSeries& s) { return IsBold(s.kind) ? s.c0 : 0.0; }

}  // namespace

double RepresentationValue(const Curve& curve, const IndexSeries& indices,
                           const HamiltonianModel& model, const LagrangianEvaluator& ev, double c,
                           const GridField& field) {
  const std::size_t n = curve.steps();
  const double shift = Shift(indices);
  return ExponentialAction(curve, indices, model, ev, c, 0, n) +
         indices.Weight(n) * (Interpolate(field, curve.points[n]) + shift) - shift;
}

double WindowIdentityResidual(const Curve& curve, const IndexSeries& indices,
                              const HamiltonianModel& model, const LagrangianEvaluator& ev, double c,
                              const GridField& field, std::size_t begin, std::size_t end) {
  const double shift = Shift(indices);
  const double lhs = indices.Weight(begin) * (Interpolate(field, curve.points[begin]) + shift) -
                     indices.Weight(end) * (Interpolate(field, curve.points[end]) + shift);
  return std::abs(lhs - ExponentialAction(curve, indices, model, ev, c, begin, end));
}

double TailError(const Curve& curve, const IndexSeries& indices, const GridField& field) {
  const std::size_t n = curve.steps();
  return indices.Weight(n) * std::abs(Interpolate(field, curve.points[n]));
}

double PlainAction(const Curve& curve, const HamiltonianModel& model, const LagrangianEvaluator& ev,
                   double c) {
  double sum = 0.0;
  for (std::size_t k = 0; k < curve.steps(); ++k) {
    sum += (Legendre(model, ev, curve.points[k], curve.velocities[k], 0.0) + c) * curve.dt;
  }
  return sum;
}

std::string CurveCsv(const Curve& curve, const IndexSeries& indices) {
  const bool two = curve.dim == 2;
  std::string out = two ? "t,x,y,a,ay,index_value,cumulative\n" : "t,x,a,index_value,cumulative\n";
  const std::string nan = "nan";
  for (std::size_t k = 0; k < curve.points.size(); ++k) {
    const bool seg = k < curve.steps();
    out += FormatDouble(curve.times[k]) + "," + FormatDouble(curve.points[k][0]);
    if (two) out += "," + FormatDouble(curve.points[k][1]);
    out += "," + (seg ? FormatDouble(curve.velocities[k][0]) : nan);
    if (two) out += "," + (seg ? FormatDouble(curve.velocities[k][1]) : nan);
    out += "," + (seg && k < indices.values.size() ? FormatDouble(indices.values[k]) : nan);
    out += "," + (k < indices.cumulative.size() ? FormatDouble(indices.cumulative[k]) : nan) + "\n";
  }
  return out;
}

void WriteCurveCsv(const Curve& curve, const IndexSeries& indices,
                   const std::filesystem::path& path) {
  WriteFileAtomic(path, CurveCsv(curve, indices));
}

}  // namespace contact_hj
