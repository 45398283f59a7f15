#include "contact_hj/measures.hpp"

#include <algorithm>
#include <cmath>

#include "contact_hj/io.hpp"

namespace contact_hj {

WeightedSampleMeasure::WeightedSampleMeasure(int dim, std::vector<MeasureSample> samples)
    : dim_(dim), samples_(std::move(samples)) {
  double total = 0.0;
  for (const auto& s : samples_) {
    if (!(s.w >= 0.0) || !std::isfinite(s.w)) throw ConfigError("measure weights must be finite and >= 0");
    total += s.w;
  }
  if (!(total > 0.0)) throw std::logic_error("measure has zero total weight");
  for (auto& s : samples_) {
    s.w /= total;
    support_radius_ = std::max({support_radius_, Norm(s.x), Norm(s.v)});
  }
}

double WeightedSampleMeasure::TotalWeight() const {
  double t = 0.0;
  for (const auto& s : samples_) t += s.w;
  return t;
}

WeightedSampleMeasure WeightedSampleMeasure::Mirror() const {
  WeightedSampleMeasure m = *this;
  for (auto& s : m.samples_) {
    s.x = -1.0 * s.x;
    s.v = -1.0 * s.v;
  }
  return m;
}

WeightedSampleMeasure PointMass(int dim, const Point& x, const Point& v) {
  return WeightedSampleMeasure(dim, {MeasureSample{x, v, 1.0}});
}

std::string MeasureCsv(const WeightedSampleMeasure& mu) {
  const bool two = mu.dim() == 2;
  std::string out = two ? "x,y,v,vy,w\n" : "x,v,w\n";
  for (const auto& s : mu.samples()) {
    out += FormatDouble(s.x[0]);
    if (two) out += "," + FormatDouble(s.x[1]);
    out += "," + FormatDouble(s.v[0]);
    if (two) out += "," + FormatDouble(s.v[1]);
    out += "," + FormatDouble(s.w) + "\n";
  }
  return out;
}

void WriteMeasureCsv(const WeightedSampleMeasure& mu, const std::filesystem::path& path) {
  WriteFileAtomic(path, MeasureCsv(mu));
}

TestFunction MakeTestFunction(const std::string& text, int dim) {
  TestFunction t;
  t.name = text;
  t.f = Expr::Parse(text);
  t.grad[0] = t.f.Derivative(0);
  t.grad[1] = dim == 2 ? t.f.Derivative(1) : Expr::Constant(0.0);
  return t;
}

std::vector<TestFunction> DefaultBattery(int dim) {
  std::vector<TestFunction> out;
  const char* axes[2] = {"x", "y"};
  for (int a = 0; a < dim; ++a) {
    const std::string v = axes[a];
    for (const std::string& text :
         {v, v + "^2", v + "^3", "sin(" + v + ")", "cos(" + v + ")"}) {
      out.push_back(MakeTestFunction(text, dim));
    }
  }
  if (dim == 2) out.push_back(MakeTestFunction("x*y", dim));
  return out;
}

WeightedSampleMeasure DiscountedMeasure(const Curve& curve, const IndexSeries& indices) {
  if (indices.values.size() != curve.steps()) throw ConfigError("indices do not match the curve");
  std::vector<MeasureSample> samples;
  samples.reserve(curve.steps());
  for (std::size_t k = 0; k < curve.steps(); ++k) {
    samples.push_back({curve.points[k], curve.velocities[k], indices.Weight(k) * curve.dt});
  }
  return WeightedSampleMeasure(curve.dim, std::move(samples));
}

double ClosednessDefect(const WeightedSampleMeasure& mu, const std::vector<TestFunction>& battery) {
  double worst = 0.0;
  for (const auto& t : battery) {
    const double pairing = mu.Pair([&](const Point& x, const Point& v) {
      return v[0] * t.grad[0](x) + (mu.dim() == 2 ? v[1] * t.grad[1](x) : 0.0);
    });
    worst = std::max(worst, std::abs(pairing));
  }
  return worst;
}

double MatherDefect(const WeightedSampleMeasure& mu, const HamiltonianModel& model,
                    const LagrangianEvaluator& ev, double c) {
  return mu.Pair([&](const Point& x, const Point& v) { return Legendre(model, ev, x, v, 0.0); }) + c;
}

double SelectionFunctional(const WeightedSampleMeasure& mu, const GridField& w_field,
                           const HamiltonianModel& model, const LagrangianEvaluator& ev) {
  return mu.Pair([&](const Point& x, const Point& v) {
    return Interpolate(w_field, x) * PartialUL(model, ev, x, v, 0.0);
  });
}

double WeakDiscrepancy(const WeightedSampleMeasure& mu, const WeightedSampleMeasure& nu,
                       const std::vector<TestFunction>& battery, const HamiltonianModel& model,
                       const LagrangianEvaluator& ev) {
  double worst = 0.0;
  for (const auto& t : battery) {
    auto fn = [&](const Point& x, const Point&) { return t.f(x); };
    worst = std::max(worst, std::abs(mu.Pair(fn) - nu.Pair(fn)));
  }
  auto lag = [&](const Point& x, const Point& v) { return Legendre(model, ev, x, v, 0.0); };
  return std::max(worst, std::abs(mu.Pair(lag) - nu.Pair(lag)));
}

nlohmann::json WeakLimitReport::ToJson() const {
  return {{"lambdas", lambdas},
          {"discrepancies", discrepancies},
          {"cauchy_decreasing", cauchy_decreasing},
          {"limit_proxy_lambda", limit_proxy_lambda}};
}

WeakLimitReport WeakLimitDiagnostics(const std::vector<LabeledMeasure>& measures,
                                     const std::vector<TestFunction>& battery,
                                     const HamiltonianModel& model, const LagrangianEvaluator& ev) {
  if (measures.size() < 2) throw ConfigError("weak-limit diagnostics need at least two measures");
  WeakLimitReport r;
  for (std::size_t i = 0; i < measures.size(); ++i) {
    r.lambdas.push_back(measures[i].lambda);
    if (i > 0) {
      r.discrepancies.push_back(
          WeakDiscrepancy(measures[i - 1].measure, measures[i].measure, battery, model, ev));
    }
  }
  r.cauchy_decreasing = true;
  for (std::size_t i = 1; i < r.discrepancies.size(); ++i) {
    r.cauchy_decreasing = r.cauchy_decreasing && r.discrepancies[i] < r.discrepancies[i - 1];
  }
  r.limit_proxy_lambda = measures.back().lambda;
  return r;
}

}  // namespace contact_hj
