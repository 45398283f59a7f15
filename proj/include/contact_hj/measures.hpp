#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "contact_hj/expr.hpp"
#include "contact_hj/grid.hpp"
#include "contact_hj/hamiltonian.hpp"
#include "contact_hj/trajectory.hpp"
#include "json.hpp"

namespace contact_hj {

struct MeasureSample {
  Point x{};
  Point v{};
  double w = 0.0;
};

// Probability measure on (x, v) given by finitely many weighted atoms.
class WeightedSampleMeasure {
 public:
  WeightedSampleMeasure() = default;
  // Normalizes the given nonnegative weights to total mass one.
  WeightedSampleMeasure(int dim, std::vector<MeasureSample> samples);

  int dim() const { return dim_; }
  const std::vector<MeasureSample>& samples() const { return samples_; }
  // max over atoms of max(|x|, |v|)
  double SupportRadius() const { return support_radius_; }
  double TotalWeight() const;

  template <typename F>
  double Pair(F&& fn) const {
    double sum = 0.0;
    for (const auto& s : samples_) sum += s.w * fn(s.x, s.v);
    return sum;
  }

  // Image under (x, v) -> (-x, -v).
  WeightedSampleMeasure Mirror() const;

 private:
  int dim_ = 1;
  std::vector<MeasureSample> samples_;
  double support_radius_ = 0.0;
};

WeightedSampleMeasure PointMass(int dim, const Point& x, const Point& v);

// Rows `x[,y],v[,vy],w`.
std::string MeasureCsv(const WeightedSampleMeasure& mu);
void WriteMeasureCsv(const WeightedSampleMeasure& mu, const std::filesystem::path& path);

struct TestFunction {
  std::string name;
  Expr f;
  std::array<Expr, 2> grad;
};

TestFunction MakeTestFunction(const std::string& text, int dim);

// x, x^2, x^3, sin x, cos x per axis, plus x*y in 2D.
std::vector<TestFunction> DefaultBattery(int dim);

// Atoms (x_k, a_k) for every segment with weights exp(λ cumulative[k]) dt.
WeightedSampleMeasure DiscountedMeasure(const Curve& curve, const IndexSeries& indices);

// max over the battery of |<mu, v . Dphi(x)>|.
double ClosednessDefect(const WeightedSampleMeasure& mu, const std::vector<TestFunction>& battery);

// <mu, L(., ., 0)> + c.
double MatherDefect(const WeightedSampleMeasure& mu, const HamiltonianModel& model,
                    const LagrangianEvaluator& ev, double c);

// <mu, w(x) du L(x, v, 0)>; DomainError when an atom leaves the field mask.
double SelectionFunctional(const WeightedSampleMeasure& mu, const GridField& w_field,
                           const HamiltonianModel& model, const LagrangianEvaluator& ev);

// Distance proxy: max over the battery and L(., ., 0) of |<mu - nu, phi>|.
double WeakDiscrepancy(const WeightedSampleMeasure& mu, const WeightedSampleMeasure& nu,
                       const std::vector<TestFunction>& battery, const HamiltonianModel& model,
                       const LagrangianEvaluator& ev);

struct LabeledMeasure {
  double lambda = 0.0;
  WeightedSampleMeasure measure;
};

struct WeakLimitReport {
  std::vector<double> lambdas;        // as given, strictly decreasing
  std::vector<double> discrepancies;  // between consecutive entries
  bool cauchy_decreasing = false;
  double limit_proxy_lambda = 0.0;

  nlohmann::json ToJson() const;
};

WeakLimitReport WeakLimitDiagnostics(const std::vector<LabeledMeasure>& measures,
                                     const std::vector<TestFunction>& battery,
                                     const HamiltonianModel& model, const LagrangianEvaluator& ev);

}  // namespace contact_hj
