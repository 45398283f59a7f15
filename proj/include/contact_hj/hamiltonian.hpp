#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "contact_hj/common.hpp"
#include "contact_hj/expr.hpp"
#include "json.hpp"

namespace contact_hj {

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

// h(p) = |p|^2 / 2
struct QuadraticKinetic {};

// h(p) = |p|^tau / tau, tau > 1
struct PowerKinetic {
  double tau = 2.0;
};

// Radial table: h(p) is the piecewise-linear interpolant of `values` over
// `radii` evaluated at |p|, extended linearly past the last radius.
struct TabulatedKinetic {
  std::vector<double> radii;
  std::vector<double> values;
};

using Kinetic = std::variant<QuadraticKinetic, PowerKinetic, TabulatedKinetic>;

// H does not depend on u.
struct NoCoupling {};

// Adds phi(x) * u.
struct LinearCoupling {
  Expr phi;
};

// Adds (|p|^2 + 1) * (atan(u) + shift) + u.
struct ArctanCoupling {
  double shift = std::numbers::pi;
};

using Coupling = std::variant<NoCoupling, LinearCoupling, ArctanCoupling>;

// Declared bounds on du H. For linear coupling these are the constant
// (kappa_lo, kappa_hi]; for arctan coupling they are ignored and the
// radius-dependent bounds are derived from the formula.
struct DerivativeBounds {
  double kappa_lo = 0.0;
  double kappa_hi = 0.0;
};

// Contact Hamiltonian H(x, p, u) = h(p) - f(x) + coupling(x, p, u).
class HamiltonianModel {
 public:
  HamiltonianModel(int dim, Kinetic kinetic, Expr potential, Coupling coupling,
                   DerivativeBounds bounds = {});

  int dim() const { return dim_; }
  const Kinetic& kinetic() const { return kinetic_; }
  const Expr& potential() const { return potential_; }
  const Coupling& coupling() const { return coupling_; }
  const DerivativeBounds& bounds() const { return bounds_; }

  double KineticValue(const Point& p) const;
  // Minimum of h over R^n (the constant h_0).
  double KineticMin() const;
  // Homogeneity degree of h, if any.
  std::optional<double> HomogeneityDegree() const;

  double Potential(const Point& x) const { return potential_(x); }
  double Eval(const Point& x, const Point& p, double u) const;
  // Exact du H.
  double PartialU(const Point& x, const Point& p, double u) const;

  // Bounds on du H over (x, p) with |p| <= radius.
  double KappaLow(double radius) const;
  double KappaHigh(double radius) const;

  bool HasClosedFormLagrangian() const;

 private:
  int dim_;
  Kinetic kinetic_;
  Expr potential_;
  Coupling coupling_;
  DerivativeBounds bounds_;
};

// Span-checked evaluation; throws ModelError when the point sizes do not
// match the model dimension or are not finite.
double EvalH(const HamiltonianModel& model, std::span<const double> x, std::span<const double> p,
             double u);

nlohmann::json ModelToJson(const HamiltonianModel& model);
HamiltonianModel ModelFromJson(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Legendre transform
// ---------------------------------------------------------------------------

struct LagrangianEvaluator {
  enum class Mode { kClosedForm, kGridSup };

  Mode mode = Mode::kGridSup;
  double p_extent = 20.0;   // P_max
  double p_spacing = 0.01;  // dp
  double max_extent = 160.0;
  double du_step = 1e-6;  // forward-difference step for du L in GridSup mode

  static LagrangianEvaluator ClosedForm();
  static LagrangianEvaluator GridSup(double p_extent = 20.0, double p_spacing = 0.01);
  // Closed form when the model admits one, otherwise GridSup with defaults.
  static LagrangianEvaluator Auto(const HamiltonianModel& model);
};

// L(x, v, u) = sup_p (p.v - H(x, p, u)).
double Legendre(const HamiltonianModel& model, const LagrangianEvaluator& ev, const Point& x,
                const Point& v, double u);

// Right derivative of u -> L(x, v, u).
double PartialUL(const HamiltonianModel& model, const LagrangianEvaluator& ev, const Point& x,
                 const Point& v, double u);

// (L(x,v,a) - L(x,v,b)) / (a - b), or du L(x,v,b) when a == b. Always <= 0.
double DiscountIndex(const HamiltonianModel& model, const LagrangianEvaluator& ev, const Point& x,
                     const Point& v, double level_a, double level_b);

// Grid minimum of p -> H(x, p, u) over the evaluator's p-grid.
double MinOverP(const HamiltonianModel& model, const LagrangianEvaluator& ev, const Point& x,
                double u);

// ---------------------------------------------------------------------------
// Structural assumption checks
// ---------------------------------------------------------------------------

enum class AssumptionStatus { kVerified, kViolated, kNotApplicable };

std::string ToString(AssumptionStatus s);

struct AssumptionWitness {
  Point x{};
  Point p{};
  double u = 0.0;
  double margin = 0.0;  // positive means the inequality holds with room
};

struct AssumptionEntry {
  std::string name;  // H1..H4, P1..P3
  AssumptionStatus status = AssumptionStatus::kNotApplicable;
  AssumptionWitness witness;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionEntry> entries;

  const AssumptionEntry& Get(const std::string& name) const;
};

nlohmann::json ToJson(const AssumptionReport& report, int dim);

struct AssumptionSampling {
  double box_half_width = 6.0;  // x sampled on [-w, w]^n
  int x_samples = 21;           // per axis
  int p_samples = 21;           // per axis
  int u_samples = 7;
  double p_radius = 5.0;
  double u_radius = 2.0;
  double epsilon = 0.5;  // the H2 ball
  double theta = 0.5;    // the P1/P2 scaling
  double tol = 1e-9;
};

AssumptionReport CheckAssumptions(const HamiltonianModel& model, const AssumptionSampling& sampling,
                                  const LagrangianEvaluator& ev = LagrangianEvaluator::GridSup());

}  // namespace contact_hj
