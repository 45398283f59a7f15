#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "contact_hj/grid.hpp"
#include "contact_hj/hamiltonian.hpp"
#include "contact_hj/solver.hpp"

namespace contact_hj {

// Discrete backward curve: points[0] = z at t = 0, points[k+1] = points[k] -
// dt * velocities[k] at t = -(k+1) dt.
struct Curve {
  int dim = 1;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<Point> points;
  std::vector<Point> velocities;
  // |Interp[field](x_k) - chosen branch value| for every step.
  std::vector<double> defects;
  double defect_threshold = 0.0;
  std::string warning;

  std::size_t steps() const { return velocities.size(); }
  double MaxDefect() const;
};

// Greedy descent of the one-step dynamic programming principle from z over
// ceil(horizon / dt) steps. Ball-masked fields constrain foot points to the
// ball. The running cost level is λ times the interpolated foot value, as in
// the solver. A defect above `defect_threshold` (default: 10 tol plus the
// field's interpolation error bound) attaches a warning.
Curve Backtrace(const GridField& field, const HamiltonianModel& model,
                const LagrangianEvaluator& ev, const ControlSet& controls, double lambda, double c,
                const Point& z, double horizon, double dt, double tol = 1e-8);

enum class IndexKind { kKappa, kK, kKappaBold, kKBold };

std::string ToString(IndexKind kind);
IndexKind IndexKindFromString(const std::string& s);
bool IsBold(IndexKind kind);

struct IndexSeries {
  IndexKind kind = IndexKind::kK;
  double lambda = 0.0;
  double c0 = 0.0;
  // Index of segment k, evaluated at (x_k, a_k) between the level
  // λ Interp[field](x_{k+1}) and the reference level (0 or -λ C0).
  std::vector<double> values;
  // cumulative[0] = 0, cumulative[k+1] = cumulative[k] + values[k] dt.
  std::vector<double> cumulative;

  double ReferenceLevel() const { return IsBold(kind) ? -lambda * c0 : 0.0; }
  double Weight(std::size_t k) const;  // exp(λ cumulative[k])
};

IndexSeries ComputeIndices(const Curve& curve, const HamiltonianModel& model,
                           const LagrangianEvaluator& ev, const GridField& field, double lambda,
                           IndexKind kind, double c0 = 0.0);

// Σ_{k in [begin, end)} exp(λ cumulative[k]) (L(x_k, a_k, level) + c) dt with
// the reference level of the series.
double ExponentialAction(const Curve& curve, const IndexSeries& indices,
                         const HamiltonianModel& model, const LagrangianEvaluator& ev, double c,
                         std::size_t begin, std::size_t end);

// Full representation: the action over the curve plus the boundary term
// exp(λ cumulative[N]) (field(x_N) + C) - C, with C = C0 for the bold kinds
// and 0 otherwise. Equals field(z) up to discretization error.
double RepresentationValue(const Curve& curve, const IndexSeries& indices,
                           const HamiltonianModel& model, const LagrangianEvaluator& ev, double c,
                           const GridField& field);

// Residual of the exponential identity on steps [begin, end):
// |w_b (u_b + C) - w_e (u_e + C) - ExponentialAction(begin, end)|.
double WindowIdentityResidual(const Curve& curve, const IndexSeries& indices,
                              const HamiltonianModel& model, const LagrangianEvaluator& ev, double c,
                              const GridField& field, std::size_t begin, std::size_t end);

// exp(λ cumulative[N]) |field(x_N)|.
double TailError(const Curve& curve, const IndexSeries& indices, const GridField& field);

// Plain action Σ dt (L(x_k, a_k, 0) + c) over all steps.
double PlainAction(const Curve& curve, const HamiltonianModel& model, const LagrangianEvaluator& ev,
                   double c);

// Rows `t,x[,y],a[,ay],index_value,cumulative`; the last point has no
// segment and prints nan in the velocity and index columns.
std::string CurveCsv(const Curve& curve, const IndexSeries& indices);
void WriteCurveCsv(const Curve& curve, const IndexSeries& indices, const std::filesystem::path& path);

}  // namespace contact_hj
