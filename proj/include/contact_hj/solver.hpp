#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "contact_hj/grid.hpp"
#include "contact_hj/hamiltonian.hpp"
#include "json.hpp"

namespace contact_hj {

// Lattice of velocities {a : a = Δa * m, m integer vector, |a| <= A_max},
// sorted lexicographically so that argmin ties resolve deterministically.
struct ControlSet {
  int dim = 1;
  double max_speed = 6.0;
  double spacing = 0.1;
  std::vector<Point> controls;

  static ControlSet Make(int dim, double max_speed, double spacing);
  std::size_t size() const { return controls.size(); }
};

struct SolveParams {
  double dt = 0.025;
  double tol = 1e-8;
  int max_iters = 50000;
  double damping = 1.0;
  int workers = 1;
};

struct SolveOutcome {
  GridField field;
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  // Sup-norm residual of every sweep, in order.
  std::vector<double> residuals;

  nlohmann::json ToJson() const;
};

// Everything that fixes the discrete problem apart from the model: the
// background box grid, the control lattice, the Legendre evaluator and the
// iteration parameters.
struct Discretization {
  std::shared_ptr<const UniformGrid> box;
  ControlSet controls;
  LagrangianEvaluator evaluator;
  SolveParams params;

  std::shared_ptr<const UniformGrid> BallGrid(double radius) const;
};

// How the unknown enters the running cost of one step.
//   kFootPoint: L(x, a, λ w) with w the interpolated value at the foot point.
//   kFrozen:    L(x, a, 0) and the discount acts as (1 - λ Δt) w.
enum class ContactTreatment { kFootPoint, kFrozen };

struct StepSpec {
  double lambda = 0.0;
  double c = 0.0;
  double dt = 0.025;
  bool constrained = true;
  ContactTreatment treatment = ContactTreatment::kFootPoint;
};

// One application of the discrete dynamic programming operator
//   v'(x) = min_a { Δt (L(x, a, λ w_a) + c) + w_a },  w_a = Interp[v](x - Δt a)
// over the controls whose foot point stays in the mask (when constrained).
// Precomputes per-node and per-control data so repeated sweeps are cheap.
class LaxOleinikOperator {
 public:
  LaxOleinikOperator(const HamiltonianModel& model, const LagrangianEvaluator& ev,
                     const ControlSet& controls, std::shared_ptr<const UniformGrid> grid,
                     StepSpec spec);

  const StepSpec& spec() const { return spec_; }
  const UniformGrid& grid() const { return *grid_; }

  // Writes T(v) into `out` on in-mask nodes (out-of-mask entries copy v).
  void Apply(const std::vector<double>& v, std::vector<double>& out, int workers = 1) const;

  // Value of the branch `control` at `node`, or nullopt when inadmissible.
  std::optional<double> Branch(const std::vector<double>& v, std::size_t node,
                               std::size_t control) const;

 private:
  enum class Form { kSeparable, kArctanQuadratic, kGeneric };

  double RunningCost(std::size_t node, std::size_t control, double level) const;
  double NodeMin(const std::vector<double>& v, std::size_t node) const;

  const HamiltonianModel* model_;
  const LagrangianEvaluator* ev_;
  const ControlSet* controls_;
  std::shared_ptr<const UniformGrid> grid_;
  StepSpec spec_;
  Form form_ = Form::kGeneric;
  double arctan_shift_ = 0.0;
  std::vector<double> f_;        // potential per node
  std::vector<double> phi_;      // linear coupling coefficient per node
  std::vector<double> kinetic_;  // conjugate kinetic part per control
  std::vector<double> speed2_;   // |a|^2 per control
};

GridField LaxOleinikStep(const GridField& v, const HamiltonianModel& model,
                         const LagrangianEvaluator& ev, const ControlSet& controls, double lambda,
                         double c, double dt, bool constrained, int workers = 1);

// Fixed point of the constrained operator on the ball of radius R.
SolveOutcome SolveStateConstraint(const HamiltonianModel& model, const Discretization& disc,
                                  double radius, double lambda, double c,
                                  const std::optional<GridField>& init = std::nullopt);

struct CriticalRow {
  double lambda = 0.0;
  double value_at_origin = 0.0;
  double c_lambda = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

struct CriticalEstimate {
  double c = 0.0;
  double m0 = 0.0;
  double radius = 0.0;
  bool consistent = false;  // c >= m0 - tolerance
  std::vector<CriticalRow> rows;

  nlohmann::json ToJson() const;
};

// Solves λ v + H(x, Dv, 0) = 0 on the ball for each λ (strictly decreasing,
// at least two), reads c(λ) = -λ v(0) and extrapolates the last two linearly
// in λ. Also reports m0 = max_x min_p H(x, p, 0) over the in-mask nodes.
CriticalEstimate EstimateCriticalValue(const HamiltonianModel& model, const Discretization& disc,
                                       double radius, const std::vector<double>& lambdas,
                                       double consistency_tol = 0.02);

// λ = 0 iteration renormalized to vanish at the anchor node after every
// sweep. Throws CriticalValueMismatch when the anchor still drifts by more
// than 10 tol per sweep once the burn-in is over.
SolveOutcome SolveErgodic(const HamiltonianModel& model, const Discretization& disc, double radius,
                          double c, const Point& anchor,
                          const std::optional<GridField>& init = std::nullopt,
                          int burn_in = 2000);

struct MaximalRow {
  double radius = 0.0;
  double probe_value = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

struct MaximalOutcome {
  SolveOutcome solve;  // field of the last radius, kind maximal_truncated
  std::vector<MaximalRow> rows;
  bool stabilized = false;
  double stabilized_radius = 0.0;
};

// State-constraint solves along an increasing radius schedule until the probe
// value changes by less than `stabilization_tol` between consecutive radii.
MaximalOutcome SolveMaximalGlobal(const HamiltonianModel& model, const Discretization& disc,
                                  double lambda, double c, const std::vector<double>& radii,
                                  const Point& probe, double stabilization_tol);

// S(., y) on the ball: λ = 0 value iteration pinned to 0 at the node y,
// started from 1e6 elsewhere.
SolveOutcome ManePotential(const HamiltonianModel& model, const Discretization& disc,
                           const Point& y, double c, double radius);

struct AubryEntry {
  Point y{};
  double delta = 0.0;
  int iterations = 0;
  bool converged = false;
};

// δ(y) = min_a {Δt (L(y, a, 0) + c) + S_y(y - Δt a)} - S_y(y) with S_y the
// potential pinned at y.
std::vector<AubryEntry> AubryIndicator(const HamiltonianModel& model, const Discretization& disc,
                                       double c, double radius, const std::vector<Point>& samples);

// Sup-norm of T(v) - v for the λ = 0 operator, after renormalizing T(v) at
// the anchor.
double ErgodicResidual(const HamiltonianModel& model, const Discretization& disc,
                       const GridField& v, double c, const Point& anchor);

// m0 over the in-mask nodes of `grid`.
double LowerCriticalBound(const HamiltonianModel& model, const LagrangianEvaluator& ev,
                          const UniformGrid& grid);

}  // namespace contact_hj
