#include "contact_hj/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>
#include <tbb/partitioner.h>
#include <tbb/task_arena.h>

namespace contact_hj {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kManeInit = 1e6;

void ForEachNode(std::size_t n, int workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) body(k);
    return;
  }
  tbb::task_arena arena(workers);
  arena.execute([&] {
    tbb::parallel_for(
        tbb::blocked_range<std::size_t>(0, n, 64),
        [&](const tbb::blocked_range<std::size_t>& r) {
          for (std::size_t k = r.begin(); k != r.end(); ++k) body(k);
        },
        tbb::static_partitioner());
  });
}

double SupDiff(const UniformGrid& g, const std::vector<double>& a, const std::vector<double>& b) {
  double r = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.InMask(k)) r = std::max(r, std::abs(a[k] - b[k]));
  }
  return r;
}

std::size_t PinNode(const UniformGrid& g, const Point& y) {
  const std::size_t k = g.NearestNode(y);
  if (Norm(g.Node(k) - y) > 1e-9 * (1.0 + Norm(y))) {
    throw ConfigError("point " + FormatPoint(y, g.dim()) + " is not an in-mask grid node");
  }
  return k;
}

void CheckParams(const Discretization& disc) {
  const auto& p = disc.params;
  if (!(p.dt > 0.0)) throw ConfigError("solver.dt must be positive");
  if (!(p.tol > 0.0)) throw ConfigError("solver.tol must be positive");
  if (p.max_iters < 1) throw ConfigError("solver.max_iters must be at least 1");
  if (!(p.damping > 0.0 && p.damping <= 1.0)) throw ConfigError("solver.damping must be in (0, 1]");
  const Domain& d = disc.box->domain();
  double diameter = 0.0;
  for (int a = 0; a < d.dim; ++a) diameter += (d.hi[a] - d.lo[a]) * (d.hi[a] - d.lo[a]);
  if (p.dt * disc.controls.max_speed > std::sqrt(diameter)) {
    throw ConfigError("dt * max_speed exceeds the grid diameter");
  }
}

// Generic fixed-point loop. `post` runs on the new iterate before the residual
// is measured and may throw.
template <typename Post>
SolveOutcome Iterate(const LaxOleinikOperator& op, GridField v, const SolveParams& params,
                     Post&& post) {
  const UniformGrid& g = op.grid();
  std::vector<double> next(v.values().size());
  SolveOutcome out;
  for (int it = 1; it <= params.max_iters; ++it) {
    op.Apply(v.values(), next, params.workers);
    if (params.damping < 1.0) {
      for (std::size_t k = 0; k < next.size(); ++k) {
        if (g.InMask(k)) next[k] = (1.0 - params.damping) * v[k] + params.damping * next[k];
      }
    }
    post(next, v.values(), it);
    const double r = SupDiff(g, next, v.values());
    v.values().swap(next);
    out.residuals.push_back(r);
    out.iterations = it;
    out.final_residual = r;
    if (!std::isfinite(r)) break;
    if (r <= params.tol) {
      out.converged = true;
      break;
    }
  }
  out.field = std::move(v);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

ControlSet ControlSet::Make(int dim, double max_speed, double spacing) {
  if (dim != 1 && dim != 2) throw ConfigError("controls: dimension must be 1 or 2");
  if (!(max_speed > 0.0) || !(spacing > 0.0)) {
    throw ConfigError("controls: max_speed and spacing must be positive");
  }
  ControlSet cs;
  cs.dim = dim;
  cs.max_speed = max_speed;
  cs.spacing = spacing;
  const int m = static_cast<int>(std::floor(max_speed / spacing + 1e-9));
  for (int i = -m; i <= m; ++i) {
    for (int j = (dim == 2 ? -m : 0); j <= (dim == 2 ? m : 0); ++j) {
      const Point a{i * spacing, j * spacing};
      if (Norm(a) <= max_speed * (1.0 + 1e-12)) cs.controls.push_back(a);
    }
  }
  // Generated in lexicographic order already.
  return cs;
}

nlohmann::json SolveOutcome::ToJson() const {
  return {{"iterations", iterations}, {"residual", final_residual}, {"converged", converged}};
}

std::shared_ptr<const UniformGrid> Discretization::BallGrid(double radius) const {
  return box->WithMask(Ball{Point{}, radius});
}

// ---------------------------------------------------------------------------

LaxOleinikOperator::LaxOleinikOperator(const HamiltonianModel& model, const LagrangianEvaluator& ev,
                                       const ControlSet& controls,
                                       std::shared_ptr<const UniformGrid> grid, StepSpec spec)
    : model_(&model), ev_(&ev), controls_(&controls), grid_(std::move(grid)), spec_(spec) {
  if (spec_.lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  if (!(spec_.dt > 0.0)) throw ConfigError("dt must be positive");
  if (controls.dim != grid_->dim() || model.dim() != grid_->dim()) {
    throw ConfigError("model, controls and grid dimensions differ");
  }
  const bool closed = ev.mode == LagrangianEvaluator::Mode::kClosedForm;
  if (closed && !model.HasClosedFormLagrangian()) {
    throw ModelError("closed-form Lagrangian not available for this model");
  }
  const auto& coupling = model.coupling();
  const std::size_t n = grid_->size();
  f_.assign(n, 0.0);
  phi_.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (!grid_->InMask(k)) continue;
    const Point x = grid_->Node(k);
    f_[k] = model.Potential(x);
    if (const auto* lin = std::get_if<LinearCoupling>(&coupling)) phi_[k] = lin->phi(x);
  }
  speed2_.resize(controls.size());
  for (std::size_t c = 0; c < controls.size(); ++c) {
    speed2_[c] = Dot(controls.controls[c], controls.controls[c]);
  }
  if (std::holds_alternative<ArctanCoupling>(coupling)) {
    if (closed) {
      form_ = Form::kArctanQuadratic;
      arctan_shift_ = std::get<ArctanCoupling>(coupling).shift;
    }
    return;
  }
  form_ = Form::kSeparable;
  kinetic_.resize(controls.size());
  const Point x0 = grid_->Node(grid_->NearestNode(Point{}));
  const double f0 = model.Potential(x0);
  for (std::size_t c = 0; c < controls.size(); ++c) {
    const Point& a = controls.controls[c];
    if (closed) {
      if (const auto* pk = std::get_if<PowerKinetic>(&model.kinetic())) {
        const double dual = pk->tau / (pk->tau - 1.0);
        kinetic_[c] = std::pow(Norm(a), dual) / dual;
      } else {
        kinetic_[c] = 0.5 * Dot(a, a);
      }
    } else {
      kinetic_[c] = Legendre(model, ev, x0, a, 0.0) - f0;
    }
  }
}

double LaxOleinikOperator::RunningCost(std::size_t node, std::size_t control, double level) const {
  switch (form_) {
    case Form::kSeparable:
      return kinetic_[control] + f_[node] - phi_[node] * level;
    case Form::kArctanQuadratic: {
      const double a = std::atan(level) + arctan_shift_;
      const double curv = 1.0 + 2.0 * a;
      if (!(curv > 0.0)) throw ModelError("arctan coupling is not coercive at this level");
      return speed2_[control] / (2.0 * curv) - a + f_[node] - level;
    }
    case Form::kGeneric:
      break;
  }
  return Legendre(*model_, *ev_, grid_->Node(node), controls_->controls[control], level);
}

std::optional<double> LaxOleinikOperator::Branch(const std::vector<double>& v, std::size_t node,
                                                 std::size_t control) const {
  const Point x = grid_->Node(node);
  const Point foot = x - spec_.dt * controls_->controls[control];
  if (spec_.constrained && !grid_->domain().Contains(foot, 1e-12)) return std::nullopt;
  const double w = InterpolateClamped(*grid_, v, foot);
  if (spec_.treatment == ContactTreatment::kFrozen) {
    return spec_.dt * (RunningCost(node, control, 0.0) + spec_.c) + (1.0 - spec_.lambda * spec_.dt) * w;
  }
  return spec_.dt * (RunningCost(node, control, spec_.lambda * w) + spec_.c) + w;
}

double LaxOleinikOperator::NodeMin(const std::vector<double>& v, std::size_t node) const {
  double best = kInf;
  bool any = false;
  for (std::size_t c = 0; c < controls_->size(); ++c) {
    const auto b = Branch(v, node, c);
    if (!b) continue;
    any = true;
    if (*b < best) best = *b;
  }
  if (!any) {
    throw ConfigError("no admissible control at node " + FormatPoint(grid_->Node(node), grid_->dim()) +
                      ": mask too thin");
  }
  return best;
}

void LaxOleinikOperator::Apply(const std::vector<double>& v, std::vector<double>& out,
                               int workers) const {
  if (v.size() != grid_->size()) throw ConfigError("field does not match the operator grid");
  out.resize(v.size());
  ForEachNode(v.size(), workers, [&](std::size_t k) {
    out[k] = grid_->InMask(k) ? NodeMin(v, k) : v[k];
  });
}

GridField LaxOleinikStep(const GridField& v, const HamiltonianModel& model,
                         const LagrangianEvaluator& ev, const ControlSet& controls, double lambda,
                         double c, double dt, bool constrained, int workers) {
  LaxOleinikOperator op(model, ev, controls, v.grid_ptr(),
                        StepSpec{lambda, c, dt, constrained, ContactTreatment::kFootPoint});
  GridField out(v.grid_ptr(), 0.0, v.meta());
  op.Apply(v.values(), out.values(), workers);
  return out;
}

// ---------------------------------------------------------------------------

SolveOutcome SolveStateConstraint(const HamiltonianModel& model, const Discretization& disc,
                                  double radius, double lambda, double c,
                                  const std::optional<GridField>& init) {
  CheckParams(disc);
  if (!(lambda > 0.0)) throw ConfigError("state-constraint solve needs lambda > 0");
  if (std::holds_alternative<NoCoupling>(model.coupling())) {
    throw ConfigError("state-constraint solve needs a u-dependent coupling");
  }
  auto grid = disc.BallGrid(radius);
  LaxOleinikOperator op(model, disc.evaluator, disc.controls, grid,
                        StepSpec{lambda, c, disc.params.dt, true, ContactTreatment::kFootPoint});
  const FieldMeta meta{lambda, c, FieldKind::kStateConstraint};
  GridField v(grid, 0.0, meta);
  if (init) {
    for (std::size_t k = 0; k < grid->size(); ++k) {
      if (grid->InMask(k)) v[k] = Interpolate(*init, grid->Node(k));
    }
  }
  return Iterate(op, std::move(v), disc.params, [](std::vector<double>&, const std::vector<double>&, int) {});
}

nlohmann::json CriticalEstimate::ToJson() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"lambda", r.lambda},
                         {"value_at_origin", r.value_at_origin},
                         {"c_lambda", r.c_lambda},
                         {"iterations", r.iterations},
                         {"residual", r.residual},
                         {"converged", r.converged}});
  }
  return {{"c", c}, {"m0", m0}, {"radius", radius}, {"consistent", consistent}, {"rows", rows_json}};
}

double LowerCriticalBound(const HamiltonianModel& model, const LagrangianEvaluator& ev,
                          const UniformGrid& grid) {
  LagrangianEvaluator grid_ev = ev;
  grid_ev.mode = LagrangianEvaluator::Mode::kGridSup;
  double m0 = -kInf;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid.InMask(k)) m0 = std::max(m0, MinOverP(model, grid_ev, grid.Node(k), 0.0));
  }
  return m0;
}

CriticalEstimate EstimateCriticalValue(const HamiltonianModel& model, const Discretization& disc,
                                       double radius, const std::vector<double>& lambdas,
                                       double consistency_tol) {
  CheckParams(disc);
  if (lambdas.size() < 2) throw ConfigError("critical value estimate needs at least two lambdas");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0) || (i > 0 && !(lambdas[i] < lambdas[i - 1]))) {
      throw ConfigError("critical lambdas must be positive and strictly decreasing");
    }
  }
  auto grid = disc.BallGrid(radius);
  const std::size_t origin = PinNode(*grid, Point{});
  CriticalEstimate est;
  est.radius = radius;
  std::optional<GridField> warm;
  for (double lambda : lambdas) {
    LaxOleinikOperator op(model, disc.evaluator, disc.controls, grid,
                          StepSpec{lambda, 0.0, disc.params.dt, true, ContactTreatment::kFrozen});
    GridField v(grid, 0.0, FieldMeta{lambda, 0.0, FieldKind::kStateConstraint});
    if (warm) {
      // λ v is roughly λ-independent; rescale the previous solution.
      const double s = warm->meta().lambda / lambda;
      for (std::size_t k = 0; k < grid->size(); ++k) v[k] = s * (*warm)[k];
    }
    auto out = Iterate(op, std::move(v), disc.params, [](std::vector<double>&, const std::vector<double>&, int) {});
    if (!out.converged) {
      throw ConfigError("critical value solve did not converge at lambda = " + std::to_string(lambda));
    }
    CriticalRow row;
    row.lambda = lambda;
    row.value_at_origin = out.field[origin];
    row.c_lambda = -lambda * row.value_at_origin;
    row.iterations = out.iterations;
    row.residual = out.final_residual;
    row.converged = out.converged;
    est.rows.push_back(row);
    warm = std::move(out.field);
  }
  const auto& r1 = est.rows[est.rows.size() - 2];
  const auto& r2 = est.rows.back();
  est.c = (r1.lambda * r2.c_lambda - r2.lambda * r1.c_lambda) / (r1.lambda - r2.lambda);
  est.m0 = LowerCriticalBound(model, disc.evaluator, *grid);
  est.consistent = est.c >= est.m0 - consistency_tol;
  return est;
}

SolveOutcome SolveErgodic(const HamiltonianModel& model, const Discretization& disc, double radius,
                          double c, const Point& anchor, const std::optional<GridField>& init,
                          int burn_in) {
  CheckParams(disc);
  auto grid = disc.BallGrid(radius);
  const std::size_t pin = PinNode(*grid, anchor);
  LaxOleinikOperator op(model, disc.evaluator, disc.controls, grid,
                        StepSpec{0.0, c, disc.params.dt, true, ContactTreatment::kFootPoint});
  GridField v(grid, 0.0, FieldMeta{0.0, c, FieldKind::kErgodic});
  if (init) {
    for (std::size_t k = 0; k < grid->size(); ++k) {
      if (grid->InMask(k)) v[k] = Interpolate(*init, grid->Node(k));
    }
    const double a = v[pin];
    for (auto& x : v.values()) x -= a;
  }
  const double tol = disc.params.tol;
  auto renormalize = [&](std::vector<double>& next, const std::vector<double>& prev, int it) {
    const double drift = next[pin] - prev[pin];
    // A wrong c still yields a renormalized fixed point; it shows up as a
    // steady drift, so the test also runs once the field has settled.
    double moved = 0.0;
    for (std::size_t k = 0; k < next.size(); ++k) {
      if (grid->InMask(k)) moved = std::max(moved, std::abs(next[k] - drift - prev[k]));
    }
    const bool settled = moved <= tol;
    if ((it > burn_in || settled) && std::abs(drift) > 10.0 * tol) {
      throw CriticalValueMismatch("anchor drifts by " + std::to_string(drift) +
                                  " per sweep after " + std::to_string(it) + " sweeps with c = " +
                                  std::to_string(c));
    }
    const double a = next[pin];
    for (std::size_t k = 0; k < next.size(); ++k) {
      if (grid->InMask(k)) next[k] -= a;
    }
    next[pin] = 0.0;
  };
  return Iterate(op, std::move(v), disc.params, renormalize);
}

MaximalOutcome SolveMaximalGlobal(const HamiltonianModel& model, const Discretization& disc,
                                  double lambda, double c, const std::vector<double>& radii,
                                  const Point& probe, double stabilization_tol) {
  if (radii.size() < 2) throw ConfigError("radius schedule needs at least two radii");
  for (std::size_t i = 1; i < radii.size(); ++i) {
    if (!(radii[i] > radii[i - 1])) throw ConfigError("radius schedule must be strictly increasing");
  }
  MaximalOutcome out;
  for (double r : radii) {
    auto s = SolveStateConstraint(model, disc, r, lambda, c);
    MaximalRow row{r, Interpolate(s.field, probe), s.iterations, s.final_residual, s.converged};
    out.rows.push_back(row);
    out.solve = std::move(s);
    const std::size_t n = out.rows.size();
    if (n >= 2 && std::abs(out.rows[n - 1].probe_value - out.rows[n - 2].probe_value) <
                      stabilization_tol) {
      out.stabilized = true;
      out.stabilized_radius = out.rows[n - 2].radius;
      break;
    }
  }
  out.solve.field.meta().kind = FieldKind::kMaximalTruncated;
  return out;
}

SolveOutcome ManePotential(const HamiltonianModel& model, const Discretization& disc,
                           const Point& y, double c, double radius) {
  CheckParams(disc);
  auto grid = disc.BallGrid(radius);
  const std::size_t pin = PinNode(*grid, y);
  LaxOleinikOperator op(model, disc.evaluator, disc.controls, grid,
                        StepSpec{0.0, c, disc.params.dt, true, ContactTreatment::kFootPoint});
  GridField v(grid, kManeInit, FieldMeta{0.0, c, FieldKind::kMane});
  v[pin] = 0.0;
  return Iterate(op, std::move(v), disc.params,
                 [pin](std::vector<double>& next, const std::vector<double>&, int) { next[pin] = 0.0; });
}

std::vector<AubryEntry> AubryIndicator(const HamiltonianModel& model, const Discretization& disc,
                                       double c, double radius, const std::vector<Point>& samples) {
  std::vector<AubryEntry> out;
  for (const Point& y : samples) {
    auto s = ManePotential(model, disc, y, c, radius);
    const UniformGrid& g = s.field.grid();
    LaxOleinikOperator op(model, disc.evaluator, disc.controls, s.field.grid_ptr(),
                          StepSpec{0.0, c, disc.params.dt, true, ContactTreatment::kFootPoint});
    const std::size_t pin = PinNode(g, y);
    double best = kInf;
    for (std::size_t a = 0; a < disc.controls.size(); ++a) {
      if (auto b = op.Branch(s.field.values(), pin, a)) best = std::min(best, *b);
    }
    out.push_back({y, best - s.field[pin], s.iterations, s.converged});
  }
  return out;
}

double ErgodicResidual(const HamiltonianModel& model, const Discretization& disc,
                       const GridField& v, double c, const Point& anchor) {
  const UniformGrid& g = v.grid();
  const std::size_t pin = PinNode(g, anchor);
  LaxOleinikOperator op(model, disc.evaluator, disc.controls, v.grid_ptr(),
                        StepSpec{0.0, c, disc.params.dt, true, ContactTreatment::kFootPoint});
  std::vector<double> next;
  op.Apply(v.values(), next, disc.params.workers);
  const double a = next[pin] - v[pin];
  for (auto& x : next) x -= a;
  return SupDiff(g, next, v.values());
}

}  // namespace contact_hj
