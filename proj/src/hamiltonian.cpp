#include "contact_hj/hamiltonian.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace contact_hj {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

double Tabulate(const TabulatedKinetic& t, double r) {
  const auto& rs = t.radii;
  const auto& hs = t.values;
  if (r <= rs.front()) {
    const double slope = (hs[1] - hs[0]) / (rs[1] - rs[0]);
    return hs[0] + slope * (r - rs[0]);
  }
  auto it = std::upper_bound(rs.begin(), rs.end(), r);
  std::size_t hi = static_cast<std::size_t>(it - rs.begin());
  if (hi >= rs.size()) hi = rs.size() - 1;
  const std::size_t lo = hi - 1;
  const double slope = (hs[hi] - hs[lo]) / (rs[hi] - rs[lo]);
  return hs[lo] + slope * (r - rs[lo]);
}

void ValidateKinetic(const Kinetic& k) {
  std::visit(Overloaded{
                 [](const QuadraticKinetic&) {},
                 [](const PowerKinetic& pk) {
                   if (!(pk.tau > 1.0)) throw ModelError("power kinetic needs tau > 1");
                 },
                 [](const TabulatedKinetic& t) {
                   if (t.radii.size() < 2 || t.radii.size() != t.values.size()) {
                     throw ModelError("tabulated kinetic needs >= 2 (radius, value) pairs");
                   }
                   if (!std::is_sorted(t.radii.begin(), t.radii.end()) ||
                       std::adjacent_find(t.radii.begin(), t.radii.end()) != t.radii.end()) {
                     throw ModelError("tabulated kinetic radii must be strictly increasing");
                   }
                 },
             },
             k);
}

double ArctanLevel(const ArctanCoupling& c, double u) { return std::atan(u) + c.shift; }

}  // namespace

// ---------------------------------------------------------------------------

HamiltonianModel::HamiltonianModel(int dim, Kinetic kinetic, Expr potential, Coupling coupling,
                                   DerivativeBounds bounds)
    : dim_(dim),
      kinetic_(std::move(kinetic)),
      potential_(std::move(potential)),
      coupling_(std::move(coupling)),
      bounds_(bounds) {
  if (dim_ != 1 && dim_ != 2) throw ModelError("model dimension must be 1 or 2");
  ValidateKinetic(kinetic_);
  if (dim_ == 1 && potential_.DependsOn(1)) {
    throw ModelError("1D potential must not reference y");
  }
  if (const auto* lin = std::get_if<LinearCoupling>(&coupling_)) {
    if (dim_ == 1 && lin->phi.DependsOn(1)) throw ModelError("1D coupling must not reference y");
  }
}

double HamiltonianModel::KineticValue(const Point& p) const {
  return std::visit(Overloaded{
                        [&](const QuadraticKinetic&) { return 0.5 * Dot(p, p); },
                        [&](const PowerKinetic& k) { return std::pow(Norm(p), k.tau) / k.tau; },
                        [&](const TabulatedKinetic& t) { return Tabulate(t, Norm(p)); },
                    },
                    kinetic_);
}

double HamiltonianModel::KineticMin() const {
  return std::visit(Overloaded{
                        [](const QuadraticKinetic&) { return 0.0; },
                        [](const PowerKinetic&) { return 0.0; },
                        [](const TabulatedKinetic& t) {
                          return *std::min_element(t.values.begin(), t.values.end());
                        },
                    },
                    kinetic_);
}

std::optional<double> HamiltonianModel::HomogeneityDegree() const {
  if (std::holds_alternative<QuadraticKinetic>(kinetic_)) return 2.0;
  if (const auto* pk = std::get_if<PowerKinetic>(&kinetic_)) return pk->tau;
  return std::nullopt;
}

double HamiltonianModel::Eval(const Point& x, const Point& p, double u) const {
  const double base = KineticValue(p) - potential_(x);
  return std::visit(Overloaded{
                        [&](const NoCoupling&) { return base; },
                        [&](const LinearCoupling& c) { return base + c.phi(x) * u; },
                        [&](const ArctanCoupling& c) {
                          return base + (Dot(p, p) + 1.0) * ArctanLevel(c, u) + u;
                        },
                    },
                    coupling_);
}

double HamiltonianModel::PartialU(const Point& x, const Point& p, double u) const {
  return std::visit(Overloaded{
                        [](const NoCoupling&) { return 0.0; },
                        [&](const LinearCoupling& c) { return c.phi(x); },
                        [&](const ArctanCoupling&) {
                          return (Dot(p, p) + 1.0) / (1.0 + u * u) + 1.0;
                        },
                    },
                    coupling_);
}

double HamiltonianModel::KappaLow(double /*radius*/) const {
  return std::visit(Overloaded{
                        [](const NoCoupling&) { return 0.0; },
                        [&](const LinearCoupling&) { return bounds_.kappa_lo; },
                        [](const ArctanCoupling&) { return 1.0; },
                    },
                    coupling_);
}

double HamiltonianModel::KappaHigh(double radius) const {
  return std::visit(Overloaded{
                        [](const NoCoupling&) { return 0.0; },
                        [&](const LinearCoupling&) { return bounds_.kappa_hi; },
                        [&](const ArctanCoupling&) { return radius * radius + 2.0; },
                    },
                    coupling_);
}

bool HamiltonianModel::HasClosedFormLagrangian() const {
  const bool quadratic = std::holds_alternative<QuadraticKinetic>(kinetic_);
  const bool power = std::holds_alternative<PowerKinetic>(kinetic_);
  if (std::holds_alternative<ArctanCoupling>(coupling_)) return quadratic;
  return quadratic || power;
}

double EvalH(const HamiltonianModel& model, std::span<const double> x, std::span<const double> p,
             double u) {
  const auto n = static_cast<std::size_t>(model.dim());
  if (x.size() != n || p.size() != n) {
    throw ModelError("dimension mismatch: model has dim " + std::to_string(n) + ", got x of size " +
                     std::to_string(x.size()) + " and p of size " + std::to_string(p.size()));
  }
  Point xp{}, pp{};
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(p[i])) throw ModelError("non-finite input to H");
    xp[i] = x[i];
    pp[i] = p[i];
  }
  return model.Eval(xp, pp, u);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

nlohmann::json ModelToJson(const HamiltonianModel& model) {
  nlohmann::json j;
  j["dim"] = model.dim();
  std::visit(Overloaded{
                 [&](const QuadraticKinetic&) { j["kinetic"] = {{"type", "quadratic"}}; },
                 [&](const PowerKinetic& k) {
                   j["kinetic"] = {{"type", "power"}, {"tau", k.tau}};
                 },
                 [&](const TabulatedKinetic& t) {
                   j["kinetic"] = {{"type", "tabulated"}, {"radii", t.radii}, {"values", t.values}};
                 },
             },
             model.kinetic());
  j["potential"] = model.potential().Text();
  std::visit(Overloaded{
                 [&](const NoCoupling&) { j["coupling"] = {{"type", "none"}}; },
                 [&](const LinearCoupling& c) {
                   j["coupling"] = {{"type", "linear"}, {"phi", c.phi.Text()}};
                 },
                 [&](const ArctanCoupling& c) {
                   j["coupling"] = {{"type", "arctan"}, {"shift", c.shift}};
                 },
             },
             model.coupling());
  j["bounds"] = {{"kappa_lo", model.bounds().kappa_lo}, {"kappa_hi", model.bounds().kappa_hi}};
  return j;
}

HamiltonianModel ModelFromJson(const nlohmann::json& j) {
  try {
    const int dim = j.at("dim").get<int>();
    const auto& kj = j.at("kinetic");
    const std::string ktype = kj.at("type").get<std::string>();
    Kinetic kinetic;
    if (ktype == "quadratic") {
      kinetic = QuadraticKinetic{};
    } else if (ktype == "power") {
      kinetic = PowerKinetic{kj.at("tau").get<double>()};
    } else if (ktype == "tabulated") {
      kinetic = TabulatedKinetic{kj.at("radii").get<std::vector<double>>(),
                                 kj.at("values").get<std::vector<double>>()};
    } else {
      throw ModelError("model.kinetic.type: unknown kinetic '" + ktype + "'");
    }
    Expr potential = Expr::Parse(j.at("potential").get<std::string>());
    Coupling coupling = NoCoupling{};
    if (j.contains("coupling")) {
      const auto& cj = j.at("coupling");
      const std::string ctype = cj.at("type").get<std::string>();
      if (ctype == "none") {
        coupling = NoCoupling{};
      } else if (ctype == "linear") {
        coupling = LinearCoupling{Expr::Parse(cj.at("phi").get<std::string>())};
      } else if (ctype == "arctan") {
        const bool has_shift = cj.contains("shift") && !cj.at("shift").is_null();
        coupling = ArctanCoupling{has_shift ? cj.at("shift").get<double>() : std::numbers::pi};
      } else {
        throw ModelError("model.coupling.type: unknown coupling '" + ctype + "'");
      }
    }
    DerivativeBounds bounds;
    if (j.contains("bounds")) {
      bounds.kappa_lo = j.at("bounds").value("kappa_lo", 0.0);
      bounds.kappa_hi = j.at("bounds").value("kappa_hi", 0.0);
    }
    return HamiltonianModel(dim, std::move(kinetic), std::move(potential), std::move(coupling),
                            bounds);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("model descriptor: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Legendre transform
// ---------------------------------------------------------------------------

LagrangianEvaluator LagrangianEvaluator::ClosedForm() {
  LagrangianEvaluator ev;
  ev.mode = Mode::kClosedForm;
  return ev;
}

LagrangianEvaluator LagrangianEvaluator::GridSup(double p_extent, double p_spacing) {
  LagrangianEvaluator ev;
  ev.mode = Mode::kGridSup;
  ev.p_extent = p_extent;
  ev.p_spacing = p_spacing;
  return ev;
}

LagrangianEvaluator LagrangianEvaluator::Auto(const HamiltonianModel& model) {
  return model.HasClosedFormLagrangian() ? ClosedForm() : GridSup();
}

namespace {

double ClosedFormL(const HamiltonianModel& model, const Point& x, const Point& v, double u) {
  const double f = model.Potential(x);
  double conj = 0.0;
  if (const auto* pk = std::get_if<PowerKinetic>(&model.kinetic())) {
    const double dual = pk->tau / (pk->tau - 1.0);
    conj = std::pow(Norm(v), dual) / dual;
  } else {
    conj = 0.5 * Dot(v, v);
  }
  return std::visit(Overloaded{
                        [&](const NoCoupling&) { return conj + f; },
                        [&](const LinearCoupling& c) { return conj + f - c.phi(x) * u; },
                        [&](const ArctanCoupling& c) {
                          // H = |p|^2 (1/2 + A) + A - f + u with A = atan(u) + shift.
                          const double a = ArctanLevel(c, u);
                          const double curv = 1.0 + 2.0 * a;
                          if (!(curv > 0.0)) {
                            throw ModelError("arctan coupling is not coercive at u = " +
                                             std::to_string(u));
                          }
                          return Dot(v, v) / (2.0 * curv) - a + f - u;
                        },
                    },
                    model.coupling());
}

double ClosedFormDuL(const HamiltonianModel& model, const Point& x, const Point& v, double u) {
  return std::visit(Overloaded{
                        [](const NoCoupling&) { return 0.0; },
                        [&](const LinearCoupling& c) { return -c.phi(x); },
                        [&](const ArctanCoupling& c) {
                          const double a = ArctanLevel(c, u);
                          const double da = 1.0 / (1.0 + u * u);
                          const double curv = 1.0 + 2.0 * a;
                          return -Dot(v, v) * da / (curv * curv) - da - 1.0;
                        },
                    },
                    model.coupling());
}

struct GridSupResult {
  double value;
  Point argmax;
};

// Max of p.v - H over the lattice {-P + k dp}^n. Returns nullopt when the
// maximizer touches the lattice boundary.
std::optional<GridSupResult> GridSupAt(const HamiltonianModel& model, double extent, double dp,
                                       const Point& x, const Point& v, double u) {
  const long n = static_cast<long>(std::llround(2.0 * extent / dp));
  auto objective = [&](const Point& p) { return Dot(p, v) - model.Eval(x, p, u); };
  if (model.dim() == 1) {
    double best = -kInf;
    long best_k = 0;
    for (long k = 0; k <= n; ++k) {
      const Point p{-extent + static_cast<double>(k) * dp, 0.0};
      const double val = objective(p);
      if (val > best) {
        best = val;
        best_k = k;
      }
    }
    if (best_k == 0 || best_k == n) return std::nullopt;
    return GridSupResult{best, {-extent + static_cast<double>(best_k) * dp, 0.0}};
  }
  // Two-level search in 2D: coarse lattice, then the full-resolution lattice
  // on a window around the coarse argmax. p -> p.v - H is concave.
  const long stride = 8;
  const long nc = n / stride;
  double best = -kInf;
  long bi = 0, bj = 0;
  for (long i = 0; i <= nc; ++i) {
    for (long j = 0; j <= nc; ++j) {
      const Point p{-extent + static_cast<double>(i * stride) * dp,
                    -extent + static_cast<double>(j * stride) * dp};
      const double val = objective(p);
      if (val > best) {
        best = val;
        bi = i * stride;
        bj = j * stride;
      }
    }
  }
  const long i0 = std::max(0L, bi - stride), i1 = std::min(n, bi + stride);
  const long j0 = std::max(0L, bj - stride), j1 = std::min(n, bj + stride);
  best = -kInf;
  for (long i = i0; i <= i1; ++i) {
    for (long j = j0; j <= j1; ++j) {
      const Point p{-extent + static_cast<double>(i) * dp, -extent + static_cast<double>(j) * dp};
      const double val = objective(p);
      if (val > best) {
        best = val;
        bi = i;
        bj = j;
      }
    }
  }
  if (bi == 0 || bi == n || bj == 0 || bj == n) return std::nullopt;
  return GridSupResult{best,
                       {-extent + static_cast<double>(bi) * dp, -extent + static_cast<double>(bj) * dp}};
}

double GridSupL(const HamiltonianModel& model, const LagrangianEvaluator& ev, const Point& x,
                const Point& v, double u) {
  for (double extent = ev.p_extent; extent <= ev.max_extent * (1 + 1e-12); extent *= 2.0) {
    if (auto r = GridSupAt(model, extent, ev.p_spacing, x, v, u)) return r->value;
  }
  throw ExtentTooSmallError("Legendre maximizer on the p-grid boundary at extent " +
                            std::to_string(ev.max_extent) + " for v = " +
                            FormatPoint(v, model.dim()));
}

}  // namespace

double Legendre(const HamiltonianModel& model, const LagrangianEvaluator& ev, const Point& x,
                const Point& v, double u) {
  if (ev.mode == LagrangianEvaluator::Mode::kClosedForm) {
    if (!model.HasClosedFormLagrangian()) {
      throw ModelError("closed-form Lagrangian not available for this model");
    }
    return ClosedFormL(model, x, v, u);
  }
  return GridSupL(model, ev, x, v, u);
}

double PartialUL(const HamiltonianModel& model, const LagrangianEvaluator& ev, const Point& x,
                 const Point& v, double u) {
  if (std::holds_alternative<NoCoupling>(model.coupling())) return 0.0;
  if (std::holds_alternative<LinearCoupling>(model.coupling()) ||
      (ev.mode == LagrangianEvaluator::Mode::kClosedForm && model.HasClosedFormLagrangian())) {
    return ClosedFormDuL(model, x, v, u);
  }
  const double h = ev.du_step;
  return (Legendre(model, ev, x, v, u + h) - Legendre(model, ev, x, v, u)) / h;
}

double DiscountIndex(const HamiltonianModel& model, const LagrangianEvaluator& ev, const Point& x,
                     const Point& v, double level_a, double level_b) {
  if (level_a == level_b) return PartialUL(model, ev, x, v, level_b);
  if (std::holds_alternative<NoCoupling>(model.coupling())) return 0.0;
  if (const auto* lin = std::get_if<LinearCoupling>(&model.coupling())) return -lin->phi(x);
  return (Legendre(model, ev, x, v, level_a) - Legendre(model, ev, x, v, level_b)) /
         (level_a - level_b);
}

double MinOverP(const HamiltonianModel& model, const LagrangianEvaluator& ev, const Point& x,
                double u) {
  // min_p H = -sup_p (p.0 - H) = -L(x, 0, u) on the p-grid.
  auto g = GridSupAt(model, ev.p_extent, ev.p_spacing, x, Point{}, u);
  if (!g) throw ExtentTooSmallError("min over p reached the p-grid boundary");
  return -g->value;
}

// ---------------------------------------------------------------------------
// Assumption checks
// ---------------------------------------------------------------------------

std::string ToString(AssumptionStatus s) {
  switch (s) {
    case AssumptionStatus::kVerified: return "verified-on-samples";
    case AssumptionStatus::kViolated: return "violated";
    case AssumptionStatus::kNotApplicable: return "not-applicable";
  }
  return "?";
}

const AssumptionEntry& AssumptionReport::Get(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return e;
  }
  throw std::out_of_range("no assumption entry " + name);
}

nlohmann::json ToJson(const AssumptionReport& report, int dim) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : report.entries) {
    std::vector<double> x(e.witness.x.begin(), e.witness.x.begin() + dim);
    std::vector<double> p(e.witness.p.begin(), e.witness.p.begin() + dim);
    arr.push_back({{"name", e.name},
                   {"status", ToString(e.status)},
                   {"witness", {{"x", x}, {"p", p}, {"u", e.witness.u}, {"margin", e.witness.margin}}},
                   {"detail", e.detail}});
  }
  return {{"assumptions", arr}};
}

namespace {

std::vector<double> Linspace(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1);
  }
  return out;
}

std::vector<Point> Lattice(int dim, double half, int per_axis) {
  const auto axis = Linspace(-half, half, per_axis);
  std::vector<Point> out;
  if (dim == 1) {
    for (double a : axis) out.push_back({a, 0.0});
  } else {
    for (double a : axis)
      for (double b : axis) out.push_back({a, b});
  }
  return out;
}

std::vector<Point> Sphere(int dim, double r) {
  if (dim == 1) return {{-r, 0.0}, {r, 0.0}};
  std::vector<Point> out;
  for (int k = 0; k < 32; ++k) {
    const double t = 2.0 * std::numbers::pi * k / 32.0;
    out.push_back({r * std::cos(t), r * std::sin(t)});
  }
  return out;
}

// Tracks the worst (smallest margin) sample of a family of inequalities.
struct Worst {
  AssumptionWitness w{{}, {}, 0.0, kInf};
  void Offer(double margin, const Point& x, const Point& p, double u) {
    if (margin < w.margin) w = {x, p, u, margin};
  }
};

AssumptionEntry Entry(std::string name, bool ok, const AssumptionWitness& w, std::string detail) {
  return {std::move(name), ok ? AssumptionStatus::kVerified : AssumptionStatus::kViolated, w,
          std::move(detail)};
}

std::string Fmt(const char* label, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s=%.6g", label, v);
  return buf;
}

}  // namespace

AssumptionReport CheckAssumptions(const HamiltonianModel& model, const AssumptionSampling& s,
                                  const LagrangianEvaluator& ev) {
  const int dim = model.dim();
  const double tol = s.tol;
  const auto xs = Lattice(dim, s.box_half_width, s.x_samples);
  const auto ps = Lattice(dim, s.p_radius, s.p_samples);
  const auto us = Linspace(-s.u_radius, s.u_radius, s.u_samples);
  std::mt19937_64 rng(20240917);
  std::uniform_int_distribution<std::size_t> pick(0, ps.size() - 1);

  AssumptionReport report;

  // H1: monotone in u, convex in p, locally coercive.
  {
    Worst mono, convex, coercive;
    for (const auto& x : xs) {
      for (const auto& p : ps) {
        for (std::size_t j = 0; j + 1 < us.size(); ++j) {
          mono.Offer(model.Eval(x, p, us[j + 1]) - model.Eval(x, p, us[j]), x, p, us[j]);
        }
      }
      for (double u : us) {
        for (int k = 0; k < 64; ++k) {
          const Point& p1 = ps[pick(rng)];
          const Point& p2 = ps[pick(rng)];
          const Point mid = 0.5 * (p1 + p2);
          const double gap =
              0.5 * (model.Eval(x, p1, u) + model.Eval(x, p2, u)) - model.Eval(x, mid, u);
          convex.Offer(gap, x, mid, u);
        }
        double inner_max = -kInf;
        for (const auto& p : ps) {
          if (Norm(p) <= s.p_radius + 1e-12) inner_max = std::max(inner_max, model.Eval(x, p, u));
        }
        for (const auto& p : Sphere(dim, 4.0 * s.p_radius)) {
          coercive.Offer(model.Eval(x, p, u) - inner_max, x, p, u);
        }
      }
    }
    const double margin = std::min({mono.w.margin, convex.w.margin, coercive.w.margin});
    const AssumptionWitness& w = margin == mono.w.margin     ? mono.w
                                 : margin == convex.w.margin ? convex.w
                                                             : coercive.w;
    report.entries.push_back(Entry("H1", margin >= -tol, w,
                                   Fmt("monotone_margin", mono.w.margin) + " " +
                                       Fmt("convexity_margin", convex.w.margin) + " " +
                                       Fmt("coercivity_margin", coercive.w.margin)));
  }

  // H2: boundary values on the eps-ball stay below m0 = max_x min_p H(x,p,0).
  {
    double m0 = -kInf;
    for (const auto& x : xs) m0 = std::max(m0, MinOverP(model, ev, x, 0.0));
    Worst w;
    const auto eps_ball = Lattice(dim, s.epsilon, 5);
    for (const auto& x : xs) {
      const bool on_face = std::abs(std::abs(x[0]) - s.box_half_width) < 1e-12 ||
                           (dim == 2 && std::abs(std::abs(x[1]) - s.box_half_width) < 1e-12);
      if (!on_face) continue;
      for (const auto& p : eps_ball) {
        if (Norm(p) > s.epsilon + 1e-12) continue;
        w.Offer(m0 - model.Eval(x, p, 0.0), x, p, 0.0);
      }
    }
    report.entries.push_back(Entry("H2", w.w.margin > tol, w.w, Fmt("m0", m0)));
  }

  // H3: 0 < kappa_lo <= du H <= kappa_hi on |p| <= R, plus an empirical
  // modulus for the difference quotient.
  bool h3_ok = false;
  {
    Worst lo;
    double hi = -kInf;
    double modulus = 0.0;
    for (const auto& x : xs) {
      for (const auto& p : ps) {
        if (Norm(p) > s.p_radius + 1e-12) continue;
        const double d0 = model.PartialU(x, p, 0.0);
        for (double u : us) {
          const double d = model.PartialU(x, p, u);
          lo.Offer(d, x, p, u);
          hi = std::max(hi, d);
          if (u != 0.0) {
            const double q = (model.Eval(x, p, u) - model.Eval(x, p, 0.0)) / u;
            modulus = std::max(modulus, std::abs(q - d0));
          }
        }
      }
    }
    h3_ok = lo.w.margin > tol && std::isfinite(hi);
    report.entries.push_back(Entry("H3", h3_ok, lo.w,
                                   Fmt("kappa_lo_R", lo.w.margin) + " " + Fmt("kappa_hi_R", hi) +
                                       " " + Fmt("omega_R_estimate", modulus)));
  }

  // H4: du H bounded uniformly in p. Compare the sup over |p| <= R with the
  // sup over a sphere of radius 4R; growth witnesses unboundedness.
  bool h4_ok = false;
  AssumptionEntry h4;
  {
    double inner = -kInf;
    for (const auto& x : xs)
      for (const auto& p : ps)
        for (double u : us)
          if (Norm(p) <= s.p_radius + 1e-12) inner = std::max(inner, model.PartialU(x, p, u));
    Worst w;
    for (const auto& x : xs)
      for (const auto& p : Sphere(dim, 4.0 * s.p_radius))
        for (double u : us) {
          const double d = model.PartialU(x, p, u);
          w.Offer(inner - d, x, p, u);
        }
    const double growth_tol = 1e-9 * (1.0 + std::abs(inner));
    bool ok = w.w.margin >= -growth_tol;
    std::string detail = Fmt("sup_inner", inner) + " " + Fmt("growth", -w.w.margin);
    if (std::holds_alternative<LinearCoupling>(model.coupling()) && model.bounds().kappa_hi > 0) {
      Worst declared;
      for (const auto& x : xs) {
        declared.Offer(model.bounds().kappa_hi - model.PartialU(x, Point{}, 0.0), x, Point{}, 0.0);
      }
      if (declared.w.margin < -tol) {
        ok = false;
        w = declared;
      }
      detail += " " + Fmt("declared_kappa_hi", model.bounds().kappa_hi);
    }
    h4_ok = ok;
    h4 = Entry("H4", ok, w.w, detail);
    report.entries.push_back(h4);
  }

  // P1: H4 and H(x, theta p, u) <= H(x, p, u) + C_theta.
  {
    if (!h4_ok) {
      report.entries.push_back({"P1", AssumptionStatus::kViolated, h4.witness, "requires H4"});
    } else {
      double c_theta;
      std::string how;
      if (auto tau = model.HomogeneityDegree()) {
        c_theta = std::max(0.0, (1.0 - std::pow(s.theta, *tau)) * model.KineticMin());
        how = "(1-theta^tau) h0";
      } else {
        c_theta = -kInf;
        for (const auto& x : xs)
          for (const auto& p : ps)
            for (double u : us)
              c_theta = std::max(c_theta, model.Eval(x, s.theta * p, u) - model.Eval(x, p, u));
        how = "sampled sup";
      }
      Worst w;
      for (const auto& x : xs)
        for (const auto& p : ps)
          for (double u : us)
            w.Offer(model.Eval(x, p, u) + c_theta - model.Eval(x, s.theta * p, u), x, p, u);
      report.entries.push_back(
          Entry("P1", w.w.margin >= -tol, w.w, Fmt("C_theta", c_theta) + " via " + how));
    }
  }

  // P2: H4, joint convexity in (p, u), bounded implication constant.
  {
    if (!h4_ok) {
      report.entries.push_back({"P2", AssumptionStatus::kViolated, h4.witness, "requires H4"});
    } else {
      Worst w;
      std::uniform_int_distribution<std::size_t> pick_u(0, us.size() - 1);
      for (const auto& x : xs) {
        for (int k = 0; k < 256; ++k) {
          const Point& p1 = ps[pick(rng)];
          const Point& p2 = ps[pick(rng)];
          const double u1 = us[pick_u(rng)], u2 = us[pick_u(rng)];
          const Point pm = 0.5 * (p1 + p2);
          const double um = 0.5 * (u1 + u2);
          w.Offer(0.5 * (model.Eval(x, p1, u1) + model.Eval(x, p2, u2)) - model.Eval(x, pm, um), x,
                  pm, um);
        }
      }
      double c_theta = -kInf;
      for (const auto& x : xs)
        for (const auto& p : ps)
          for (double u : us)
            if (model.Eval(x, p, s.theta * u) <= 1.0) c_theta = std::max(c_theta, model.Eval(x, p, u));
      report.entries.push_back(Entry("P2", w.w.margin >= -tol, w.w,
                                     Fmt("joint_convexity_margin", w.w.margin) + " " +
                                         Fmt("C_theta_sampled", c_theta)));
    }
  }

  // P3: H3 plus bounds that do not drift between the half box and the full
  // box, and coercivity uniform in x.
  {
    const auto inner_xs = Lattice(dim, 0.5 * s.box_half_width, s.x_samples);
    auto sup_h = [&](const std::vector<Point>& xset) {
      double m = -kInf;
      for (const auto& x : xset)
        for (const auto& p : ps)
          for (double u : us)
            if (Norm(p) <= s.p_radius + 1e-12) m = std::max(m, model.Eval(x, p, u));
      return m;
    };
    auto inf_h = [&](const std::vector<Point>& xset) {
      double m = kInf;
      for (const auto& x : xset)
        for (const auto& p : ps) m = std::min(m, model.Eval(x, p, 0.0));
      return m;
    };
    const double sup_full = sup_h(xs), sup_inner = sup_h(inner_xs);
    const double inf_full = inf_h(xs), inf_inner = inf_h(inner_xs);
    const double upper_drift = sup_full - sup_inner;
    const double lower_drift = inf_inner - inf_full;
    const bool upper_ok = upper_drift <= 1e-3 * (1.0 + std::abs(sup_inner));
    const bool lower_ok = lower_drift <= 1e-3 * (1.0 + std::abs(inf_inner));
    Worst coercive;
    for (const auto& x : xs)
      for (const auto& p : Sphere(dim, 4.0 * s.p_radius))
        for (double u : us) coercive.Offer(model.Eval(x, p, u) - sup_full, x, p, u);
    const bool ok = h3_ok && upper_ok && lower_ok && coercive.w.margin > 0.0;
    AssumptionWitness w = coercive.w;
    w.margin = std::min({coercive.w.margin, 1e-3 * (1.0 + std::abs(sup_inner)) - upper_drift,
                         1e-3 * (1.0 + std::abs(inf_inner)) - lower_drift});
    report.entries.push_back(Entry("P3", ok, w,
                                   Fmt("upper_drift", upper_drift) + " " +
                                       Fmt("lower_drift", lower_drift) + " " +
                                       Fmt("uniform_coercivity_margin", coercive.w.margin) +
                                       (h3_ok ? "" : " H3 fails")));
  }

  return report;
}

}  // namespace contact_hj
