// Acceptance harness. `acceptance N` runs criterion N (1..9), `acceptance`
// runs all of them. Prints one PASS/FAIL line per criterion followed by
// indented sub-check lines; the exit status is nonzero on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "contact_hj/experiments.hpp"
#include "contact_hj/io.hpp"

namespace chj = contact_hj;
namespace fs = std::filesystem;

namespace {

// ---- pinned tolerances -----------------------------------------------------

// 1. critical value
constexpr double kCriticalTol = 0.02;
constexpr double kCriticalRadiusSlack = 0.01;
constexpr double kCriticalRuntime = 60.0;
// 2. Mane potential
constexpr double kManeOracleTol = 5e-2;
constexpr double kManeWindow = 3.0;
constexpr int kTriangleTriples = 100;
// 3. Aubry detection
constexpr double kAubryOnTol = 5e-3;
constexpr double kAubryOffFactor = 0.1;  // times dt
// 4. vanishing discount
constexpr double kCauchyFinal = 2e-2;
constexpr double kLambdaUFinal = 1e-2;
constexpr double kLimitResidualFactor = 5.0;
constexpr double kLimitVsMane = 5e-2;
constexpr double kSelectionFloor = -1e-2;
// 5. localization
constexpr double kLocalizationLambda = 0.05;
constexpr double kGapTol = 1e-3;
constexpr double kGapSignFactor = 2.0;
constexpr double kLocalizationRuntime = 300.0;
// 6. measures
constexpr double kClosednessLo = 0.7;
constexpr double kClosednessHi = 1.3;
constexpr double kMatherFinal = 5e-2;
constexpr double kWeightTol = 1e-12;
constexpr double kIndexSignTol = 0.0;
constexpr double kBoldOrderTol = 1e-12;
// 7. scheme properties
constexpr int kMonotonePairs = 50;
constexpr double kMonotoneTol = 1e-12;
constexpr double kWindowFactor = 10.0;
constexpr int kGridCurves = 100;
// 8. nonlinear preset
constexpr double kArctanCauchyFinal = 5e-2;

constexpr std::uint64_t kSeed = 20240611;

struct Line {
  bool passed;
  std::string text;
};

struct Result {
  std::vector<Line> lines;

  void Add(bool passed, std::string text) { lines.push_back({passed, std::move(text)}); }
  bool Passed() const {
    return std::all_of(lines.begin(), lines.end(), [](const Line& l) { return l.passed; });
  }
};

std::string F(double v) { return chj::FormatDouble(v); }

chj::ExperimentConfig Config(const std::string& preset, std::vector<std::string> overrides = {}) {
  return chj::ParseConfig(chj::ResolveConfig({{"preset", preset}}, overrides));
}

void AddVerdict(Result& r, const chj::ConvergenceReport& rep, const std::string& name) {
  const chj::Verdict* v = rep.FindVerdict(name);
  if (!v) {
    r.Add(false, name + ": verdict missing");
    return;
  }
  r.Add(v->passed, name + ": " + v->detail);
}

// ---- 1 ---------------------------------------------------------------------

Result CriticalValue() {
  Result r;
  auto cfg = Config("quadratic-linear",
                    {"checks.critical_expected=0", "checks.critical_tol=" + F(kCriticalTol),
                     "checks.critical_radius_slack=" + F(kCriticalRadiusSlack),
                     "checks.critical_runtime=" + F(kCriticalRuntime), "critical.compare_radii=[3,6]",
                     "grid.nodes=401"});
  const auto rep = chj::CriticalStudy(cfg);
  for (const char* v : {"critical_value", "radius_monotone", "runtime"}) AddVerdict(r, rep, v);
  return r;
}

// ---- 2 ---------------------------------------------------------------------

double QuadratureOracle(double x) {
  using boost::math::quadrature::gauss_kronrod;
  auto integrand = [](double s) { return std::sqrt(2.0 * (1.0 - std::exp(-s * s))); };
  return std::abs(gauss_kronrod<double, 61>::integrate(integrand, 0.0, x, 15, 1e-12));
}

Result ManePotential() {
  Result r;
  auto cfg = Config("quadratic-linear");
  const auto disc = cfg.MakeDiscretization();
  const double R = cfg.truncation_radius;
  const auto S = chj::ManePotential(cfg.model, disc, {0.0}, 0.0, R);
  const auto& g = S.field.grid();
  const std::size_t pin = g.NearestNode({0.0});
  r.Add(S.field[pin] == 0.0, "S(0,0) = " + F(S.field[pin]));

  double worst = 0.0, at = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double x = g.Node(k)[0];
    if (!g.InMask(k) || std::abs(x) > kManeWindow + 1e-12) continue;
    const double e = std::abs(S.field[k] - QuadratureOracle(x));
    if (e > worst) worst = e, at = x;
  }
  r.Add(worst <= kManeOracleTol, "sup |S(.,0) - oracle| on [-3,3] = " + F(worst) + " at x=" + F(at) +
                                      " (tol " + F(kManeOracleTol) + ")");

  // Triangle inequality S(x,z) <= S(x,y) + S(y,z) with y, z from a pin pool.
  const std::vector<double> pool = {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0};
  std::vector<chj::SolveOutcome> pinned;
  double grid_error = 0.0;
  for (double y : pool) {
    pinned.push_back(chj::ManePotential(cfg.model, disc, {y}, 0.0, R));
    grid_error = std::max(grid_error, chj::InterpolationErrorBound(pinned.back().field) + cfg.solver.tol);
  }
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> ux(-kManeWindow, kManeWindow);
  std::uniform_int_distribution<std::size_t> upick(0, pool.size() - 1);
  int violations = 0;
  double worst_excess = -1e300;
  for (int i = 0; i < kTriangleTriples; ++i) {
    const std::size_t node = g.NearestNode({ux(rng)});
    const std::size_t iy = upick(rng);
    std::size_t iz = upick(rng);
    while (iz == iy) iz = upick(rng);
    const double sxz = pinned[iz].field[node];
    const double sxy = pinned[iy].field[node];
    const double syz = chj::Interpolate(pinned[iz].field, {pool[iy]});
    const double excess = sxz - sxy - syz;
    worst_excess = std::max(worst_excess, excess);
    if (excess > 2.0 * grid_error) ++violations;
  }
  r.Add(violations == 0, "triangle inequality: " + std::to_string(violations) + " of " +
                             std::to_string(kTriangleTriples) + " triples exceed 2*grid error " +
                             F(2.0 * grid_error) + " (worst excess " + F(worst_excess) + ")");
  return r;
}

// ---- 3 ---------------------------------------------------------------------

Result AubryDetection() {
  Result r;
  auto cfg = Config("quadratic-linear");
  const std::vector<chj::Point> samples = {{0.0}, {1.0}, {-1.0}, {2.0}, {-2.0}, {3.0}, {-3.0}};
  const auto entries =
      chj::AubryIndicator(cfg.model, cfg.MakeDiscretization(), 0.0, cfg.truncation_radius, samples);
  const double off = kAubryOffFactor * cfg.solver.dt;
  for (const auto& e : entries) {
    const bool on = std::abs(e.y[0]) < 1e-12;
    const bool ok = on ? e.delta <= kAubryOnTol : e.delta >= off;
    r.Add(ok, "delta(" + F(e.y[0]) + ") = " + F(e.delta) +
                  (on ? " <= " + F(kAubryOnTol) : " >= " + F(off)));
  }
  return r;
}

// ---- 4 ---------------------------------------------------------------------

Result VanishingDiscount() {
  Result r;
  auto cfg = Config("quadratic-linear",
                    {"lambdas=[0.2,0.1,0.05,0.025]", "checks.cauchy_final=" + F(kCauchyFinal),
                     "checks.lambda_u_final=" + F(kLambdaUFinal),
                     "checks.limit_residual_factor=" + F(kLimitResidualFactor),
                     "checks.limit_vs_mane=" + F(kLimitVsMane),
                     "checks.selection_floor=" + F(kSelectionFloor)});
  const auto rep = chj::VanishingDiscountSweep(cfg);
  for (const char* v : {"solves_converged", "cauchy_monotone", "cauchy_final", "lambda_u_decreasing",
                        "lambda_u_final", "limit_residual", "limit_vs_mane", "selection_floor"}) {
    AddVerdict(r, rep, v);
  }
  return r;
}

// ---- 5 ---------------------------------------------------------------------

Result Localization() {
  Result r;
  auto cfg = Config("quadratic-linear",
                    {"checks.localization_lambda=" + F(kLocalizationLambda),
                     "checks.localization_radii=[4,5,6]", "checks.gap_tol=" + F(kGapTol),
                     "checks.gap_sign_factor=" + F(kGapSignFactor),
                     "checks.localization_runtime=" + F(kLocalizationRuntime)});
  const auto rep = chj::LocalizationStudy(cfg, {0.0});
  for (const char* v : {"gap_sign", "localization", "runtime"}) AddVerdict(r, rep, v);
  return r;
}

// ---- 6 ---------------------------------------------------------------------

Result Measures() {
  Result r;
  auto cfg = Config("quadratic-linear",
                    {"checks.closedness_exponent_lo=" + F(kClosednessLo),
                     "checks.closedness_exponent_hi=" + F(kClosednessHi),
                     "checks.mather_final=" + F(kMatherFinal), "checks.weight_tol=" + F(kWeightTol),
                     "checks.index_sign_tol=" + F(kIndexSignTol),
                     "checks.bold_order_tol=" + F(kBoldOrderTol)});
  const auto rep = chj::MeasureStudy(cfg);
  for (const char* v : {"closedness_exponent", "mather_final", "weights_normalized", "index_sign",
                        "bold_order"}) {
    AddVerdict(r, rep, v);
  }
  return r;
}

// ---- 7 ---------------------------------------------------------------------

void Monotonicity(Result& r, const std::string& preset, double c) {
  auto cfg = Config(preset);
  const auto disc = cfg.MakeDiscretization();
  const auto grid = disc.BallGrid(cfg.truncation_radius);
  const double lambda = cfg.run.lambda;
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> base(-2.0, 2.0), bump(0.0, 1.0);
  int violations = 0;
  double worst = 0.0;
  for (int i = 0; i < kMonotonePairs; ++i) {
    chj::GridField v(grid), w(grid);
    for (std::size_t k = 0; k < grid->size(); ++k) {
      v[k] = base(rng);
      w[k] = v[k] + bump(rng) * (i % 2);  // odd pairs strictly ordered, even pairs equal
      if (i % 5 == 0) w[k] = v[k] + 0.5;  // uniform shift
    }
    const auto tv = chj::LaxOleinikStep(v, cfg.model, cfg.evaluator, cfg.controls, lambda, c,
                                        cfg.solver.dt, true);
    const auto tw = chj::LaxOleinikStep(w, cfg.model, cfg.evaluator, cfg.controls, lambda, c,
                                        cfg.solver.dt, true);
    bool bad = false;
    for (std::size_t k = 0; k < grid->size(); ++k) {
      if (!grid->InMask(k)) continue;
      worst = std::max(worst, tv[k] - tw[k]);
      bad = bad || tv[k] > tw[k] + kMonotoneTol;
    }
    violations += bad;
  }
  r.Add(violations == 0, preset + " monotonicity: " + std::to_string(violations) + " of " +
                             std::to_string(kMonotonePairs) + " ordered pairs violated (max T(v)-T(w) " +
                             F(worst) + ")");
}

// Window length counts segments: every step may carry a DPP defect of up to
// the interpolation error, so the identity residual grows with the number of
// steps in the window. The ratio against a time-unit window is reported too.
void WindowIdentity(Result& r) {
  auto cfg = Config("quadratic-linear");
  const auto disc = cfg.MakeDiscretization();
  const double tol = cfg.solver.tol;
  double worst_ratio = 0.0, worst_time_ratio = 0.0, worst_defect_ratio = 0.0;
  int windows = 0, failures = 0;
  std::string where;
  for (double lambda : {0.2, 0.05}) {
    const auto u = chj::SolveStateConstraint(cfg.model, disc, cfg.truncation_radius, lambda, 0.0);
    const double per_step = kWindowFactor * (tol + chj::InterpolationErrorBound(u.field));
    for (double z : {1.0, -2.0, 0.5}) {
      const auto curve = chj::Backtrace(u.field, cfg.model, cfg.evaluator, cfg.controls, lambda, 0.0,
                                        {z}, cfg.horizon, cfg.solver.dt, tol);
      const double defect_bound = 10.0 * tol + chj::InterpolationErrorBound(u.field);
      worst_defect_ratio = std::max(worst_defect_ratio, curve.MaxDefect() / defect_bound);
      for (auto kind : {chj::IndexKind::kK, chj::IndexKind::kKBold}) {
        const double c0 = chj::IsBold(kind) ? u.field.MaxAbs() : 0.0;
        const auto idx = chj::ComputeIndices(curve, cfg.model, cfg.evaluator, u.field, lambda, kind, c0);
        for (double start : {0.0, 5.0, 20.0}) {
          for (double length : {1.0, 2.0, 5.0, 10.0}) {
            const auto b = static_cast<std::size_t>(std::lround(start / cfg.solver.dt));
            const auto steps = static_cast<std::size_t>(std::lround(length / cfg.solver.dt));
            const auto e = b + steps;
            if (e > curve.steps()) continue;
            const double res = chj::WindowIdentityResidual(curve, idx, cfg.model, cfg.evaluator, 0.0,
                                                           u.field, b, e);
            const double allowed = per_step * static_cast<double>(steps);
            worst_ratio = std::max(worst_ratio, res / allowed);
            worst_time_ratio = std::max(worst_time_ratio, res / (per_step * length));
            ++windows;
            if (res > allowed) {
              ++failures;
              where += " [lambda=" + F(lambda) + " z=" + F(z) + " " + chj::ToString(kind) + " t=" + F(start) +
                       "+" + F(length) + ": " + F(res) + " > " + F(allowed) + "]";
            }
          }
        }
      }
    }
  }
  r.Add(failures == 0 && windows > 0,
        "window identity: " + std::to_string(failures) + " of " + std::to_string(windows) +
            " windows over 10*(tol + interpolation error)*steps (worst ratio " + F(worst_ratio) +
            "; per unit time instead of per step: " + F(worst_time_ratio) + ")" + where);
  r.Add(worst_defect_ratio <= 1.0, "per-step DPP defect <= 10 tol + interpolation error (worst ratio " +
                                       F(worst_defect_ratio) + ")");
}

// Node-to-node curves with velocities in {0, +-2, +-4, +-6}: every foot point
// is a grid node, so the discrete subsolution inequality applies step by step.
void CurveInequality(Result& r) {
  auto cfg = Config("quadratic-linear");
  const auto disc = cfg.MakeDiscretization();
  const double lambda = cfg.run.lambda, dt = cfg.solver.dt, tol = cfg.solver.tol;
  const double R = cfg.truncation_radius;
  const auto u = chj::SolveStateConstraint(cfg.model, disc, R, lambda, 0.0);
  const auto& g = u.field.grid();
  const double dx = g.spacing()[0];
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> ustart(-R + 1.0, R - 1.0);
  std::uniform_int_distribution<int> usteps(10, 400), uvel(-3, 3);
  int violations = 0;
  double worst = -1e300;
  for (int i = 0; i < kGridCurves; ++i) {
    const int n = usteps(rng);
    std::size_t node = g.NearestNode({ustart(rng)});
    const double u_end = u.field[node];  // γ(b): the curve is walked backward from here
    double action = 0.0;
    int taken = 0;
    for (int k = 0; k < n; ++k) {
      const double a = 2.0 * uvel(rng);
      const int shift = static_cast<int>(std::lround(a * dt / dx));
      const auto m = g.Multi(node);
      const int next = m[0] - shift;
      if (next < 0 || next >= g.counts()[0]) continue;
      const std::size_t foot = static_cast<std::size_t>(next);
      if (!g.InMask(foot)) continue;
      const chj::Point x = g.Node(node);
      action += dt * (chj::Legendre(cfg.model, cfg.evaluator, x, {a}, lambda * u.field[foot]) + 0.0);
      node = foot;
      ++taken;
    }
    const double increment = u_end - u.field[node];
    const double excess = increment - action;
    worst = std::max(worst, excess);
    if (excess > taken * tol + 1e-12) ++violations;
  }
  r.Add(violations == 0, "curve inequality: " + std::to_string(violations) + " of " +
                             std::to_string(kGridCurves) + " grid curves violate u(b)-u(a) <= action "
                             "+ steps*tol (worst excess " + F(worst) + ")");
}

Result SchemeProperties() {
  Result r;
  Monotonicity(r, "quadratic-linear", 0.0);
  Monotonicity(r, "arctan", std::numbers::pi);
  WindowIdentity(r);
  CurveInequality(r);
  return r;
}

// ---- 8 ---------------------------------------------------------------------

Result NonlinearPreset() {
  Result r;
  auto cfg = Config("arctan", {"checks.cauchy_final=" + F(kArctanCauchyFinal)});
  const auto check = chj::AssumptionStudy(cfg);
  for (const auto& row : check.GetTable("assumptions").rows) {
    const std::string name = row[0].get<std::string>(), status = row[1].get<std::string>();
    if (name == "H3") r.Add(status == "verified-on-samples", "H3: " + status);
    if (name == "H4") r.Add(status == "violated", "H4: " + status);
  }
  try {
    const auto rep = chj::VanishingDiscountSweep(cfg);
    for (const char* v : {"solves_converged", "cauchy_monotone", "cauchy_final"}) AddVerdict(r, rep, v);
  } catch (const std::exception& e) {
    r.Add(false, std::string("sweep raised: ") + e.what());
  }
  return r;
}

// ---- 9 ---------------------------------------------------------------------

std::string Quote(const std::string& s) { return "'" + s + "'"; }

// Runs the CLI into a fresh root and returns the single run directory.
fs::path RunCli(const std::string& args, int workers, const fs::path& root) {
  fs::remove_all(root);
  const std::string cmd = Quote(CONTACT_HJ_CLI) + " " + args + " --workers " + std::to_string(workers) +
                          " --out " + Quote(root.string()) + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) >= 2) {
    throw std::runtime_error("command failed: " + cmd);
  }
  for (const auto& exp : fs::directory_iterator(root)) {
    for (const auto& run : fs::directory_iterator(exp.path())) return run.path();
  }
  throw std::runtime_error("no run directory under " + root.string());
}

Result Determinism() {
  Result r;
  const fs::path tmp = fs::temp_directory_path() / ("contact_hj_det_" + std::to_string(::getpid()));
  const std::vector<std::string> commands = {
      "trace --preset quadratic-linear",
      "sweep --preset quadratic-linear",
      "measure --preset quadratic-2d --set run.radius=3 --set run.lambda=0.2 --set horizon=5",
  };
  for (const auto& cmd : commands) {
    try {
      const auto a = RunCli(cmd, 1, tmp / "w1");
      const auto b = RunCli(cmd, 4, tmp / "w4");
      int files = 0, differ = 0;
      for (const auto& f : fs::directory_iterator(a)) {
        if (f.path().extension() != ".csv") continue;
        ++files;
        const auto other = b / f.path().filename();
        if (!fs::exists(other) || chj::ReadFile(f.path()) != chj::ReadFile(other)) ++differ;
      }
      r.Add(files > 0 && differ == 0, cmd + ": " + std::to_string(files) + " CSV files, " +
                                          std::to_string(differ) + " differ between 1 and 4 workers");
    } catch (const std::exception& e) {
      r.Add(false, cmd + ": " + e.what());
    }
  }
  fs::remove_all(tmp);
  return r;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Result()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "critical value", CriticalValue},
      {2, "Mane potential", ManePotential},
      {3, "Aubry detection", AubryDetection},
      {4, "vanishing discount", VanishingDiscount},
      {5, "localization", Localization},
      {6, "discounted measures", Measures},
      {7, "scheme properties", SchemeProperties},
      {8, "nonlinear preset", NonlinearPreset},
      {9, "determinism", Determinism},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  bool ok = true;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Result res;
    try {
      res = c.run();
    } catch (const std::exception& e) {
      res.Add(false, std::string("raised: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool passed = res.Passed() && !res.lines.empty();
    ok = ok && passed;
    std::cout << (passed ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.title << ") "
              << F(std::round(secs * 10) / 10) << " s\n";
    for (const auto& l : res.lines) std::cout << "    " << (l.passed ? "ok   " : "FAIL ") << l.text << "\n";
    std::cout.flush();
  }
  return ok ? 0 : 1;
}
