#include "contact_hj/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>

#include "contact_hj/io.hpp"

namespace contact_hj {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string CellText(const json& v) {
  if (v.is_null()) return "nan";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return FormatDouble(v.get<double>());
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
  return v.dump();
}

json Num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Max of |field| over in-mask nodes inside the sup-norm window.
double WindowMaxAbs(const GridField& f, double half_width) {
  const UniformGrid& g = f.grid();
  double m = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.InMask(k)) continue;
    const Point x = g.Node(k);
    bool inside = true;
    for (int a = 0; a < g.dim(); ++a) inside = inside && std::abs(x[a]) <= half_width + 1e-12;
    if (inside) m = std::max(m, std::abs(f[k]));
  }
  return m;
}

std::vector<std::size_t> Range(std::size_t n) {
  std::vector<std::size_t> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = i;
  return r;
}

Verdict MakeVerdict(std::string name, bool passed, std::string detail, std::vector<Citation> cites) {
  return Verdict{std::move(name), passed, std::move(detail), std::move(cites)};
}

std::string Fmt(double v) { return FormatDouble(v); }

void ProbeColumns(std::vector<std::string>& cols, int dim) {
  cols.push_back("probe_x");
  if (dim == 2) cols.push_back("probe_y");
}

void PushProbe(std::vector<json>& row, const Point& z, int dim) {
  row.push_back(z[0]);
  if (dim == 2) row.push_back(z[1]);
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t Table::Add(std::vector<json> row) {
  if (row.size() != columns.size()) {
    throw std::logic_error("table " + name + ": row width " + std::to_string(row.size()) +
                           " does not match " + std::to_string(columns.size()) + " columns");
  }
  rows.push_back(std::move(row));
  return rows.size() - 1;
}

std::string Table::Csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + CellText(row[i]);
    out += "\n";
  }
  return out;
}

std::string Table::Dat() const {
  std::vector<std::vector<double>> numeric;
  for (const auto& row : rows) {
    std::vector<double> r;
    for (const auto& v : row) {
      if (v.is_boolean()) {
        r.push_back(v.get<bool>() ? 1.0 : 0.0);
      } else if (v.is_number()) {
        r.push_back(v.get<double>());
      } else {
        r.push_back(kNaN);
      }
    }
    numeric.push_back(std::move(r));
  }
  return DatTable(columns, numeric);
}

Table& ConvergenceReport::NewTable(std::string name, std::vector<std::string> columns) {
  tables.push_back(Table{std::move(name), std::move(columns), {}});
  return tables.back();
}

const Table& ConvergenceReport::GetTable(const std::string& name) const {
  for (const auto& t : tables) {
    if (t.name == name) return t;
  }
  throw std::out_of_range("no table named " + name);
}

const Verdict* ConvergenceReport::FindVerdict(const std::string& name) const {
  for (const auto& v : verdicts) {
    if (v.name == name) return &v;
  }
  return nullptr;
}

bool ConvergenceReport::AllPassed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

json ConvergenceReport::ToJson() const {
  json vs = json::array();
  for (const auto& v : verdicts) {
    json cites = json::array();
    for (const auto& c : v.cites) cites.push_back({{"table", c.table}, {"rows", c.rows}});
    vs.push_back({{"name", v.name}, {"passed", v.passed}, {"detail", v.detail}, {"cites", cites}});
  }
  json ts = json::object();
  for (const auto& t : tables) {
    ts[t.name] = {{"columns", t.columns}, {"rows", t.rows}, {"file", t.name + ".csv"}};
  }
  return {{"experiment", experiment}, {"all_passed", AllPassed()},     {"verdicts", vs},
          {"tables", ts},             {"notes", notes},                {"runtime_seconds", runtime_seconds},
          {"config", config}};
}

void WriteReport(const ConvergenceReport& report, const std::filesystem::path& dir) {
  for (const auto& t : report.tables) {
    WriteFileAtomic(dir / (t.name + ".csv"), t.Csv());
    WriteFileAtomic(dir / (t.name + ".dat"), t.Dat());
  }
  WriteFileAtomic(dir / "report.json", report.ToJson().dump(2) + "\n");
}

std::filesystem::path MakeRunDirectory(const std::filesystem::path& root,
                                       const std::string& experiment) {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  const auto base = root / experiment;
  std::filesystem::create_directories(base);
  for (int n = 0;; ++n) {
    auto dir = base / (n == 0 ? std::string(stamp) : std::string(stamp) + "-" + std::to_string(n));
    if (std::filesystem::create_directory(dir)) return dir;
  }
}

// ---------------------------------------------------------------------------

SolveCache::SolveCache(const ExperimentConfig& config, Discretization disc)
    : config_(&config), disc_(std::move(disc)) {
  if (config.c) c_ = *config.c;
}

const SolveOutcome& SolveCache::StateConstraint(double lambda, double radius) {
  const auto key = std::make_pair(lambda, radius);
  auto it = solves_.find(key);
  if (it != solves_.end()) return it->second;
  // Warm start from the nearest larger ball already solved at this λ. Its
  // restriction is a subsolution of the more constrained operator, so the
  // monotone iteration climbs from below and keeps ϑ_R >= ϑ_R' for R < R'.
  std::optional<GridField> init;
  for (const auto& [k, v] : solves_) {
    if (k.first == lambda && k.second > radius) {
      init = v.field;
      break;
    }
  }
  auto out = SolveStateConstraint(config_->model, disc_, radius, lambda, c_, init);
  return solves_.emplace(key, std::move(out)).first->second;
}

double ResolveCriticalValue(const ExperimentConfig& config, ConvergenceReport* report) {
  if (config.c) return *config.c;
  auto est = EstimateCriticalValue(config.model, config.MakeDiscretization(), config.critical_radius,
                                   config.critical_lambdas);
  if (report) {
    Table& t = report->NewTable("critical_estimate", {"radius", "c_est", "m0"});
    t.Add({est.radius, est.c, est.m0});
    report->notes.push_back("critical value estimated at R=" + Fmt(est.radius) + ": " + Fmt(est.c));
  }
  return est.c;
}

// ---------------------------------------------------------------------------

ConvergenceReport CriticalStudy(const ExperimentConfig& config) {
  const auto t0 = Clock::now();
  ConvergenceReport rep;
  rep.experiment = "critical";
  rep.config = config.raw;
  const auto disc = config.MakeDiscretization();
  Table& rows = rep.NewTable("critical", {"radius", "lambda", "value_at_origin", "c_lambda",
                                          "iterations", "residual", "converged"});
  Table& ests = rep.NewTable("estimates", {"radius", "c_est", "m0", "consistent"});
  std::vector<double> radii = {config.critical_radius};
  for (double r : config.critical_compare_radii) {
    if (std::find(radii.begin(), radii.end(), r) == radii.end()) radii.push_back(r);
  }
  const double lb_tol = config.Check("critical_lower_bound_tol").value_or(0.02);
  std::map<double, std::size_t> est_row;
  std::map<double, double> est_c;
  for (double r : radii) {
    auto est = EstimateCriticalValue(config.model, disc, r, config.critical_lambdas, lb_tol);
    for (const auto& row : est.rows) {
      rows.Add({r, row.lambda, row.value_at_origin, row.c_lambda, row.iterations, row.residual,
                row.converged});
    }
    est_row[r] = ests.Add({r, est.c, est.m0, est.consistent});
    est_c[r] = est.c;
  }
  const std::size_t main_row = est_row[config.critical_radius];
  const double c_main = est_c[config.critical_radius];
  const double m0_main = ests.rows[main_row][2].get<double>();
  if (auto expected = config.Check("critical_expected")) {
    const double tol = config.Check("critical_tol").value_or(0.02);
    rep.verdicts.push_back(MakeVerdict(
        "critical_value", std::abs(c_main - *expected) <= tol,
        "c_est=" + Fmt(c_main) + " expected " + Fmt(*expected) + " +- " + Fmt(tol),
        {{"estimates", {main_row}}}));
  }
  rep.verdicts.push_back(MakeVerdict("lower_bound", c_main >= m0_main - lb_tol,
                                     "c_est=" + Fmt(c_main) + " m0=" + Fmt(m0_main),
                                     {{"estimates", {main_row}}}));
  if (auto slack = config.Check("critical_radius_slack")) {
    bool ok = true;
    std::string detail;
    std::vector<std::size_t> cited;
    const auto& cr = config.critical_compare_radii;
    for (std::size_t i = 1; i < cr.size(); ++i) {
      const double a = est_c[cr[i - 1]], b = est_c[cr[i]];
      ok = ok && a <= b + *slack;
      detail += "c(R=" + Fmt(cr[i - 1]) + ")=" + Fmt(a) + " <= c(R=" + Fmt(cr[i]) + ")=" + Fmt(b) +
                " + " + Fmt(*slack) + "; ";
      cited.push_back(est_row[cr[i - 1]]);
      cited.push_back(est_row[cr[i]]);
    }
    rep.verdicts.push_back(MakeVerdict("radius_monotone", ok, detail, {{"estimates", cited}}));
  }
  rep.runtime_seconds = Seconds(t0);
  if (auto limit = config.Check("critical_runtime")) {
    rep.verdicts.push_back(MakeVerdict("runtime", rep.runtime_seconds <= *limit,
                                       "runtime " + Fmt(rep.runtime_seconds) + " s, limit " + Fmt(*limit),
                                       {}));
  }
  return rep;
}

ConvergenceReport AssumptionStudy(const ExperimentConfig& config) {
  const auto t0 = Clock::now();
  ConvergenceReport rep;
  rep.experiment = "check";
  rep.config = config.raw;
  LagrangianEvaluator ev = config.evaluator;
  ev.mode = LagrangianEvaluator::Mode::kGridSup;
  const auto report = CheckAssumptions(config.model, config.sampling, ev);
  Table& t = rep.NewTable("assumptions", {"name", "status", "margin", "witness_x", "witness_y",
                                          "witness_p", "witness_py", "witness_u", "detail"});
  bool witnesses = true;
  std::vector<std::size_t> violated_rows;
  for (const auto& e : report.entries) {
    const auto row = t.Add({e.name, ToString(e.status), Num(e.witness.margin), e.witness.x[0],
                            e.witness.x[1], e.witness.p[0], e.witness.p[1], e.witness.u, e.detail});
    if (e.status == AssumptionStatus::kViolated) {
      violated_rows.push_back(row);
      witnesses = witnesses && std::isfinite(e.witness.margin);
    }
  }
  rep.verdicts.push_back(MakeVerdict("violations_have_witness", witnesses,
                                     std::to_string(violated_rows.size()) + " violated entries",
                                     {{"assumptions", violated_rows}}));
  for (const auto& [name, status] : config.expected_assumptions) {
    std::size_t row = 0;
    std::string got = "missing";
    for (std::size_t i = 0; i < report.entries.size(); ++i) {
      if (report.entries[i].name == name) {
        row = i;
        got = ToString(report.entries[i].status);
      }
    }
    rep.verdicts.push_back(MakeVerdict("expected_" + name, got == status,
                                       name + ": " + got + " (expected " + status + ")",
                                       {{"assumptions", {row}}}));
  }
  rep.config["assumption_report"] = ToJson(report, config.model.dim());
  rep.runtime_seconds = Seconds(t0);
  return rep;
}

// ---------------------------------------------------------------------------

ConvergenceReport VanishingDiscountSweep(const ExperimentConfig& config, SolveCache* cache_in) {
  const auto t0 = Clock::now();
  ConvergenceReport rep;
  rep.experiment = "sweep";
  rep.config = config.raw;
  const double c = ResolveCriticalValue(config, &rep);
  SolveCache local(config, config.MakeDiscretization());
  SolveCache& cache = cache_in ? *cache_in : local;
  cache.SetCriticalValue(c);
  const auto& disc = cache.disc();
  const int dim = config.model.dim();
  const double R = config.truncation_radius;
  const double tol = config.solver.tol;

  Table& sweep = rep.NewTable("sweep", {"lambda", "status", "iterations", "residual", "converged",
                                        "u_at_anchor", "window_max_lambda_u", "cauchy_diff"});
  std::vector<const SolveOutcome*> solved;
  std::vector<std::size_t> ok_rows;
  std::vector<double> cauchy, lam_u;
  std::vector<std::size_t> cauchy_rows;
  for (double lambda : config.lambdas) {
    try {
      const SolveOutcome& s = cache.StateConstraint(lambda, R);
      const double lu = lambda * WindowMaxAbs(s.field, config.window);
      double diff = kNaN;
      if (!solved.empty()) diff = s.field.WindowDistance(solved.back()->field, config.window);
      const auto row = sweep.Add({lambda, s.converged ? "ok" : "not-converged", s.iterations,
                                  s.final_residual, s.converged, Interpolate(s.field, config.anchor),
                                  lu, Num(diff)});
      solved.push_back(&s);
      ok_rows.push_back(row);
      lam_u.push_back(lu);
      if (std::isfinite(diff)) {
        cauchy.push_back(diff);
        cauchy_rows.push_back(row);
      }
    } catch (const std::exception& e) {
      sweep.Add({lambda, std::string("error: ") + e.what(), nullptr, nullptr, false, nullptr,
                 nullptr, nullptr});
    }
  }

  bool all_solved = solved.size() == config.lambdas.size();
  rep.verdicts.push_back(MakeVerdict("solves_converged",
                                     all_solved && std::all_of(solved.begin(), solved.end(),
                                                               [](auto* s) { return s->converged; }),
                                     std::to_string(solved.size()) + " of " +
                                         std::to_string(config.lambdas.size()) + " solves succeeded",
                                     {{"sweep", Range(sweep.rows.size())}}));
  {
    bool mono = cauchy.size() >= 1;
    std::string detail;
    for (std::size_t i = 0; i < cauchy.size(); ++i) {
      detail += Fmt(cauchy[i]) + " ";
      if (i > 0) mono = mono && cauchy[i] < cauchy[i - 1];
    }
    rep.verdicts.push_back(MakeVerdict("cauchy_monotone", mono, "window differences " + detail,
                                       {{"sweep", cauchy_rows}}));
    if (auto lim = config.Check("cauchy_final")) {
      const bool ok = !cauchy.empty() && cauchy.back() <= *lim;
      rep.verdicts.push_back(MakeVerdict(
          "cauchy_final", ok,
          "final window difference " + (cauchy.empty() ? std::string("n/a") : Fmt(cauchy.back())) +
              " vs " + Fmt(*lim),
          {{"sweep", cauchy_rows.empty() ? std::vector<std::size_t>{} : std::vector<std::size_t>{cauchy_rows.back()}}}));
    }
  }
  if (auto lim = config.Check("lambda_u_final")) {
    bool dec = lam_u.size() >= 2;
    for (std::size_t i = 1; i < lam_u.size(); ++i) dec = dec && lam_u[i] < lam_u[i - 1];
    rep.verdicts.push_back(MakeVerdict("lambda_u_decreasing", dec, "lambda max|u| on window strictly decreasing",
                                       {{"sweep", ok_rows}}));
    const bool ok = !lam_u.empty() && lam_u.back() <= *lim;
    rep.verdicts.push_back(MakeVerdict(
        "lambda_u_final", ok,
        "final lambda max|u| " + (lam_u.empty() ? std::string("n/a") : Fmt(lam_u.back())) + " vs " + Fmt(*lim),
        {{"sweep", ok_rows.empty() ? std::vector<std::size_t>{} : std::vector<std::size_t>{ok_rows.back()}}}));
  }

  // Limit proxy: λ = 0 fixed point started from the smallest-λ solution.
  Table& limit = rep.NewTable("limit", {"status", "iterations", "residual", "ergodic_residual",
                                        "u0_at_anchor", "sup_diff_to_mane"});
  std::optional<GridField> u0;
  if (!solved.empty()) {
    try {
      auto e = SolveErgodic(config.model, disc, R, c, config.anchor, solved.back()->field);
      const double res = ErgodicResidual(config.model, disc, e.field, c, config.anchor);
      double mane_diff = kNaN;
      if (config.Check("limit_vs_mane")) {
        auto S = ManePotential(config.model, disc, config.anchor, c, R);
        mane_diff = e.field.WindowDistance(S.field, config.window);
        rep.notes.push_back("Mane potential pinned at the anchor: " + std::to_string(S.iterations) +
                            " sweeps");
      }
      limit.Add({e.converged ? "ok" : "not-converged", e.iterations, e.final_residual, res,
                 e.field[e.field.grid().NearestNode(config.anchor)], Num(mane_diff)});
      u0 = std::move(e.field);
    } catch (const std::exception& ex) {
      limit.Add({std::string("error: ") + ex.what(), nullptr, nullptr, nullptr, nullptr, nullptr});
    }
  }
  if (auto factor = config.Check("limit_residual_factor")) {
    const bool ok = u0 && limit.rows[0][3].get<double>() <= *factor * tol;
    rep.verdicts.push_back(MakeVerdict(
        "limit_residual", ok,
        u0 ? "ergodic residual " + Fmt(limit.rows[0][3].get<double>()) + " vs " + Fmt(*factor * tol)
           : std::string("no limit proxy"),
        {{"limit", {0}}}));
  }
  if (auto lim = config.Check("limit_vs_mane")) {
    const bool ok = u0 && limit.rows[0][5].is_number() && limit.rows[0][5].get<double>() <= *lim;
    rep.verdicts.push_back(MakeVerdict(
        "limit_vs_mane", ok,
        u0 && limit.rows[0][5].is_number()
            ? "sup |u0 - S(., anchor)| on window " + Fmt(limit.rows[0][5].get<double>()) + " vs " + Fmt(*lim)
            : std::string("no limit proxy"),
        {{"limit", {0}}}));
  }

  // Selection functional of the limit proxy against every traced measure.
  std::vector<std::string> cols = {"lambda"};
  ProbeColumns(cols, dim);
  for (const char* s : {"status", "selection", "max_defect", "defect_warning"}) cols.push_back(s);
  Table& sel = rep.NewTable("selection", cols);
  double worst = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> sel_rows;
  if (u0) {
    for (std::size_t i = 0; i < solved.size(); ++i) {
      const double lambda = solved[i]->field.meta().lambda;
      for (const Point& z : config.probes) {
        std::vector<json> row = {lambda};
        PushProbe(row, z, dim);
        try {
          auto curve = Backtrace(solved[i]->field, config.model, config.evaluator, config.controls,
                                 lambda, c, z, config.horizon, config.solver.dt, tol);
          auto K = ComputeIndices(curve, config.model, config.evaluator, solved[i]->field, lambda,
                                  IndexKind::kK);
          auto mu = DiscountedMeasure(curve, K);
          const double v = SelectionFunctional(mu, *u0, config.model, config.evaluator);
          worst = std::min(worst, v);
          for (const json& x : {json("ok"), json(v), json(curve.MaxDefect()), json(!curve.warning.empty())}) {
            row.push_back(x);
          }
        } catch (const std::exception& e) {
          for (const json& x : {json(std::string("error: ") + e.what()), json(nullptr), json(nullptr), json(nullptr)}) {
            row.push_back(x);
          }
          worst = -std::numeric_limits<double>::infinity();
        }
        sel_rows.push_back(sel.Add(std::move(row)));
      }
    }
  }
  if (auto floor = config.Check("selection_floor")) {
    const bool ok = u0 && !sel_rows.empty() && worst >= *floor;
    rep.verdicts.push_back(MakeVerdict("selection_floor", ok,
                                       "min selection functional " + Fmt(worst) + " vs " + Fmt(*floor),
                                       {{"selection", sel_rows}}));
  }
  rep.runtime_seconds = Seconds(t0);
  return rep;
}

// ---------------------------------------------------------------------------

ConvergenceReport LocalizationStudy(const ExperimentConfig& config, const Point& z,
                                    SolveCache* cache_in) {
  const auto t0 = Clock::now();
  ConvergenceReport rep;
  rep.experiment = "localize";
  rep.config = config.raw;
  const double c = ResolveCriticalValue(config, &rep);
  SolveCache local(config, config.MakeDiscretization());
  SolveCache& cache = cache_in ? *cache_in : local;
  cache.SetCriticalValue(c);
  const double tol = config.solver.tol;
  if (!config.radii.empty() && !(config.truncation_radius > config.radii.back())) {
    throw ConfigError("truncation_radius must exceed every radius in the schedule");
  }
  const double gap_tol = config.Check("gap_tol").value_or(1e-3);
  const double sign_factor = config.Check("gap_sign_factor").value_or(2.0);

  Table& gaps = rep.NewTable("gaps", {"lambda", "radius", "status", "theta_at_z", "u_trunc_at_z",
                                      "gap", "iterations", "converged"});
  Table& plateau = rep.NewTable("plateau", {"lambda", "plateau_radius", "found"});
  bool sign_ok = true;
  std::vector<std::size_t> valid_rows;
  std::map<std::pair<double, double>, std::size_t> cell;
  for (double lambda : config.lambdas) {
    double u_at = kNaN;
    std::string trunc_status = "ok";
    try {
      const auto& u = cache.StateConstraint(lambda, config.truncation_radius);
      u_at = Interpolate(u.field, z);
      if (!u.converged) trunc_status = "truncated solve not converged";
    } catch (const std::exception& e) {
      trunc_status = std::string("error: ") + e.what();
    }
    std::vector<double> row_gaps;
    for (double r : config.radii) {
      try {
        if (trunc_status != "ok") throw std::runtime_error(trunc_status);
        const auto& th = cache.StateConstraint(lambda, r);
        const double t_at = Interpolate(th.field, z);
        const double gap = t_at - u_at;
        const auto row = gaps.Add({lambda, r, th.converged ? "ok" : "not-converged", t_at, u_at,
                                   gap, th.iterations, th.converged});
        valid_rows.push_back(row);
        cell[{lambda, r}] = row;
        sign_ok = sign_ok && gap >= -sign_factor * tol;
        row_gaps.push_back(gap);
      } catch (const std::exception& e) {
        gaps.Add({lambda, r, std::string("error: ") + e.what(), nullptr, Num(u_at), nullptr, nullptr,
                  false});
        row_gaps.push_back(kNaN);
      }
    }
    // Smallest radius from which the gap stays within gap_tol, over at least
    // two consecutive radii.
    double found_r = kNaN;
    for (std::size_t i = 0; i + 1 < row_gaps.size(); ++i) {
      bool stays = true;
      for (std::size_t j = i; j < row_gaps.size(); ++j) {
        stays = stays && std::isfinite(row_gaps[j]) && std::abs(row_gaps[j]) <= gap_tol;
      }
      if (stays) {
        found_r = config.radii[i];
        break;
      }
    }
    plateau.Add({lambda, Num(found_r), std::isfinite(found_r)});
  }
  rep.verdicts.push_back(MakeVerdict("gap_sign", sign_ok && !valid_rows.empty(),
                                     "theta(z) - u_trunc(z) >= -" + Fmt(sign_factor) + " tol on every valid cell",
                                     {{"gaps", valid_rows}}));
  if (auto lam = config.Check("localization_lambda")) {
    bool ok = true;
    std::vector<std::size_t> cited;
    std::string detail;
    const json& radii = config.checks.value("localization_radii", json::array());
    for (const auto& rj : radii) {
      const double r = rj.get<double>();
      auto it = cell.find({*lam, r});
      if (it == cell.end()) {
        ok = false;
        detail += "R=" + Fmt(r) + ": missing; ";
        continue;
      }
      const double gap = gaps.rows[it->second][5].get<double>();
      ok = ok && std::abs(gap) <= gap_tol;
      cited.push_back(it->second);
      detail += "R=" + Fmt(r) + ": " + Fmt(gap) + "; ";
    }
    rep.verdicts.push_back(MakeVerdict("localization", ok && !cited.empty(),
                                       "|gap| <= " + Fmt(gap_tol) + " at lambda=" + Fmt(*lam) + ": " + detail,
                                       {{"gaps", cited}}));
  }
  // Empirical λ_z: the largest λ whose plateau exists.
  double lambda_z = kNaN;
  for (const auto& row : plateau.rows) {
    if (row[2].get<bool>()) {
      lambda_z = row[0].get<double>();
      break;
    }
  }
  rep.notes.push_back("empirical lambda_z (largest lambda with a plateau): " + Fmt(lambda_z));
  rep.runtime_seconds = Seconds(t0);
  if (auto limit = config.Check("localization_runtime")) {
    rep.verdicts.push_back(MakeVerdict("runtime", rep.runtime_seconds <= *limit,
                                       "runtime " + Fmt(rep.runtime_seconds) + " s, limit " + Fmt(*limit),
                                       {}));
  }
  return rep;
}

// ---------------------------------------------------------------------------

double FitLogSlope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope fit needs >= 2 points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

ConvergenceReport MeasureStudy(const ExperimentConfig& config, SolveCache* cache_in) {
  const auto t0 = Clock::now();
  ConvergenceReport rep;
  rep.experiment = "measures-study";
  rep.config = config.raw;
  const double c = ResolveCriticalValue(config, &rep);
  SolveCache local(config, config.MakeDiscretization());
  SolveCache& cache = cache_in ? *cache_in : local;
  cache.SetCriticalValue(c);
  const int dim = config.model.dim();
  const auto battery = DefaultBattery(dim);
  const auto& ev = config.evaluator;
  const double shared_radius = config.radii.empty() ? config.truncation_radius : config.radii.back();

  std::vector<std::string> cols;
  ProbeColumns(cols, dim);
  for (const char* s : {"lambda", "status", "closedness", "mather", "mean_support_distance",
                        "support_radius", "weight_sum_error", "max_index", "min_K_bold_minus_k_bold",
                        "tail_weight", "max_defect"}) {
    cols.push_back(s);
  }
  Table& mt = rep.NewTable("measures", cols);
  std::vector<std::string> fcols;
  ProbeColumns(fcols, dim);
  fcols.push_back("closedness_exponent");
  Table& fits = rep.NewTable("fits", fcols);
  std::vector<std::string> wcols;
  ProbeColumns(wcols, dim);
  for (const char* s : {"lambda_from", "lambda_to", "discrepancy"}) wcols.push_back(s);
  Table& weak = rep.NewTable("weak_limit", wcols);

  const std::size_t base = static_cast<std::size_t>(dim);  // first metric column
  bool weights_ok = true, sign_ok = true, order_ok = true, mather_ok = true, conc_ok = true;
  bool exponent_ok = true, weak_ok = true;
  int fitted = 0;
  std::vector<std::size_t> all_rows, final_rows, fit_rows, weak_rows;
  std::string exp_detail, mather_detail, weak_detail;
  for (const Point& z : config.probes) {
    std::vector<LabeledMeasure> measures;
    std::vector<double> lams, closed, dist;
    std::size_t last_row = 0;
    for (double lambda : config.lambdas) {
      std::vector<json> row;
      PushProbe(row, z, dim);
      row.push_back(lambda);
      try {
        const auto& u = cache.StateConstraint(lambda, config.truncation_radius);
        auto curve = Backtrace(u.field, config.model, ev, config.controls, lambda, c, z,
                               config.horizon, config.solver.dt, config.solver.tol);
        auto K = ComputeIndices(curve, config.model, ev, u.field, lambda, IndexKind::kK);
        auto mu = DiscountedMeasure(curve, K);
        const double cd = ClosednessDefect(mu, battery);
        const double md = MatherDefect(mu, config.model, ev, c);
        const double sd = mu.Pair([&](const Point& x, const Point&) { return Norm(x - config.anchor); });
        const double werr = std::abs(mu.TotalWeight() - 1.0);
        const double kmax = *std::max_element(K.values.begin(), K.values.end());
        double order = kNaN;
        if (config.Check("bold_order_tol")) {
          const auto& th = cache.StateConstraint(lambda, shared_radius);
          const double c0 = std::max(u.field.MaxAbs(), th.field.MaxAbs());
          auto KB = ComputeIndices(curve, config.model, ev, u.field, lambda, IndexKind::kKBold, c0);
          auto kb = ComputeIndices(curve, config.model, ev, th.field, lambda, IndexKind::kKappaBold, c0);
          order = std::numeric_limits<double>::infinity();
          for (std::size_t k = 0; k < KB.values.size(); ++k) order = std::min(order, KB.values[k] - kb.values[k]);
        }
        for (const json& x : {json("ok"), json(cd), json(md), json(sd), json(mu.SupportRadius()),
                              json(werr), json(kmax), Num(order), json(K.Weight(curve.steps())),
                              json(curve.MaxDefect())}) {
          row.push_back(x);
        }
        last_row = mt.Add(std::move(row));
        all_rows.push_back(last_row);
        weights_ok = weights_ok && werr <= config.Check("weight_tol").value_or(1e-12);
        sign_ok = sign_ok && kmax <= config.Check("index_sign_tol").value_or(1e-12);
        if (auto t = config.Check("bold_order_tol")) order_ok = order_ok && order >= -*t;
        measures.push_back({lambda, mu});
        lams.push_back(lambda);
        closed.push_back(cd);
        dist.push_back(sd);
      } catch (const std::exception& e) {
        row.push_back(std::string("error: ") + e.what());
        while (row.size() < cols.size()) row.push_back(nullptr);
        all_rows.push_back(mt.Add(std::move(row)));
        weights_ok = sign_ok = order_ok = false;
      }
    }
    final_rows.push_back(last_row);
    if (!measures.empty() && measures.back().lambda == config.lambdas.back()) {
      const double md = mt.rows[last_row][base + 3].get<double>();
      if (auto lim = config.Check("mather_final")) mather_ok = mather_ok && std::abs(md) <= *lim;
      mather_detail += "z=" + FormatPoint(z, dim) + ": " + Fmt(md) + "; ";
    } else {
      mather_ok = false;
    }
    // Closedness decay exponent, on probes whose defects are all nonzero.
    std::vector<json> frow;
    PushProbe(frow, z, dim);
    const bool fittable = closed.size() >= 2 &&
                          std::all_of(closed.begin(), closed.end(), [](double v) { return v > 1e-12; });
    if (fittable) {
      const double slope = FitLogSlope(lams, closed);
      frow.push_back(slope);
      ++fitted;
      const double lo = config.Check("closedness_exponent_lo").value_or(-1e300);
      const double hi = config.Check("closedness_exponent_hi").value_or(1e300);
      exponent_ok = exponent_ok && slope >= lo && slope <= hi;
      exp_detail += "z=" + FormatPoint(z, dim) + ": " + Fmt(slope) + "; ";
    } else {
      frow.push_back(nullptr);
    }
    fit_rows.push_back(fits.Add(std::move(frow)));
    for (std::size_t i = 1; i < dist.size(); ++i) {
      if (dist[i - 1] > 1e-12) conc_ok = conc_ok && dist[i] < dist[i - 1];
      else conc_ok = conc_ok && dist[i] <= 1e-12;
    }
    if (measures.size() >= 2) {
      auto wl = WeakLimitDiagnostics(measures, battery, config.model, ev);
      for (std::size_t i = 0; i < wl.discrepancies.size(); ++i) {
        std::vector<json> wrow;
        PushProbe(wrow, z, dim);
        wrow.push_back(wl.lambdas[i]);
        wrow.push_back(wl.lambdas[i + 1]);
        wrow.push_back(wl.discrepancies[i]);
        weak_rows.push_back(weak.Add(std::move(wrow)));
      }
      if (auto lim = config.Check("weak_limit_final")) {
        const bool zero = std::all_of(wl.discrepancies.begin(), wl.discrepancies.end(),
                                      [](double d) { return d <= 1e-12; });
        weak_ok = weak_ok && (zero || wl.cauchy_decreasing) && wl.discrepancies.back() <= *lim;
      }
      weak_detail += "z=" + FormatPoint(z, dim) + ": final " + Fmt(wl.discrepancies.back()) + "; ";
    }
  }
  rep.verdicts.push_back(MakeVerdict("weights_normalized", weights_ok, "|sum w - 1| within weight_tol",
                                     {{"measures", all_rows}}));
  rep.verdicts.push_back(MakeVerdict("index_sign", sign_ok, "every segment index <= 0",
                                     {{"measures", all_rows}}));
  if (config.Check("bold_order_tol")) {
    rep.verdicts.push_back(MakeVerdict("bold_order", order_ok,
                                       "K_bold from u_trunc >= k_bold from theta on the shared curve",
                                       {{"measures", all_rows}}));
  }
  if (config.Check("closedness_exponent_lo") || config.Check("closedness_exponent_hi")) {
    rep.verdicts.push_back(MakeVerdict("closedness_exponent", exponent_ok && fitted > 0,
                                       "fitted exponents " + exp_detail, {{"fits", fit_rows}}));
  }
  if (config.Check("mather_final")) {
    rep.verdicts.push_back(MakeVerdict("mather_final", mather_ok,
                                       "mather defect at smallest lambda " + mather_detail,
                                       {{"measures", final_rows}}));
  }
  if (config.Check("support_concentration")) {
    rep.verdicts.push_back(MakeVerdict("support_concentration", conc_ok,
                                       "mean distance of the support to the anchor decreases with lambda",
                                       {{"measures", all_rows}}));
  }
  if (config.Check("weak_limit_final")) {
    rep.verdicts.push_back(MakeVerdict("weak_limit", weak_ok, weak_detail, {{"weak_limit", weak_rows}}));
  }
  rep.runtime_seconds = Seconds(t0);
  return rep;
}

std::vector<NamedConfig> BuiltinModels() {
  std::vector<NamedConfig> out;
  for (const auto& name : PresetNames()) out.push_back({name, PresetConfig(name)});
  return out;
}

}  // namespace contact_hj
