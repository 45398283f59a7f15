// Command-line front end for the contact Hamilton-Jacobi toolkit.
//
// Exit status: 0 when every verdict passes, 1 when a verdict fails, 2 on a
// configuration or runtime error.

#include <cstdlib>
#include <memory>
#include <iostream>
#include <string>
#include <vector>

#include <tbb/global_control.h>

#include "CLI11.hpp"
#include "contact_hj/experiments.hpp"
#include "contact_hj/io.hpp"

namespace chj = contact_hj;
using nlohmann::json;

namespace {

struct Options {
  std::string config_path;
  std::string preset;
  std::vector<std::string> overrides;
  std::string out;
  int workers = 0;
  int verbosity = 0;
  bool print_config = false;
};

void Log(const Options& o, const std::string& msg) {
  if (o.verbosity > 0) std::cerr << msg << "\n";
}

chj::ExperimentConfig Load(const Options& o) {
  json user = json::object();
  if (!o.config_path.empty()) user = chj::LoadConfigFile(o.config_path);
  if (!o.preset.empty()) user["preset"] = o.preset;
  std::vector<std::string> overrides = o.overrides;
  int workers = o.workers;
  if (workers == 0) {
    if (const char* env = std::getenv("CONTACT_HJ_WORKERS")) {
      try {
        workers = std::stoi(env);
      } catch (const std::exception&) {
        throw chj::ConfigError(std::string("CONTACT_HJ_WORKERS is not an integer: ") + env);
      }
    }
  }
  if (workers != 0) overrides.push_back("solver.workers=" + std::to_string(workers));
  auto cfg = chj::ParseConfig(chj::ResolveConfig(user, overrides));
  // The process owns the pool: allow exactly the requested parallelism even
  // when it exceeds the core count.
  static std::unique_ptr<tbb::global_control> pool;
  pool = std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism,
                                               static_cast<std::size_t>(cfg.solver.workers));
  return cfg;
}

std::filesystem::path RunDir(const Options& o, const chj::ExperimentConfig& cfg,
                             const std::string& experiment) {
  const std::filesystem::path root = o.out.empty() ? cfg.output_dir : o.out;
  auto dir = chj::MakeRunDirectory(root, experiment);
  chj::WriteFileAtomic(dir / "config.json", cfg.raw.dump(2) + "\n");
  return dir;
}

int Finish(const Options& o, const chj::ConvergenceReport& rep, const std::filesystem::path& dir) {
  chj::WriteReport(rep, dir);
  for (const auto& note : rep.notes) Log(o, "note: " + note);
  for (const auto& v : rep.verdicts) {
    std::cout << (v.passed ? "PASS " : "FAIL ") << v.name;
    if (o.verbosity > 0 || !v.passed) std::cout << "  " << v.detail;
    std::cout << "\n";
  }
  std::cout << "artifacts: " << dir.string() << "\n";
  return rep.AllPassed() ? 0 : 1;
}

void WriteSolve(const chj::SolveOutcome& s, const std::filesystem::path& dir,
                const std::string& stem) {
  chj::WriteFieldCsv(s.field, dir / (stem + ".csv"));
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < s.residuals.size(); ++i) {
    rows.push_back({static_cast<double>(i + 1), s.residuals[i]});
  }
  chj::WriteFileAtomic(dir / (stem + "_residuals.dat"), chj::DatTable({"sweep", "residual"}, rows));
  chj::WriteFileAtomic(dir / (stem + ".json"), s.ToJson().dump(2) + "\n");
}

int CmdCheck(const Options& o) {
  const auto cfg = Load(o);
  const auto dir = RunDir(o, cfg, "check");
  const auto rep = chj::AssumptionStudy(cfg);
  chj::WriteFileAtomic(dir / "assumptions.json", rep.config.at("assumption_report").dump(2) + "\n");
  for (const auto& row : rep.GetTable("assumptions").rows) {
    std::cout << row[0].get<std::string>() << ": " << row[1].get<std::string>() << "\n";
  }
  return Finish(o, rep, dir);
}

int CmdCritical(const Options& o) {
  const auto cfg = Load(o);
  const auto dir = RunDir(o, cfg, "critical");
  const auto rep = chj::CriticalStudy(cfg);
  const auto& est = rep.GetTable("estimates");
  for (const auto& row : est.rows) {
    std::cout << "R=" << chj::FormatDouble(row[0].get<double>())
              << " c_est=" << chj::FormatDouble(row[1].get<double>())
              << " m0=" << chj::FormatDouble(row[2].get<double>()) << "\n";
  }
  return Finish(o, rep, dir);
}

chj::ConvergenceReport SingleRun(const chj::ExperimentConfig& cfg, const std::string& name,
                                 double* c_out) {
  chj::ConvergenceReport rep;
  rep.experiment = name;
  rep.config = cfg.raw;
  *c_out = chj::ResolveCriticalValue(cfg, &rep);
  return rep;
}

void AddSolveVerdict(chj::ConvergenceReport& rep, const chj::SolveOutcome& s, const std::string& what) {
  rep.verdicts.push_back({what + "_converged", s.converged,
                          std::to_string(s.iterations) + " sweeps, residual " +
                              chj::FormatDouble(s.final_residual),
                          {}});
}

int CmdSolve(const Options& o) {
  const auto cfg = Load(o);
  const auto dir = RunDir(o, cfg, "solve");
  double c = 0.0;
  auto rep = SingleRun(cfg, "solve", &c);
  const auto s = chj::SolveStateConstraint(cfg.model, cfg.MakeDiscretization(), cfg.run.radius,
                                           cfg.run.lambda, c);
  WriteSolve(s, dir, "field");
  AddSolveVerdict(rep, s, "solve");
  std::cout << "lambda=" << chj::FormatDouble(cfg.run.lambda) << " R=" << chj::FormatDouble(cfg.run.radius)
            << " c=" << chj::FormatDouble(c) << " u(start)="
            << chj::FormatDouble(chj::Interpolate(s.field, cfg.run.start)) << "\n";
  return Finish(o, rep, dir);
}

int CmdErgodic(const Options& o) {
  const auto cfg = Load(o);
  const auto dir = RunDir(o, cfg, "ergodic");
  double c = 0.0;
  auto rep = SingleRun(cfg, "ergodic", &c);
  const auto disc = cfg.MakeDiscretization();
  const auto s = chj::SolveErgodic(cfg.model, disc, cfg.run.radius, c, cfg.run.pin);
  WriteSolve(s, dir, "field");
  AddSolveVerdict(rep, s, "ergodic");
  const double res = chj::ErgodicResidual(cfg.model, disc, s.field, c, cfg.run.pin);
  rep.notes.push_back("ergodic residual " + chj::FormatDouble(res));
  std::cout << "c=" << chj::FormatDouble(c) << " ergodic residual=" << chj::FormatDouble(res) << "\n";
  return Finish(o, rep, dir);
}

int CmdMane(const Options& o) {
  const auto cfg = Load(o);
  const auto dir = RunDir(o, cfg, "mane");
  double c = 0.0;
  auto rep = SingleRun(cfg, "mane", &c);
  const auto disc = cfg.MakeDiscretization();
  const auto s = chj::ManePotential(cfg.model, disc, cfg.run.pin, c, cfg.run.radius);
  WriteSolve(s, dir, "field");
  AddSolveVerdict(rep, s, "mane");
  std::vector<chj::Point> samples = cfg.probes;
  samples.insert(samples.begin(), cfg.run.pin);
  const auto aubry = chj::AubryIndicator(cfg.model, disc, c, cfg.run.radius, samples);
  std::vector<std::string> cols = {"x"};
  if (cfg.model.dim() == 2) cols.push_back("y");
  for (const char* n : {"delta", "iterations", "converged"}) cols.push_back(n);
  auto& t = rep.NewTable("aubry", cols);
  for (const auto& e : aubry) {
    std::vector<json> row = {e.y[0]};
    if (cfg.model.dim() == 2) row.push_back(e.y[1]);
    row.push_back(e.delta);
    row.push_back(e.iterations);
    row.push_back(e.converged);
    t.Add(std::move(row));
    std::cout << "aubry " << chj::FormatPoint(e.y, cfg.model.dim()) << " = " << chj::FormatDouble(e.delta)
              << "\n";
  }
  return Finish(o, rep, dir);
}

struct Traced {
  chj::SolveOutcome solve;
  chj::Curve curve;
  chj::IndexSeries indices;
  double c = 0.0;
};

Traced TraceRun(const chj::ExperimentConfig& cfg, chj::ConvergenceReport& rep) {
  Traced t;
  t.c = chj::ResolveCriticalValue(cfg, &rep);
  t.solve = chj::SolveStateConstraint(cfg.model, cfg.MakeDiscretization(), cfg.run.radius,
                                      cfg.run.lambda, t.c);
  t.curve = chj::Backtrace(t.solve.field, cfg.model, cfg.evaluator, cfg.controls, cfg.run.lambda, t.c,
                           cfg.run.start, cfg.horizon, cfg.solver.dt, cfg.solver.tol);
  const double c0 = chj::IsBold(cfg.run.kind) ? t.solve.field.MaxAbs() : 0.0;
  t.indices = chj::ComputeIndices(t.curve, cfg.model, cfg.evaluator, t.solve.field, cfg.run.lambda,
                                  cfg.run.kind, c0);
  AddSolveVerdict(rep, t.solve, "solve");
  if (!t.curve.warning.empty()) rep.notes.push_back(t.curve.warning);
  return t;
}

int CmdTrace(const Options& o) {
  const auto cfg = Load(o);
  const auto dir = RunDir(o, cfg, "trace");
  chj::ConvergenceReport rep;
  rep.experiment = "trace";
  rep.config = cfg.raw;
  const auto t = TraceRun(cfg, rep);
  chj::WriteCurveCsv(t.curve, t.indices, dir / "curve.csv");
  const double rep_value =
      chj::RepresentationValue(t.curve, t.indices, cfg.model, cfg.evaluator, t.c, t.solve.field);
  const double u_z = chj::Interpolate(t.solve.field, cfg.run.start);
  auto& s = rep.NewTable("representation", {"u_at_start", "representation", "residual", "tail_error",
                                            "max_defect", "defect_threshold"});
  s.Add({u_z, rep_value, std::abs(rep_value - u_z), chj::TailError(t.curve, t.indices, t.solve.field),
         t.curve.MaxDefect(), t.curve.defect_threshold});
  std::cout << "u(start)=" << chj::FormatDouble(u_z) << " representation=" << chj::FormatDouble(rep_value)
            << " steps=" << t.curve.steps() << "\n";
  return Finish(o, rep, dir);
}

int CmdMeasure(const Options& o) {
  const auto cfg = Load(o);
  const auto dir = RunDir(o, cfg, "measure");
  chj::ConvergenceReport rep;
  rep.experiment = "measure";
  rep.config = cfg.raw;
  const auto t = TraceRun(cfg, rep);
  const auto mu = chj::DiscountedMeasure(t.curve, t.indices);
  chj::WriteMeasureCsv(mu, dir / "measure.csv");
  chj::WriteCurveCsv(t.curve, t.indices, dir / "curve.csv");
  const auto battery = chj::DefaultBattery(cfg.model.dim());
  const double closed = chj::ClosednessDefect(mu, battery);
  const double mather = chj::MatherDefect(mu, cfg.model, cfg.evaluator, t.c);
  auto& s = rep.NewTable("measure", {"atoms", "total_weight", "support_radius", "closedness", "mather"});
  s.Add({mu.samples().size(), mu.TotalWeight(), mu.SupportRadius(), closed, mather});
  std::cout << "closedness=" << chj::FormatDouble(closed) << " mather=" << chj::FormatDouble(mather)
            << "\n";
  return Finish(o, rep, dir);
}

int CmdSweep(const Options& o) {
  const auto cfg = Load(o);
  const auto dir = RunDir(o, cfg, "sweep");
  return Finish(o, chj::VanishingDiscountSweep(cfg), dir);
}

int CmdLocalize(const Options& o) {
  const auto cfg = Load(o);
  const auto dir = RunDir(o, cfg, "localize");
  return Finish(o, chj::LocalizationStudy(cfg, cfg.run.start), dir);
}

int CmdMeasuresStudy(const Options& o) {
  const auto cfg = Load(o);
  const auto dir = RunDir(o, cfg, "measures-study");
  return Finish(o, chj::MeasureStudy(cfg), dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solvers and experiments for contact Hamilton-Jacobi equations"};
  app.require_subcommand(1);
  Options o;

  struct Entry {
    const char* name;
    const char* help;
    int (*fn)(const Options&);
  };
  const Entry entries[] = {
      {"check", "Check the structural assumptions on sample points", CmdCheck},
      {"critical", "Estimate the critical value", CmdCritical},
      {"solve", "State-constraint solve at run.lambda on the ball of radius run.radius", CmdSolve},
      {"ergodic", "Ergodic solve pinned at run.pin", CmdErgodic},
      {"mane", "Mane potential pinned at run.pin plus the Aubry indicator", CmdMane},
      {"trace", "Backtrace a minimizing curve from run.start", CmdTrace},
      {"measure", "Discounted measure of the curve from run.start", CmdMeasure},
      {"sweep", "Vanishing-discount sweep", CmdSweep},
      {"localize", "Localization table at run.start", CmdLocalize},
      {"measures-study", "Measure diagnostics over the lambda schedule", CmdMeasuresStudy},
  };
  int (*chosen)(const Options&) = nullptr;
  for (const auto& e : entries) {
    auto* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("--config,-c", o.config_path, "JSON config file");
    sub->add_option("--preset", o.preset, "Built-in preset to start from");
    sub->add_option("--set", o.overrides, "Dotted override key=value (repeatable)");
    sub->add_option("--out,-o", o.out, "Output root directory");
    sub->add_option("--workers,-j", o.workers, "Worker threads (default: CONTACT_HJ_WORKERS or config)")
        ->check(CLI::Range(1, 1024));
    sub->add_flag("-v,--verbose", o.verbosity, "More output");
    sub->add_flag("--print-config", o.print_config, "Print the resolved config and exit");
    sub->callback([&chosen, fn = e.fn] { chosen = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (o.print_config) {
      std::cout << Load(o).raw.dump(2) << "\n";
      return 0;
    }
    return chosen(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
