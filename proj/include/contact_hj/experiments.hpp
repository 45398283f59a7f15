#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "contact_hj/hamiltonian.hpp"
#include "contact_hj/measures.hpp"
#include "contact_hj/solver.hpp"
#include "contact_hj/trajectory.hpp"
#include "json.hpp"

namespace contact_hj {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

std::vector<std::string> PresetNames();
// Fully populated configuration document for a named preset.
nlohmann::json PresetConfig(const std::string& name);

// Applies `key=value` with a dotted key. The key must already exist in the
// document; the value is parsed as JSON and taken as a plain string when that
// fails.
void ApplyOverride(nlohmann::json& config, const std::string& assignment);

// Starts from the preset named by `user["preset"]` (default
// quadratic-linear), deep-merges `user` and then applies the overrides.
// Unknown keys anywhere raise ConfigError before anything is computed.
nlohmann::json ResolveConfig(const nlohmann::json& user,
                             const std::vector<std::string>& overrides = {});

struct RunSpec {
  double lambda = 0.05;
  double radius = 8.0;
  Point start{};
  Point pin{};
  IndexKind kind = IndexKind::kK;
};

struct ExperimentConfig {
  nlohmann::json raw;
  std::string preset;
  HamiltonianModel model;
  std::shared_ptr<const UniformGrid> box;
  ControlSet controls;
  SolveParams solver;
  LagrangianEvaluator evaluator;
  double critical_radius = 8.0;
  std::vector<double> critical_lambdas;
  std::vector<double> critical_compare_radii;
  std::optional<double> c;  // nullopt means "estimate"
  std::vector<double> lambdas;
  std::vector<double> radii;
  double truncation_radius = 8.0;
  std::vector<Point> probes;
  Point anchor{};
  double horizon = 40.0;
  double window = 3.0;
  nlohmann::json checks;
  AssumptionSampling sampling;
  std::map<std::string, std::string> expected_assumptions;
  RunSpec run;
  std::string output_dir = "out";

  Discretization MakeDiscretization() const;
  // Tolerance of a named check, or nullopt when the check is disabled.
  std::optional<double> Check(const std::string& name) const;
};

// Validates a resolved document and builds the typed configuration.
ExperimentConfig ParseConfig(const nlohmann::json& resolved);

// Reads a config file; errors name the path and, for JSON syntax errors, the
// line and column.
nlohmann::json LoadConfigFile(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;

  std::size_t Add(std::vector<nlohmann::json> row);
  std::string Csv() const;
  std::string Dat() const;  // numeric columns only, non-numbers become nan
};

struct Citation {
  std::string table;
  std::vector<std::size_t> rows;
};

struct Verdict {
  std::string name;
  bool passed = false;
  std::string detail;
  std::vector<Citation> cites;
};

struct ConvergenceReport {
  std::string experiment;
  nlohmann::json config;
  std::deque<Table> tables;  // deque keeps Table& from NewTable valid
  std::vector<Verdict> verdicts;
  std::vector<std::string> notes;
  double runtime_seconds = 0.0;

  Table& NewTable(std::string name, std::vector<std::string> columns);
  const Table& GetTable(const std::string& name) const;
  const Verdict* FindVerdict(const std::string& name) const;
  bool AllPassed() const;
  nlohmann::json ToJson() const;
};

// Writes every table as CSV and .dat plus report.json into `dir`.
void WriteReport(const ConvergenceReport& report, const std::filesystem::path& dir);

// out/<experiment>/<timestamp>[-n]/ under `root`, created fresh.
std::filesystem::path MakeRunDirectory(const std::filesystem::path& root,
                                       const std::string& experiment);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

// Memoizes state-constraint solves by (λ, R) within one process.
class SolveCache {
 public:
  SolveCache(const ExperimentConfig& config, Discretization disc);
  const SolveOutcome& StateConstraint(double lambda, double radius);
  const Discretization& disc() const { return disc_; }
  double c() const { return c_; }
  void SetCriticalValue(double c) { c_ = c; }

 private:
  const ExperimentConfig* config_;
  Discretization disc_;
  double c_ = 0.0;
  std::map<std::pair<double, double>, SolveOutcome> solves_;
};

// Resolves the critical value: the configured number, or an explicit
// estimate recorded in `report` when the config says "estimate".
double ResolveCriticalValue(const ExperimentConfig& config, ConvergenceReport* report);

ConvergenceReport CriticalStudy(const ExperimentConfig& config);
ConvergenceReport AssumptionStudy(const ExperimentConfig& config);
ConvergenceReport VanishingDiscountSweep(const ExperimentConfig& config, SolveCache* cache = nullptr);
ConvergenceReport LocalizationStudy(const ExperimentConfig& config, const Point& z,
                                    SolveCache* cache = nullptr);
ConvergenceReport MeasureStudy(const ExperimentConfig& config, SolveCache* cache = nullptr);

struct NamedConfig {
  std::string name;
  nlohmann::json config;
};

std::vector<NamedConfig> BuiltinModels();

// Least-squares slope of log(y) against log(x).
double FitLogSlope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace contact_hj
