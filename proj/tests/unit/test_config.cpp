#include <filesystem>

#include "contact_hj/experiments.hpp"
#include "contact_hj/io.hpp"
#include "doctest.h"

using namespace contact_hj;
using nlohmann::json;

TEST_CASE("presets resolve and parse") {
  const auto names = PresetNames();
  CHECK(names.size() == 5);
  for (const auto& n : names) {
    const auto cfg = ParseConfig(ResolveConfig({{"preset", n}}));
    CHECK(cfg.preset == n);
    CHECK(cfg.lambdas.size() >= 2);
  }
  CHECK(ParseConfig(ResolveConfig({{"preset", "quadratic-2d"}})).model.dim() == 2);
  CHECK_THROWS_AS(PresetConfig("nope"), ConfigError);
  CHECK(ResolveConfig(json::object()).at("preset") == "quadratic-linear");
}

TEST_CASE("overrides use dotted keys and reject unknown ones") {
  auto doc = PresetConfig("quadratic-linear");
  ApplyOverride(doc, "solver.tol=1e-9");
  CHECK(doc["solver"]["tol"] == 1e-9);
  ApplyOverride(doc, "lambdas=[0.4,0.2]");
  CHECK(doc["lambdas"].size() == 2);
  ApplyOverride(doc, "run.kind=K_bold");
  CHECK(doc["run"]["kind"] == "K_bold");
  CHECK_THROWS_AS(ApplyOverride(doc, "solver.tolerance=1"), ConfigError);
  CHECK_THROWS_AS(ApplyOverride(doc, "solver.tol"), ConfigError);
  CHECK_THROWS_AS(ResolveConfig(json::object(), {"bogus=1"}), ConfigError);
  CHECK_THROWS_AS(ResolveConfig({{"solver", {{"typo", 1}}}}), ConfigError);
}

TEST_CASE("schema violations name the field") {
  auto bad = [](const std::vector<std::string>& ov) { return ParseConfig(ResolveConfig(json::object(), ov)); };
  CHECK_THROWS_WITH_AS(bad({"lambdas=[0.1,0.2]"}), doctest::Contains("lambdas"), ConfigError);
  CHECK_THROWS_WITH_AS(bad({"radii=[3,2]"}), doctest::Contains("radii"), ConfigError);
  CHECK_THROWS_WITH_AS(bad({"solver.workers=0"}), doctest::Contains("solver.workers"), ConfigError);
  CHECK_THROWS_WITH_AS(bad({"legendre.mode=fast"}), doctest::Contains("legendre.mode"), ConfigError);
  CHECK_THROWS_WITH_AS(bad({"solver.tol=\"x\""}), doctest::Contains("solver.tol"), ConfigError);
  CHECK_FALSE(bad({"critical.c=\"estimate\""}).c.has_value());
  CHECK(*bad({"critical.c=0.5"}).c == 0.5);
}

TEST_CASE("config files") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "contact_hj_config_test";
  fs::create_directories(dir);
  CHECK_THROWS_WITH(LoadConfigFile(dir / "missing.json"), doctest::Contains("missing.json"));
  WriteFileAtomic(dir / "broken.json", "{\n  \"preset\": \"arctan\",\n  oops\n}\n");
  CHECK_THROWS_WITH(LoadConfigFile(dir / "broken.json"), doctest::Contains("line 3"));
  WriteFileAtomic(dir / "ok.json", R"({"preset": "arctan", "solver": {"tol": 1e-7}})");
  const auto cfg = ParseConfig(ResolveConfig(LoadConfigFile(dir / "ok.json")));
  CHECK(cfg.solver.tol == 1e-7);
  CHECK(cfg.preset == "arctan");
  fs::remove_all(dir);
}

TEST_CASE("report tables") {
  ConvergenceReport rep;
  Table& t = rep.NewTable("demo", {"a", "b", "note"});
  t.Add({1, 0.5, "x,y"});
  t.Add({2, nullptr, "plain"});
  rep.NewTable("other", {"z"});  // must not invalidate t
  t.Add({3, 1.25, true});
  CHECK(t.Csv() == "a,b,note\n1,0.5,\"x,y\"\n2,nan,plain\n3,1.25,true\n");
  CHECK(t.Dat().find("nan") != std::string::npos);
  CHECK_THROWS_AS(t.Add({1}), std::logic_error);
  rep.verdicts.push_back({"v", true, "", {}});
  CHECK(rep.AllPassed());
  rep.verdicts.push_back({"w", false, "", {{"demo", {0}}}});
  CHECK_FALSE(rep.AllPassed());
  CHECK(rep.FindVerdict("w") != nullptr);
  CHECK(rep.ToJson()["verdicts"][1]["cites"][0]["rows"][0] == 0);
}

TEST_CASE("run directories are fresh") {
  namespace fs = std::filesystem;
  const auto root = fs::temp_directory_path() / "contact_hj_rundir_test";
  fs::remove_all(root);
  const auto a = MakeRunDirectory(root, "solve");
  const auto b = MakeRunDirectory(root, "solve");
  CHECK(a != b);
  CHECK(fs::is_directory(a));
  CHECK(a.parent_path() == root / "solve");
  fs::remove_all(root);
}

TEST_CASE("log-slope fit and number formatting") {
  CHECK(FitLogSlope({0.1, 0.2, 0.4}, {0.01, 0.04, 0.16}) == doctest::Approx(2.0));
  CHECK_THROWS(FitLogSlope({1.0}, {1.0}));
  CHECK(FormatDouble(0.1) == "0.1");
  CHECK(FormatDouble(-0.0) == "0");
  CHECK(std::stod(FormatDouble(1.0 / 3.0)) == 1.0 / 3.0);
}
