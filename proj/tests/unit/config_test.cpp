#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "rsmp/config.hpp"
#include "rsmp/report_io.hpp"

namespace rsmp {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> problems_of(const nlohmann::json& doc) {
  try {
    config_from_json(doc).validate();
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& list, const std::string& s) {
  for (const auto& p : list) {
    if (p.find(s) != std::string::npos) return true;
  }
  return false;
}

TEST(Config, DefaultsValidate) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.build_problem()->name(), "example1");
  EXPECT_EQ(c.build_region(*c.build_problem()).size(), 21u);
  EXPECT_EQ(c.regression().degree, 2);
  EXPECT_EQ(c.check_options().flat_fraction, 0.99);
}

TEST(Config, JsonRoundTrip) {
  RunConfig c;
  c.problem = "example2";
  c.params = {{"sign", -1}};
  c.control.value = {0.0};
  c.numerics.steps = 128;
  c.numerics.seed = 99;
  c.condition.replicates = 4;
  c.spike.replacement = {1.0};
  c.spike.windows = {{0.25, 0.5}};
  const auto doc = to_json(c);
  const RunConfig back = config_from_json(doc);
  EXPECT_EQ(to_json(back), doc);
  EXPECT_EQ(back.numerics.seed, 99u);
  EXPECT_EQ(back.condition.replicates, 4u);
  EXPECT_EQ(back.spike.windows.at(0).second, 0.5);
}

TEST(Config, UnknownKeysAndTypesReportFieldPaths) {
  const auto list = problems_of({{"numerics", {{"stepz", 3}, {"paths", "x"}}},
                                 {"colour", "red"}});
  EXPECT_TRUE(mentions(list, "numerics.stepz"));
  EXPECT_TRUE(mentions(list, "numerics.paths"));
  EXPECT_TRUE(mentions(list, "colour"));
}

TEST(Config, ValidationCollectsEveryProblem) {
  const auto list = problems_of({{"numerics", {{"paths", 1}, {"steps", 0}}},
                                 {"condition", {{"flat_fraction", 1.5}}}});
  EXPECT_TRUE(mentions(list, "numerics.paths"));
  EXPECT_TRUE(mentions(list, "numerics.steps"));
  EXPECT_TRUE(mentions(list, "condition.flat_fraction"));
  EXPECT_TRUE(mentions(problems_of({{"spike", {{"anchor", 2.0}}}}),
                       "spike.anchor"));
}

TEST(Config, ControlMustFitTheProblem) {
  EXPECT_TRUE(mentions(problems_of({{"control", {{"value", {3.0}}}}}),
                       "control"));
  EXPECT_TRUE(mentions(problems_of({{"control", {{"value", {0.1, 0.2}}}}}),
                       "control"));
  EXPECT_TRUE(mentions(
      problems_of({{"control",
                    {{"type", "piecewise"}, {"breaks", {1.5}},
                     {"values", {{0.0}, {0.5}}}}}}),
      "control.breaks"));
}

TEST(Config, PiecewiseControlBecomesSchedule) {
  RunConfig c;
  c.control.type = "piecewise";
  c.control.breaks = {0.5};
  c.control.values = {{0.0}, {0.5}};
  c.numerics.steps = 4;
  const auto problem = c.build_problem();
  const auto u = c.build_control(*problem);
  ASSERT_EQ(u.schedule_values().size(), 4u);
  EXPECT_EQ(u.schedule_values()[1][0], 0.0);
  EXPECT_EQ(u.schedule_values()[2][0], 0.5);
}

TEST(Config, MissingReplacementIsAnError) {
  RunConfig c;
  EXPECT_THROW(c.build_replacement(*c.build_problem()), ConfigError);
}

TEST(Config, ResolvesThroughEnvironment) {
  const fs::path dir = fs::temp_directory_path() / "rsmp_config_test";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "tiny.json");
    out << R"({"problem": "example2", "params": {"sign": 1}})";
  }
  ::setenv(kConfigDirEnv, dir.c_str(), 1);
  EXPECT_EQ(resolve_config_path("tiny"), (dir / "tiny.json").string());
  EXPECT_EQ(load_config("tiny.json").problem, "example2");
  EXPECT_THROW(resolve_config_path("absent"), InvalidArgument);
  fs::remove_all(dir);
}

TEST(Config, ShippedConfigsValidate) {
  const char* dir = std::getenv(kConfigDirEnv);
  if (dir == nullptr) GTEST_SKIP() << "config directory not set";
  for (const char* name : {"example1", "example2_plus", "example2_minus",
                           "example2_taylor", "affine"}) {
    const fs::path path = fs::path(dir) / (std::string(name) + ".json");
    if (!fs::exists(path)) GTEST_SKIP() << path;
    const RunConfig c = load_config(path.string());
    EXPECT_NO_THROW(c.validate()) << name;
  }
}

TEST(ReportIo, NumbersAndEstimates) {
  const auto e = estimate_json({1.5, 0.25});
  EXPECT_EQ(e.at("value"), 1.5);
  EXPECT_EQ(e.at("se"), 0.25);
  EXPECT_EQ(exact_json(0.0).at("exact"), true);

  RateFit fit;
  fit.exact = true;
  fit.slope = std::numeric_limits<double>::infinity();
  fit.half_width = std::numeric_limits<double>::quiet_NaN();
  const auto j = to_json(fit);
  EXPECT_EQ(j.at("slope"), "inf");
  EXPECT_EQ(j.at("half_width"), "nan");
  EXPECT_EQ(j.at("exact"), true);
}

TEST(ReportIo, ConditionCsvAndJson) {
  ConditionReport r;
  r.order = ConditionReport::Order::kSecond;
  r.controls = {Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)};
  r.nodes = {0};
  r.tolerance = 0.01;
  for (std::size_t c = 0; c < 2; ++c) {
    ConditionRecord rec;
    rec.control = c;
    rec.stat = {-2.0, 0.1};
    rec.verdict = Verdict::kViolated;
    r.records.push_back(rec);
  }
  r.node_verdicts = {Verdict::kViolated};
  r.verdict = Verdict::kViolated;
  std::ostringstream csv;
  write_condition_csv(csv, r);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')),
            "node,t,v0,mean,se,verdict");
  EXPECT_NE(csv.str().find("violated"), std::string::npos);
  const auto j = to_json(r);
  EXPECT_EQ(j.at("verdict"), "excluded");
  EXPECT_EQ(j.at("records").size(), 2u);
}

TEST(ReportIo, FileRoundTrip) {
  const fs::path path = fs::temp_directory_path() / "rsmp_report_io.json";
  const Json doc = {{"a", 1}, {"b", {1.5, 2.5}}};
  write_json_file(path.string(), doc);
  EXPECT_EQ(read_json_file(path.string()), doc);
  {
    std::ofstream out(path);
    out << "{broken";
  }
  EXPECT_THROW(read_json_file(path.string()), Error);
  fs::remove(path);
  EXPECT_THROW(read_json_file(path.string()), Error);
  EXPECT_THROW(write_json_file("/nonexistent/dir/x.json", doc), Error);
}

}  // namespace
}  // namespace rsmp
