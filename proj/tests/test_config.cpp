#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "ufls/config.hpp"

using namespace ufls;

TEST(Config, DefaultsRoundTrip) {
  const RunConfig c;
  const RunConfig back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.milp.n_stages, 3);
  EXPECT_EQ(back.milp.gammas, (std::array<double, 3>{1.0, 0.2, 1.0}));
  EXPECT_FALSE(back.milp.fix_thresholds_hz.has_value());
}

TEST(Config, PartialPatchKeepsDefaults) {
  const RunConfig c = config_from_json(nlohmann::json::parse(R"({"milp": {"n_stages": 2}, "jobs": 3})"));
  EXPECT_EQ(c.milp.n_stages, 2);
  EXPECT_EQ(c.jobs, 3);
  EXPECT_EQ(c.milp.t_s, 0.1);
  EXPECT_EQ(c.scenario_count, 6);
}

TEST(Config, RejectsUnknownAndMistypedKeys) {
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"milp": {"stages": 2}})")), ValidationError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"bogus": 1})")), ValidationError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"milp": {"n_stages": "two"}})")), ValidationError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"milp": {"n_stages": 0}})")), ValidationError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"jobs": 0})")), ValidationError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"case_study": {"other_beta": [0.2, 0.1]}})")),
               ValidationError);
}

TEST(Config, OverridesParseValues) {
  nlohmann::json patch = nlohmann::json::object();
  apply_override(patch, "milp.gammas=[1,0.4,1]");
  apply_override(patch, "solver.backend=highs-mps");
  apply_override(patch, "case_study.id=der");
  apply_override(patch, "milp.fix_thresholds_hz=[59.4,59.1,58.8]");
  const RunConfig c = config_from_json(patch);
  EXPECT_EQ(c.milp.gammas[1], 0.4);
  EXPECT_EQ(c.backend, "highs-mps");
  EXPECT_EQ(c.case_study.id, CaseStudyId::WithDER);
  ASSERT_TRUE(c.milp.fix_thresholds_hz.has_value());
  EXPECT_EQ(c.milp.fix_thresholds_hz->at(2), 58.8);
  EXPECT_THROW(apply_override(patch, "novalue"), ValidationError);
  EXPECT_THROW(apply_override(patch, "a..b=1"), ValidationError);
}

TEST(Config, NullThresholdsMeanFree) {
  const RunConfig c = config_from_json(nlohmann::json::parse(R"({"milp": {"fix_thresholds_hz": null}})"));
  EXPECT_FALSE(c.milp.fix_thresholds_hz.has_value());
}

TEST(Config, FixedThresholdStudyTakesConventionalThresholds) {
  const RunConfig c = config_from_json(nlohmann::json::parse(R"({"case_study": {"id": "fixed_thresholds"}})"));
  ASSERT_TRUE(c.milp.fix_thresholds_hz.has_value());
  EXPECT_EQ(*c.milp.fix_thresholds_hz, c.conventional.thresholds_hz);
}

TEST(Config, FileCasePathIsRelativeToTheFile) {
  const auto dir = std::filesystem::temp_directory_path() / "ufls_config_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "run.json");
    out << R"({"case": "cases/x.json", "milp": {"horizon_s": 10}})";
  }
  const RunConfig c = load_config((dir / "run.json").string(), {"milp.horizon_s=12"});
  EXPECT_EQ(c.case_path, (dir / "cases/x.json").lexically_normal().string());
  EXPECT_EQ(c.milp.horizon_s, 12.0);
  EXPECT_THROW(load_config((dir / "missing.json").string(), {}), ValidationError);
  std::filesystem::remove_all(dir);
}

TEST(Config, BundledConfigsLoad) {
  for (const auto& e : std::filesystem::directory_iterator(test::data_path("configs"))) {
    if (e.path().extension() != ".json" || e.path().filename().string().rfind("run_", 0) != 0) continue;
    const RunConfig c = load_config(e.path().string(), {});
    EXPECT_TRUE(std::filesystem::exists(c.case_path)) << e.path();
  }
}
