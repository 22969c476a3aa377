#include <gtest/gtest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "srbench/errors.hpp"
#include "srbench/reporting.hpp"
#include "test_util.hpp"

using namespace srbench;
using srbench::testutil::TempDir;

namespace {

AnalysisResult small_analysis() {
  const std::vector<ScenarioMeta> scenarios = {{"a", RoadId{"road1"}, Weather::rain_day},
                                               {"b", RoadId{"road2"}, Weather::sunny_day}};
  const std::vector<VariantMeta> variants = {{"a", "a/original", std::nullopt},
                                             {"a", "a/p=velocity,s=0.01", MutationSpec{"velocity", 0.01}},
                                             {"b", "b/original", std::nullopt},
                                             {"b", "b/p=velocity,s=0.01", MutationSpec{"velocity", 0.01}}};
  std::vector<ParsedRecord> records;
  const bool votes[4][3] = {{true, true, true}, {true, false, false}, {true, true, false}, {false, false, false}};
  for (int v = 0; v < 4; ++v) {
    for (int r = 0; r < 3; ++r) {
      records.push_back({variants[v].variant_id, r, Verdict{votes[v][r], 5, "", {}}});
    }
  }
  return analyze_run(scenarios, variants, records);
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) {
    out.push_back(line);
  }
  return out;
}

}  // namespace

TEST(ResultsCsv, HeaderOrderingAndRounding) {
  const AnalysisResult a = small_analysis();
  const auto lines = lines_of(results_csv(a.report, "m1"));
  ASSERT_EQ(lines.size(), 1u + 2 * (1 + 1 + 2 + 2));
  EXPECT_EQ(lines[0], "model,group_kind,group_key,metric,value,n_scenarios,n_valid_votes");
  // a/original 3/3 -> 20, a/velocity 1/3 -> -5/3, so a = 55/6
  // b/original 2/3 -> 20/3, b/velocity 0/3 -> -5, so b = 5/6
  EXPECT_EQ(lines[1], "m1,all,,RS,5.00,2,12");
  EXPECT_EQ(lines[2], "m1,all,,RSR,50.00,2,12");
  EXPECT_EQ(lines[3], "m1,parameter,velocity,RS,-3.33,2,6");
  EXPECT_EQ(lines[4], "m1,parameter,velocity,RSR,16.67,2,6");
  EXPECT_EQ(lines[5], "m1,road,road1,RS,9.17,1,6");
  EXPECT_EQ(lines[7], "m1,road,road2,RS,0.83,1,6");
  EXPECT_EQ(lines[9], "m1,weather,rain_day,RS,9.17,1,6");
  EXPECT_EQ(lines[11], "m1,weather,sunny_day,RS,0.83,1,6");
}

TEST(ResultsCsv, QuotesFieldsWithCommas) {
  const AnalysisResult a = small_analysis();
  const auto lines = lines_of(results_csv(a.report, "mock/bernoulli:0.5,x"));
  EXPECT_EQ(lines[1].rfind("\"mock/bernoulli:0.5,x\",all", 0), 0u);
}

TEST(PerVariantCsv, OneRowPerVariant) {
  const auto lines = lines_of(per_variant_csv(small_analysis()));
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "scenario_id,variant_id,parameter,seed,n_valid,n_realistic,agreement,rs_v");
  EXPECT_EQ(lines[1], "a,a/original,,,3,3,1.00,20.00");
  EXPECT_EQ(lines[2], "a,\"a/p=velocity,s=0.01\",velocity,0.01,3,1,0.33,-1.67");
  EXPECT_EQ(lines[4], "b,\"b/p=velocity,s=0.01\",velocity,0.01,3,0,0.00,-5.00");
}

TEST(ChartSvg, StandaloneDocumentWithBars) {
  const AnalysisResult a = small_analysis();
  const std::string svg = chart_svg("road", a.report.by_road);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("xmlns=\"http://www.w3.org/2000/svg\""), std::string::npos);
  EXPECT_NE(svg.find("road1"), std::string::npos);
  EXPECT_NE(svg.find("road2"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  std::map<std::string, GroupStats> tricky{{"<&>", GroupStats{}}};
  EXPECT_EQ(chart_svg("road", tricky).find("<&>"), std::string::npos);
}

TEST(WriteReports, WritesEverythingAndRefusesOverwrite) {
  TempDir dir("reports");
  const AnalysisResult a = small_analysis();
  RunManifest m;
  m.config = config_echo(RunConfig::defaults());
  const auto files = write_reports(a, m, dir.path(), {"m1", true, false});
  EXPECT_EQ(files.size(), 7u);
  for (const char* f : {"results.csv", "per_variant.csv", "manifest.json", "charts/rs_all.svg",
                        "charts/rs_by_road.svg", "charts/rs_by_weather.svg", "charts/rs_by_parameter.svg"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  EXPECT_THROW(write_reports(a, m, dir.path(), {"m1", true, false}), IoError);
  EXPECT_NO_THROW(write_reports(a, m, dir.path(), {"m1", false, true}));

  const auto j = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
  EXPECT_EQ(j["tool_version"], kToolVersion);
  EXPECT_EQ(j["metric_formula_version"], kMetricFormulaVersion);
  EXPECT_EQ(j["config"]["llm"]["api_key_env"], "OPENAI_API_KEY");
}

TEST(RawResponseJson, RoundTrip) {
  const RawResponse ok{"pid", 3, "Realism: yes\n", 12, Outcome::ok, ""};
  const RawResponse bad{"pid", 4, "", 7, Outcome::provider_failure, "HTTP 500"};
  EXPECT_EQ(raw_response_from_json(to_json(ok, "v")), ok);
  EXPECT_EQ(raw_response_from_json(to_json(bad, "v")), bad);
  EXPECT_EQ(to_json(ok, "v")["variant_id"], "v");
}
