#include <gtest/gtest.h>

#include <cctype>
#include <filesystem>
#include <random>

#include <nlohmann/json.hpp>

#include "srbench/gateway.hpp"
#include "srbench/parsing.hpp"
#include "srbench/reporting.hpp"
#include "test_util.hpp"

using namespace srbench;
namespace fs = std::filesystem;

namespace {

const Verdict& verdict_of(const ParseOutcome& o) {
  EXPECT_TRUE(std::holds_alternative<Verdict>(o));
  static const Verdict empty;
  return std::holds_alternative<Verdict>(o) ? std::get<Verdict>(o) : empty;
}

}  // namespace

TEST(ParseResponse, ContractExact) {
  const Verdict& v = verdict_of(parse_response("Realism: Unrealistic\nConfidence: 9\nReason: NPC teleports.\n"));
  EXPECT_FALSE(v.realistic);
  EXPECT_EQ(v.confidence, 9);
  EXPECT_EQ(v.reason, "NPC teleports.");
  EXPECT_TRUE(v.warnings.empty());
}

TEST(ParseResponse, ReasonSpansLinesUntilNextField) {
  const ParseOutcome o =
      parse_response("Realism: Realistic\nReason: first line\nsecond line\n\nConfidence: 7\ntrailing chatter\n");
  const Verdict& v = verdict_of(o);
  EXPECT_EQ(v.reason, "first line\nsecond line");
  EXPECT_EQ(v.confidence, 7);
}

TEST(ParseResponse, ReasonKeepsOriginalCase) {
  EXPECT_EQ(verdict_of(parse_response("REALISM: REALISTIC\nREASON: The NPC Stops.")).reason, "The NPC Stops.");
}

TEST(ParseResponse, FailureReasons) {
  EXPECT_EQ(std::get<ParseFailure>(parse_response("I cannot help with that.")).reason, "no verdict token");
  EXPECT_EQ(std::get<ParseFailure>(parse_response("Realism: yes\nRealism: no")).reason, "contradictory verdicts");
}

TEST(ParseResponse, ConfidenceBeforeVerdictIsIgnored) {
  const Verdict& v = verdict_of(parse_response("Confidence: 3\nRealism: Realistic\n"));
  EXPECT_FALSE(v.confidence.has_value());
}

TEST(ParseResponse, MockRepliesRoundTrip) {
  for (bool realistic : {true, false}) {
    for (int c = 0; c <= 10; ++c) {
      const Verdict& v = verdict_of(parse_response(contract_reply(realistic, c, "because")));
      EXPECT_EQ(v.realistic, realistic);
      EXPECT_EQ(v.confidence, c);
      EXPECT_EQ(v.reason, "because");
    }
  }
}

// Random case flips of keys and verdict tokens never change the verdict or
// the confidence. The reason text is compared case-insensitively since it
// is captured verbatim.
TEST(ParseResponse, CaseInsensitivityProperty) {
  std::mt19937_64 rng(2024);
  auto flip = [&](std::string s) {
    for (char& c : s) {
      if (rng() & 1) {
        c = static_cast<char>(std::isupper(static_cast<unsigned char>(c)) ? std::tolower(c) : std::toupper(c));
      }
    }
    return s;
  };
  for (int i = 0; i < 500; ++i) {
    const bool realistic = rng() & 1;
    const int conf = static_cast<int>(rng() % 11);
    const std::string text = flip("Realism") + ": " + flip(realistic ? "Realistic" : "Unrealistic") + "\n" +
                             flip("Confidence") + ": " + std::to_string(conf) + "\n" + flip("Reason") + ": ok\n";
    const Verdict& v = verdict_of(parse_response(text));
    EXPECT_EQ(v.realistic, realistic) << text;
    EXPECT_EQ(v.confidence, conf) << text;
  }
}

// Markdown decoration around the contract lines never changes the result.
TEST(ParseResponse, DecorationProperty) {
  std::mt19937_64 rng(77);
  const char* prefixes[] = {"", "- ", "* ", "> ", "## ", "+ "};
  const char* wraps[] = {"", "**", "__", "`", "*"};
  for (int i = 0; i < 500; ++i) {
    const bool realistic = rng() & 1;
    const int conf = static_cast<int>(rng() % 11);
    auto line = [&](const std::string& key, const std::string& value) {
      const std::string w = wraps[rng() % 5];
      const std::string prefix = prefixes[rng() % 6];
      return prefix + w + key + w + ": " + value + "\n";
    };
    const std::string text = line("Realism", realistic ? "Realistic" : "Unrealistic") +
                             line("Confidence", std::to_string(conf)) + line("Reason", "fine");
    const Verdict& v = verdict_of(parse_response(text));
    EXPECT_EQ(v.realistic, realistic) << text;
    EXPECT_EQ(v.confidence, conf) << text;
  }
}

TEST(ParseResponse, NeverThrowsOnNoise) {
  std::mt19937_64 rng(5);
  const std::string alphabet = "Realism:Confidence Reason yes no 0123456789*#>-_`\n\r\t.:";
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    const std::size_t n = rng() % 120;
    for (std::size_t k = 0; k < n; ++k) {
      s += alphabet[rng() % alphabet.size()];
    }
    EXPECT_NO_THROW(parse_response(s));
  }
}

TEST(ParserCorpus, EveryFixtureMatchesItsAnnotation) {
  const fs::path dir = srbench::testutil::fixtures_dir() / "parser";
  const auto expected = nlohmann::json::parse(read_text_file(dir / "expected.json"));
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".txt") {
      ++files;
      EXPECT_TRUE(expected.contains(entry.path().filename().string())) << entry.path();
    }
  }
  EXPECT_GE(files, 20u);
  for (const auto& [name, e] : expected.items()) {
    const ParseOutcome o = parse_response(read_text_file(dir / name));
    if (e["status"] == "parse_failure") {
      EXPECT_TRUE(std::holds_alternative<ParseFailure>(o)) << name;
      continue;
    }
    ASSERT_TRUE(std::holds_alternative<Verdict>(o)) << name << ": " << std::get<ParseFailure>(o).reason;
    const Verdict& v = std::get<Verdict>(o);
    EXPECT_EQ(v.realistic, e["realistic"].get<bool>()) << name;
    if (e["confidence"].is_null()) {
      EXPECT_FALSE(v.confidence.has_value()) << name;
    } else {
      EXPECT_EQ(v.confidence, e["confidence"].get<int>()) << name;
    }
    EXPECT_EQ(v.warnings.size(), e.value("warnings", 0)) << name;
  }
}

TEST(ParsedRecordJson, RoundTrip) {
  const std::vector<ParsedRecord> records = {
      {"s/original", 0, Verdict{true, 8, "ok", {}}},
      {"s/original", 1, Verdict{false, std::nullopt, "multi\nline", {"confidence 12 outside [0, 10]"}}},
      {"s/original", 2, ParseFailure{"no verdict token"}},
      {"s/original", 3, ProviderFailure{"HTTP 500"}},
  };
  for (const ParsedRecord& r : records) {
    EXPECT_EQ(parsed_record_from_json(to_json(r)), r);
  }
  const std::string jsonl = records_jsonl(records);
  EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 4);
}
