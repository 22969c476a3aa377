#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "srbench/mutation.hpp"
#include "srbench/scenario.hpp"

namespace srbench {

/// Configured description tables for the grouping keys.
struct DescriptionTables {
  std::map<RoadId, std::string> roads;
  std::map<Weather, std::string> weathers;

  friend bool operator==(const DescriptionTables&, const DescriptionTables&) = default;
};

struct EnvironmentText {
  std::string road_description;
  std::string weather_description;
};

/// Throws MissingDescription when either key has no (nonempty) entry.
EnvironmentText resolve_environment(const Scenario& s, const DescriptionTables& tables);

struct ScenarioDescription {
  std::string variant_id;
  std::string header;     // road and weather sentences
  std::string timesteps;  // one block per rendered timestep
  std::string text;       // header + blank line + timesteps
};

/// Renders `v` as prose. Reals are printed with exactly two decimals.
ScenarioDescription verbalize(const ScenarioVariant& v, const EnvironmentText& env, int max_timesteps);

/// Three-line reply format every prompt asks for.
inline constexpr std::string_view kAnswerContract =
    "Answer with exactly these three lines and nothing else:\n"
    "Realism: <Realistic|Unrealistic>\n"
    "Confidence: <integer 0-10>\n"
    "Reason: <free text>\n";

inline constexpr std::string_view kTaskPreamble =
    "You are an expert in autonomous driving safety assessment. Your task is to judge whether "
    "this driving scenario is realistic, that is, whether it could plausibly occur in real-world "
    "traffic. The scenario is given as a sequence of time steps describing the ego vehicle and "
    "the surrounding NPC vehicles.\n";

struct PromptTemplate {
  std::string version;
  /// Placeholders: {road}, {weather}, {timesteps}, {answer_contract}.
  std::string body;

  static PromptTemplate builtin();

  /// Reads an override file. The first line must be
  /// "template_version: <version>" with a version different from the
  /// built-in one; the rest is the body. The body must use {timesteps} and
  /// {answer_contract}; unknown placeholders raise ConfigError.
  static PromptTemplate load(const std::filesystem::path& path);
  static PromptTemplate from_text(std::string_view text);
};

struct PromptInstance {
  std::string prompt_id;  // sha256 hex of text
  std::string variant_id;
  std::string text;
  std::string template_version;
};

PromptInstance build_prompt(const ScenarioDescription& d, const PromptTemplate& tmpl = PromptTemplate::builtin());

}  // namespace srbench
