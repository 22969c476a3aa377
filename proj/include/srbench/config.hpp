#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "srbench/gateway.hpp"
#include "srbench/verbalizer.hpp"

namespace srbench {

struct RunConfig {
  // files
  std::filesystem::path dataset_path = "data/sample";
  std::filesystem::path output_dir = "out/run";
  std::filesystem::path cache_path = "cache/responses.jsonl";
  std::filesystem::path prompt_template;  // empty: built-in template

  // road / weather
  DescriptionTables descriptions;

  // scenario + mutation
  int time_steps = 5;
  std::vector<std::string> parameters = {"position", "rotation", "velocity"};
  std::vector<double> mutation_seeds = {0.01};
  int scenario_number = 8;

  // evaluation
  int repetitions = 5;
  LlmConfig llm;
  std::optional<MockSpec> mock;
  double failure_threshold = 0.2;

  // reporting
  bool charts = true;
  std::string chart_format = "svg";
  bool force_overwrite = false;

  /// Defaults with the bundled road1..road4 and weather descriptions.
  static RunConfig defaults();

  /// Throws ConfigError on any invalid field, duplicate (parameter, seed)
  /// pair or unknown parameter name.
  void validate() const;

  /// Name used in the results.csv model column.
  std::string model_label() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Flat "key = value" text with dotted keys; '#' starts a comment line.
/// Lists are comma separated; strings may be double-quoted with \" \\ \n
/// escapes. Road and weather descriptions use "road.<id>" and
/// "weather.<id>" keys. Unknown keys raise ConfigError.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

std::string format_config(const RunConfig& cfg);
void save_config(const RunConfig& cfg, const std::filesystem::path& path);

}  // namespace srbench
