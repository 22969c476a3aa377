#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srbench/mutation.hpp"
#include "srbench/parsing.hpp"
#include "srbench/scenario.hpp"

namespace srbench {

/// Version tag of the RS formula below; recorded in every run manifest.
inline constexpr const char* kMetricFormulaVersion = "rs-piecewise-v1: a>=0.5 -> 20(2a-1), else 5(2a-1)";

inline constexpr double kRsMin = -5.0;
inline constexpr double kRsMax = 20.0;

struct VoteTally {
  std::string variant_id;
  int n_valid = 0;
  int n_realistic = 0;
  int n_parse_failures = 0;
  int n_provider_failures = 0;

  int total() const noexcept { return n_valid + n_parse_failures + n_provider_failures; }

  friend bool operator==(const VoteTally&, const VoteTally&) = default;
};

struct VariantScore {
  std::string variant_id;
  double agreement = 0.0;  // n_realistic / n_valid
  double rs_v = 0.0;
};

struct ScenarioScore {
  std::string scenario_id;
  double rs = 0.0;  // mean rs_v over the scenario's scored variants
  RoadId road;
  Weather weather = Weather::sunny_day;
};

/// Records of one variant -> counts. Throws MixedVariant when the records
/// carry different variant ids.
VoteTally tally(std::span<const ParsedRecord> records);

/// Piecewise-linear robustness score of a vote fraction a in [0, 1]:
/// 20 at a = 1, 0 at a = 0.5, -5 at a = 0.
double rs_of_agreement(double a) noexcept;

/// Throws NoValidVotes when t.n_valid == 0.
VariantScore variant_rs(const VoteTally& t);

/// Percentage of valid verdicts that say realistic. Parse and provider
/// failures are outside the denominator. Throws NoValidVotes when there are
/// no valid verdicts.
double realism_success_rate(std::span<const ParsedRecord> records);

struct GroupStats {
  double rs = 0.0;
  double rsr = 0.0;
  int n_scenarios = 0;
  int n_valid_votes = 0;
  int n_realistic_votes = 0;
};

/// Identity of one evaluated variant, used to group records.
struct VariantMeta {
  std::string scenario_id;
  std::string variant_id;
  std::optional<MutationSpec> applied;
};

struct ScenarioMeta {
  std::string scenario_id;
  RoadId road;
  Weather weather = Weather::sunny_day;
};

struct VariantResult {
  VariantMeta meta;
  VoteTally tally;
  std::optional<VariantScore> score;  // absent when no valid votes
};

struct MetricsReport {
  GroupStats all;
  std::map<std::string, GroupStats> by_road;
  std::map<std::string, GroupStats> by_weather;
  std::map<std::string, GroupStats> by_parameter;

  int n_scenarios = 0;  // scenarios with at least one scored variant
  int n_variants = 0;
  int n_valid_votes = 0;
  int n_parse_failures = 0;
  int n_provider_failures = 0;
  std::vector<std::string> unscored_variants;
  std::vector<std::string> unscored_scenarios;

  double rsr() const noexcept { return all.rsr; }
  double rs_all() const noexcept { return all.rs; }
};

/// Group means over scenario scores. `variants` supplies per-variant scores
/// for the parameter grouping and the vote counts behind every group's RSR.
MetricsReport aggregate(std::span<const ScenarioScore> scores, std::span<const VariantResult> variants);

struct AnalysisResult {
  std::vector<VariantResult> variants;  // in `variants` input order
  std::vector<ScenarioScore> scenarios;  // in `scenarios` input order, scored only
  MetricsReport report;
};

/// Full analysis of one run: tallies every variant, scores it, averages
/// per scenario, then aggregates. Records whose variant id is unknown are
/// ignored. Results do not depend on the order of `records`.
AnalysisResult analyze_run(std::span<const ScenarioMeta> scenarios, std::span<const VariantMeta> variants,
                           std::span<const ParsedRecord> records);

}  // namespace srbench
