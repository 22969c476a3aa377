#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "srbench/config.hpp"
#include "srbench/gateway.hpp"
#include "srbench/metrics.hpp"
#include "srbench/parsing.hpp"

namespace srbench {

inline constexpr const char* kToolVersion = "0.3.0";

/// Reproducibility record written next to the results. Never holds API key
/// material: the config echo carries only the name of the key variable.
struct RunManifest {
  std::string tool_version = kToolVersion;
  nlohmann::ordered_json config;
  std::string dataset_checksum;
  std::string metric_formula_version = kMetricFormulaVersion;
  std::string template_version;
  std::string started_at;
  std::string finished_at;
  GatewayStats gateway;
  int exit_status = 0;
  std::string message;
  int n_scenarios = 0;
  int n_variants = 0;
  int n_requests = 0;
  int n_provider_failures = 0;
  int n_parse_failures = 0;
  std::vector<std::string> ingest_errors;
  std::vector<std::string> unscored_variants;
  std::vector<std::string> unscored_scenarios;
  bool dry_run = false;
};

nlohmann::ordered_json config_echo(const RunConfig& cfg);
std::string manifest_json(const RunManifest& m);

/// results.csv: model,group_kind,group_key,metric,value,n_scenarios,n_valid_votes
/// sorted by (group_kind, group_key, metric); values with two decimals.
std::string results_csv(const MetricsReport& report, const std::string& model);

/// per_variant.csv: scenario_id,variant_id,parameter,seed,n_valid,n_realistic,agreement,rs_v
/// in analysis order. Unscored variants leave agreement and rs_v empty.
std::string per_variant_csv(const AnalysisResult& analysis);

/// Grouped RS / RSR bar chart for one group kind as standalone SVG.
std::string chart_svg(const std::string& group_kind, const std::map<std::string, GroupStats>& groups);

struct ReportOptions {
  std::string model;
  bool charts = true;
  bool force = false;
};

/// Writes results.csv, per_variant.csv, charts/rs_<kind>.svg and
/// manifest.json into `out_dir`. Refuses (IoError) to replace an existing
/// results.csv unless options.force is set.
std::vector<std::filesystem::path> write_reports(const AnalysisResult& analysis, const RunManifest& manifest,
                                                 const std::filesystem::path& out_dir, const ReportOptions& options);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

// --- JSON-lines records ------------------------------------------------------

nlohmann::json to_json(const ParsedRecord& r);
ParsedRecord parsed_record_from_json(const nlohmann::json& j);
std::string records_jsonl(const std::vector<ParsedRecord>& records);

nlohmann::json to_json(const RawResponse& r, const std::string& variant_id);
RawResponse raw_response_from_json(const nlohmann::json& j);

}  // namespace srbench
