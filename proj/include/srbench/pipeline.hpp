#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "srbench/config.hpp"
#include "srbench/gateway.hpp"
#include "srbench/metrics.hpp"
#include "srbench/mutation.hpp"
#include "srbench/scenario.hpp"
#include "srbench/verbalizer.hpp"

namespace srbench {

enum ExitStatus : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitDataset = 2,
  kExitProvider = 3,
  kExitAnalysis = 4,
};

struct PipelineOptions {
  /// Used instead of the provider described by the config when set.
  Provider* provider = nullptr;
  /// Validate configuration and credentials, write manifest.json only.
  bool dry_run = false;
  std::ostream* log = nullptr;
};

struct PipelineResult {
  int status = kExitOk;
  std::string message;
  std::filesystem::path output_dir;
  std::optional<AnalysisResult> analysis;
  GatewayStats gateway;
  std::vector<std::filesystem::path> written;
};

/// ingest -> first N -> variant sets -> prompts -> repetitions -> parse ->
/// metrics -> reports. Never throws; failures map to ExitStatus.
PipelineResult run_pipeline(const RunConfig& cfg, const PipelineOptions& options = {});

/// Runs one stage ("ingest", "mutate", "evaluate" or "analyze") against the
/// intermediates already in cfg.output_dir. Same exit statuses as
/// run_pipeline; a missing earlier stage is a dataset error.
PipelineResult run_stage(const std::string& stage, const RunConfig& cfg, const PipelineOptions& options = {});

/// Provider described by the config: the mock when one is configured,
/// otherwise an HTTPS chat-completions client.
std::unique_ptr<Provider> make_provider(const RunConfig& cfg);

// --- stages ------------------------------------------------------------------
// Each stage writes its intermediates into the output directory so the
// subcommands can run one at a time; `run` executes all four in order.

struct IngestStage {
  ScenarioDataset dataset;
  std::vector<FileError> errors;
};

/// Ingests cfg.dataset_path, keeps the first cfg.scenario_number scenarios
/// and writes scenarios/<id>.json plus dataset.json.
IngestStage stage_ingest(const RunConfig& cfg, const std::filesystem::path& out_dir);
IngestStage load_ingest(const std::filesystem::path& out_dir);

/// Builds one variant set per scenario from parameters x mutation_seeds and
/// writes variants/<stem>.json plus variants.json.
std::vector<VariantSet> stage_mutate(const RunConfig& cfg, const ScenarioDataset& dataset,
                                     const std::filesystem::path& out_dir);
std::vector<VariantSet> load_variants(const std::filesystem::path& out_dir);

struct EvaluationStage {
  std::vector<PromptInstance> prompts;                // one per variant, in set order
  std::vector<std::vector<RawResponse>> responses;    // [variant][repetition]
  GatewayStats gateway;
  std::string template_version;
  int n_requests = 0;
  int n_provider_failures = 0;
};

std::vector<PromptInstance> build_prompts(const RunConfig& cfg, const std::vector<VariantSet>& sets,
                                          const PromptTemplate& tmpl);

/// Verbalizes, prompts and evaluates every variant; writes
/// responses/<stem>__rep<k>.txt, responses.jsonl and evaluation.json.
EvaluationStage stage_evaluate(const RunConfig& cfg, const std::vector<VariantSet>& sets, Provider& provider,
                               const std::filesystem::path& out_dir);
EvaluationStage load_evaluation(const std::filesystem::path& out_dir, const std::vector<VariantSet>& sets);

/// Parses every response into a record, in variant then repetition order.
std::vector<ParsedRecord> parse_responses(const std::vector<VariantSet>& sets, const EvaluationStage& eval);

/// Parses, scores and writes records.jsonl, results.csv, per_variant.csv,
/// charts/ and manifest.json.
AnalysisResult stage_analyze(const RunConfig& cfg, const IngestStage& ingest, const std::vector<VariantSet>& sets,
                             const EvaluationStage& eval, const std::filesystem::path& out_dir,
                             std::vector<std::filesystem::path>* written = nullptr,
                             const std::string& started_at = {});

/// Removes the files and directories a run writes, leaving anything else.
void clear_run_outputs(const std::filesystem::path& out_dir);

std::string utc_timestamp();

}  // namespace srbench
