#include "srbench/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "srbench/errors.hpp"
#include "srbench/numfmt.hpp"
#include "srbench/parsing.hpp"
#include "srbench/reporting.hpp"

namespace fs = std::filesystem;

namespace srbench {

using json = nlohmann::json;

namespace {

void log_line(std::ostream* log, const std::string& msg) {
  if (log != nullptr) {
    *log << msg << '\n';
  }
}

json stats_json(const GatewayStats& s) {
  return json{{"cache_hits", s.cache_hits},         {"cache_misses", s.cache_misses},
              {"provider_calls", s.provider_calls}, {"provider_failures", s.provider_failures},
              {"peak_in_flight", s.peak_in_flight}};
}

GatewayStats stats_from_json(const json& j) {
  GatewayStats s;
  s.cache_hits = j.at("cache_hits").get<std::size_t>();
  s.cache_misses = j.at("cache_misses").get<std::size_t>();
  s.provider_calls = j.at("provider_calls").get<std::size_t>();
  s.provider_failures = j.at("provider_failures").get<std::size_t>();
  s.peak_in_flight = j.at("peak_in_flight").get<std::size_t>();
  return s;
}

json read_json_file(const fs::path& p) {
  try {
    return json::parse(read_text_file(p));
  } catch (const json::exception& e) {
    throw IoError(p.string() + ": " + e.what());
  }
}

std::vector<ScenarioMeta> scenario_metas(const ScenarioDataset& ds) {
  std::vector<ScenarioMeta> out;
  for (const Scenario& s : ds.scenarios) {
    out.push_back({s.id, s.road, s.weather});
  }
  return out;
}

std::vector<VariantMeta> variant_metas(const std::vector<VariantSet>& sets) {
  std::vector<VariantMeta> out;
  for (const VariantSet& set : sets) {
    for (const ScenarioVariant& v : set.variants) {
      out.push_back({set.base_id, v.variant_id, v.applied});
    }
  }
  return out;
}

std::vector<std::string> ingest_error_lines(const std::vector<FileError>& errors) {
  std::vector<std::string> out;
  for (const FileError& e : errors) {
    out.push_back(e.file.filename().string() + ": " + e.message);
  }
  return out;
}

RunManifest base_manifest(const RunConfig& cfg) {
  RunManifest m;
  m.config = config_echo(cfg);
  return m;
}

PromptTemplate template_for(const RunConfig& cfg) {
  return cfg.prompt_template.empty() ? PromptTemplate::builtin() : PromptTemplate::load(cfg.prompt_template);
}

}  // namespace

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::unique_ptr<Provider> make_provider(const RunConfig& cfg) {
  if (cfg.mock) {
    return make_mock_provider(*cfg.mock);
  }
  return std::make_unique<ChatCompletionsProvider>(cfg.llm, make_http_transport());
}

void clear_run_outputs(const fs::path& out_dir) {
  for (const char* dir : {"scenarios", "variants", "responses", "charts"}) {
    fs::remove_all(out_dir / dir);
  }
  for (const char* file : {"dataset.json", "variants.json", "responses.jsonl", "evaluation.json", "records.jsonl",
                           "results.csv", "per_variant.csv", "manifest.json"}) {
    fs::remove(out_dir / file);
  }
}

// --- ingest ------------------------------------------------------------------

IngestStage stage_ingest(const RunConfig& cfg, const fs::path& out_dir) {
  IngestResult r = ingest_source_dataset(cfg.dataset_path);
  IngestStage st{take_first_n(r.dataset, static_cast<std::size_t>(cfg.scenario_number)), std::move(r.errors)};

  json ids = json::array();
  for (const Scenario& s : st.dataset.scenarios) {
    write_text_file(out_dir / "scenarios" / (s.id + ".json"), serialize_scenario(s));
    ids.push_back(s.id);
  }
  json errs = json::array();
  for (const FileError& e : st.errors) {
    errs.push_back({{"file", e.file.filename().string()}, {"message", e.message}});
  }
  json doc{{"source_checksum", st.dataset.source_checksum}, {"scenarios", ids}, {"ingest_errors", errs}};
  write_text_file(out_dir / "dataset.json", doc.dump(2) + "\n");
  return st;
}

IngestStage load_ingest(const fs::path& out_dir) {
  const json doc = read_json_file(out_dir / "dataset.json");
  IngestStage st;
  st.dataset.source_checksum = doc.at("source_checksum").get<std::string>();
  for (const auto& id : doc.at("scenarios")) {
    st.dataset.scenarios.push_back(
        parse_scenario(read_text_file(out_dir / "scenarios" / (id.get<std::string>() + ".json"))));
  }
  for (const auto& e : doc.at("ingest_errors")) {
    st.errors.push_back({e.at("file").get<std::string>(), e.at("message").get<std::string>()});
  }
  return st;
}

// --- mutate ------------------------------------------------------------------

std::vector<VariantSet> stage_mutate(const RunConfig& cfg, const ScenarioDataset& dataset, const fs::path& out_dir) {
  const std::vector<MutationSpec> specs = cross_specs(cfg.parameters, cfg.mutation_seeds);
  std::vector<VariantSet> sets;
  json index = json::array();
  for (const Scenario& s : dataset.scenarios) {
    VariantSet set = build_variant_set(s, specs);
    for (const ScenarioVariant& v : set.variants) {
      const std::string stem = variant_file_stem(s.id, v.applied);
      write_text_file(out_dir / "variants" / (stem + ".json"), serialize_scenario(v.scenario));
      json entry{{"scenario_id", s.id}, {"variant_id", v.variant_id}, {"file", stem + ".json"}};
      if (v.applied) {
        entry["parameter"] = v.applied->parameter;
        entry["seed"] = v.applied->seed;
      } else {
        entry["parameter"] = nullptr;
        entry["seed"] = nullptr;
      }
      index.push_back(std::move(entry));
    }
    sets.push_back(std::move(set));
  }
  write_text_file(out_dir / "variants.json", json{{"variants", index}}.dump(2) + "\n");
  return sets;
}

std::vector<VariantSet> load_variants(const fs::path& out_dir) {
  const json doc = read_json_file(out_dir / "variants.json");
  std::vector<VariantSet> sets;
  for (const auto& e : doc.at("variants")) {
    const std::string scenario_id = e.at("scenario_id").get<std::string>();
    if (sets.empty() || sets.back().base_id != scenario_id) {
      sets.push_back({scenario_id, {}});
    }
    ScenarioVariant v;
    v.variant_id = e.at("variant_id").get<std::string>();
    if (!e.at("parameter").is_null()) {
      v.kind = VariantKind::mutated;
      v.applied = MutationSpec{e.at("parameter").get<std::string>(), e.at("seed").get<double>()};
    }
    v.scenario = parse_scenario(read_text_file(out_dir / "variants" / e.at("file").get<std::string>()));
    sets.back().variants.push_back(std::move(v));
  }
  return sets;
}

// --- evaluate ----------------------------------------------------------------

std::vector<PromptInstance> build_prompts(const RunConfig& cfg, const std::vector<VariantSet>& sets,
                                          const PromptTemplate& tmpl) {
  std::vector<PromptInstance> prompts;
  for (const VariantSet& set : sets) {
    for (const ScenarioVariant& v : set.variants) {
      const EnvironmentText env = resolve_environment(v.scenario, cfg.descriptions);
      prompts.push_back(build_prompt(verbalize(v, env, cfg.time_steps), tmpl));
    }
  }
  return prompts;
}

EvaluationStage stage_evaluate(const RunConfig& cfg, const std::vector<VariantSet>& sets, Provider& provider,
                               const fs::path& out_dir) {
  const PromptTemplate tmpl = template_for(cfg);
  EvaluationStage st;
  st.template_version = tmpl.version;
  st.prompts = build_prompts(cfg, sets, tmpl);

  CacheStore cache = cfg.cache_path.empty() ? CacheStore() : CacheStore(cfg.cache_path);
  Gateway gateway(provider, cache, cfg.llm.max_in_flight);
  st.responses = gateway.run_all(st.prompts, cfg.repetitions);
  st.gateway = gateway.stats();

  std::string jsonl;
  std::size_t k = 0;
  json prompt_index = json::array();
  for (const VariantSet& set : sets) {
    for (const ScenarioVariant& v : set.variants) {
      const std::string stem = variant_file_stem(set.base_id, v.applied);
      prompt_index.push_back({{"variant_id", v.variant_id}, {"prompt_id", st.prompts[k].prompt_id}});
      for (const RawResponse& r : st.responses[k]) {
        ++st.n_requests;
        if (r.ok()) {
          write_text_file(out_dir / "responses" / (stem + "__rep" + std::to_string(r.repetition_index) + ".txt"),
                          r.text);
        } else {
          ++st.n_provider_failures;
        }
        jsonl += to_json(r, v.variant_id).dump();
        jsonl += '\n';
      }
      ++k;
    }
  }
  write_text_file(out_dir / "responses.jsonl", jsonl);

  json doc{{"template_version", st.template_version},
           {"model", provider.model_id()},
           {"repetitions", cfg.repetitions},
           {"n_requests", st.n_requests},
           {"n_provider_failures", st.n_provider_failures},
           {"gateway", stats_json(st.gateway)},
           {"prompts", prompt_index}};
  write_text_file(out_dir / "evaluation.json", doc.dump(2) + "\n");
  return st;
}

EvaluationStage load_evaluation(const fs::path& out_dir, const std::vector<VariantSet>& sets) {
  const json doc = read_json_file(out_dir / "evaluation.json");
  EvaluationStage st;
  st.template_version = doc.at("template_version").get<std::string>();
  st.n_requests = doc.at("n_requests").get<int>();
  st.n_provider_failures = doc.at("n_provider_failures").get<int>();
  st.gateway = stats_from_json(doc.at("gateway"));

  std::map<std::string, std::size_t> slot;
  for (const VariantSet& set : sets) {
    for (const ScenarioVariant& v : set.variants) {
      slot.emplace(v.variant_id, slot.size());
    }
  }
  st.prompts.resize(slot.size());
  st.responses.resize(slot.size());
  for (const auto& p : doc.at("prompts")) {
    const auto it = slot.find(p.at("variant_id").get<std::string>());
    if (it == slot.end()) {
      throw IoError("evaluation.json names unknown variant " + p.at("variant_id").get<std::string>());
    }
    st.prompts[it->second].variant_id = it->first;
    st.prompts[it->second].prompt_id = p.at("prompt_id").get<std::string>();
    st.prompts[it->second].template_version = st.template_version;
  }

  std::istringstream in(read_text_file(out_dir / "responses.jsonl"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw IoError("responses.jsonl: malformed line");
    }
    const auto it = slot.find(j.at("variant_id").get<std::string>());
    if (it == slot.end()) {
      throw IoError("responses.jsonl names unknown variant " + j.at("variant_id").get<std::string>());
    }
    st.responses[it->second].push_back(raw_response_from_json(j));
  }
  return st;
}

// --- analyze -----------------------------------------------------------------

std::vector<ParsedRecord> parse_responses(const std::vector<VariantSet>& sets, const EvaluationStage& eval) {
  std::vector<ParsedRecord> records;
  std::size_t k = 0;
  for (const VariantSet& set : sets) {
    for (const ScenarioVariant& v : set.variants) {
      if (k >= eval.responses.size()) {
        break;
      }
      for (const RawResponse& r : eval.responses[k]) {
        ParsedRecord rec;
        rec.variant_id = v.variant_id;
        rec.repetition_index = r.repetition_index;
        if (!r.ok()) {
          rec.result = ProviderFailure{r.failure_reason};
        } else {
          ParseOutcome o = parse_response(r.text);
          if (auto* verdict = std::get_if<Verdict>(&o)) {
            rec.result = std::move(*verdict);
          } else {
            rec.result = std::get<ParseFailure>(std::move(o));
          }
        }
        records.push_back(std::move(rec));
      }
      ++k;
    }
  }
  return records;
}

AnalysisResult stage_analyze(const RunConfig& cfg, const IngestStage& ingest, const std::vector<VariantSet>& sets,
                             const EvaluationStage& eval, const fs::path& out_dir, std::vector<fs::path>* written,
                             const std::string& started_at) {
  const std::vector<ParsedRecord> records = parse_responses(sets, eval);
  write_text_file(out_dir / "records.jsonl", records_jsonl(records));
  if (written != nullptr) {
    written->push_back(out_dir / "records.jsonl");
  }

  const std::vector<ScenarioMeta> smeta = scenario_metas(ingest.dataset);
  const std::vector<VariantMeta> vmeta = variant_metas(sets);
  AnalysisResult analysis = analyze_run(smeta, vmeta, records);
  if (analysis.report.n_valid_votes == 0) {
    throw NoValidVotes("no valid verdicts in " + std::to_string(records.size()) + " responses");
  }

  RunManifest m = base_manifest(cfg);
  m.dataset_checksum = ingest.dataset.source_checksum;
  m.template_version = eval.template_version;
  m.started_at = started_at.empty() ? utc_timestamp() : started_at;
  m.finished_at = utc_timestamp();
  m.gateway = eval.gateway;
  m.n_scenarios = static_cast<int>(ingest.dataset.scenarios.size());
  m.n_variants = static_cast<int>(vmeta.size());
  m.n_requests = eval.n_requests;
  m.n_provider_failures = eval.n_provider_failures;
  m.n_parse_failures = analysis.report.n_parse_failures;
  m.ingest_errors = ingest_error_lines(ingest.errors);
  m.unscored_variants = analysis.report.unscored_variants;
  m.unscored_scenarios = analysis.report.unscored_scenarios;

  const ReportOptions opts{cfg.model_label(), cfg.charts, cfg.force_overwrite};
  std::vector<fs::path> files = write_reports(analysis, m, out_dir, opts);
  if (written != nullptr) {
    written->insert(written->end(), files.begin(), files.end());
  }
  return analysis;
}

// --- run ---------------------------------------------------------------------

PipelineResult run_pipeline(const RunConfig& cfg, const PipelineOptions& options) {
  PipelineResult res;
  res.output_dir = cfg.output_dir;
  const fs::path& out = cfg.output_dir;
  const std::string started_at = utc_timestamp();
  std::ostream* log = options.log;

  auto fail = [&](int status, const std::string& msg) {
    res.status = status;
    res.message = msg;
    log_line(log, "error: " + msg);
    return res;
  };

  try {
    cfg.validate();
    if (!cfg.prompt_template.empty()) {
      (void)template_for(cfg);
    }
  } catch (const Error& e) {
    return fail(kExitConfig, e.what());
  }

  // Ingest into memory first so a bad dataset leaves no output directory.
  IngestResult ingested;
  try {
    ingested = ingest_source_dataset(cfg.dataset_path);
  } catch (const Error& e) {
    return fail(kExitDataset, e.what());
  }
  for (const FileError& fe : ingested.errors) {
    log_line(log, "warning: skipped " + fe.file.string() + ": " + fe.message);
  }

  std::unique_ptr<Provider> owned;
  Provider* provider = options.provider;
  try {
    if (provider == nullptr) {
      owned = make_provider(cfg);
      provider = owned.get();
    }
    // Surface missing descriptions before any request is sent.
    for (const Scenario& s : take_first_n(ingested.dataset, static_cast<std::size_t>(cfg.scenario_number)).scenarios) {
      (void)resolve_environment(s, cfg.descriptions);
    }
  } catch (const Error& e) {
    return fail(kExitConfig, e.what());
  }

  if (options.dry_run) {
    try {
      fs::create_directories(out);
      RunManifest m = base_manifest(cfg);
      m.dataset_checksum = ingested.dataset.source_checksum;
      m.template_version = template_for(cfg).version;
      m.started_at = started_at;
      m.finished_at = utc_timestamp();
      m.n_scenarios = static_cast<int>(take_first_n(ingested.dataset, static_cast<std::size_t>(cfg.scenario_number)).scenarios.size());
      m.ingest_errors = ingest_error_lines(ingested.errors);
      m.dry_run = true;
      m.message = "dry run: configuration valid";
      write_text_file(out / "manifest.json", manifest_json(m));
      res.written.push_back(out / "manifest.json");
    } catch (const std::exception& e) {
      return fail(kExitAnalysis, e.what());
    }
    res.message = "dry run: configuration valid";
    log_line(log, res.message);
    return res;
  }

  try {
    if (fs::exists(out / "manifest.json") || fs::exists(out / "results.csv")) {
      if (!cfg.force_overwrite) {
        return fail(kExitAnalysis, out.string() + " already holds a run (use --force to overwrite)");
      }
      clear_run_outputs(out);
    }
    fs::create_directories(out);
  } catch (const fs::filesystem_error& e) {
    return fail(kExitAnalysis, e.what());
  }

  IngestStage ingest;
  std::vector<VariantSet> sets;
  try {
    ingest = stage_ingest(cfg, out);
    log_line(log, "ingested " + std::to_string(ingest.dataset.scenarios.size()) + " scenarios");
    sets = stage_mutate(cfg, ingest.dataset, out);
    log_line(log, "built " + std::to_string(sets.size()) + " variant sets");
  } catch (const ConfigError& e) {
    return fail(kExitConfig, e.what());
  } catch (const Error& e) {
    return fail(kExitDataset, e.what());
  }

  EvaluationStage eval;
  try {
    eval = stage_evaluate(cfg, sets, *provider, out);
  } catch (const AuthError& e) {
    return fail(kExitProvider, e.what());
  } catch (const FixtureError& e) {
    return fail(kExitProvider, e.what());
  } catch (const Error& e) {
    return fail(kExitConfig, e.what());
  }
  res.gateway = eval.gateway;
  log_line(log, "evaluated " + std::to_string(eval.n_requests) + " requests (" +
                    std::to_string(eval.gateway.cache_hits) + " cached, " +
                    std::to_string(eval.n_provider_failures) + " provider failures)");

  const double failure_fraction =
      eval.n_requests == 0 ? 0.0 : static_cast<double>(eval.n_provider_failures) / eval.n_requests;
  if (failure_fraction > cfg.failure_threshold) {
    std::ostringstream msg;
    msg << "provider failure fraction " << eval.n_provider_failures << "/" << eval.n_requests
        << " exceeds threshold " << cfg.failure_threshold;
    RunManifest m = base_manifest(cfg);
    m.dataset_checksum = ingest.dataset.source_checksum;
    m.template_version = eval.template_version;
    m.started_at = started_at;
    m.finished_at = utc_timestamp();
    m.gateway = eval.gateway;
    m.n_scenarios = static_cast<int>(ingest.dataset.scenarios.size());
    m.n_variants = static_cast<int>(eval.prompts.size());
    m.n_requests = eval.n_requests;
    m.n_provider_failures = eval.n_provider_failures;
    m.ingest_errors = ingest_error_lines(ingest.errors);
    m.exit_status = kExitProvider;
    m.message = msg.str();
    try {
      write_text_file(out / "manifest.json", manifest_json(m));
      res.written.push_back(out / "manifest.json");
    } catch (const Error&) {
    }
    return fail(kExitProvider, msg.str());
  }

  try {
    res.analysis = stage_analyze(cfg, ingest, sets, eval, out, &res.written, started_at);
  } catch (const std::exception& e) {
    return fail(kExitAnalysis, e.what());
  }
  std::ostringstream done;
  done << "RS(all) = " << fixed_half_away(res.analysis->report.rs_all(), 2)
       << ", RSR = " << fixed_half_away(res.analysis->report.rsr(), 2) << "%; results in " << out.string();
  res.message = done.str();
  log_line(log, res.message);
  return res;
}

}  // namespace srbench

namespace srbench {

PipelineResult run_stage(const std::string& stage, const RunConfig& cfg, const PipelineOptions& options) {
  PipelineResult res;
  res.output_dir = cfg.output_dir;
  const fs::path& out = cfg.output_dir;
  std::ostream* log = options.log;

  auto fail = [&](int status, const std::string& msg) {
    res.status = status;
    res.message = msg;
    log_line(log, "error: " + msg);
    return res;
  };

  if (stage != "ingest" && stage != "mutate" && stage != "evaluate" && stage != "analyze") {
    return fail(kExitConfig, "unknown stage '" + stage + "'");
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    return fail(kExitConfig, e.what());
  }

  if (stage == "ingest") {
    try {
      if (!fs::is_directory(cfg.dataset_path)) {
        return fail(kExitDataset, cfg.dataset_path.string() + " is not a directory");
      }
      (void)ingest_source_dataset(cfg.dataset_path);
    } catch (const Error& e) {
      return fail(kExitDataset, e.what());
    }
    if (fs::exists(out / "dataset.json") && !cfg.force_overwrite) {
      return fail(kExitAnalysis, out.string() + " already holds ingested scenarios (use --force to overwrite)");
    }
    try {
      if (cfg.force_overwrite) {
        clear_run_outputs(out);
      }
      IngestStage st = stage_ingest(cfg, out);
      res.message = "ingested " + std::to_string(st.dataset.scenarios.size()) + " scenarios into " + out.string();
    } catch (const Error& e) {
      return fail(kExitDataset, e.what());
    }
    log_line(log, res.message);
    return res;
  }

  IngestStage ingest;
  try {
    ingest = load_ingest(out);
  } catch (const Error& e) {
    return fail(kExitDataset, std::string("no ingested scenarios (run ingest first): ") + e.what());
  }

  if (stage == "mutate") {
    try {
      fs::remove_all(out / "variants");
      std::vector<VariantSet> sets = stage_mutate(cfg, ingest.dataset, out);
      std::size_t n = 0;
      for (const VariantSet& s : sets) {
        n += s.variants.size();
      }
      res.message = "wrote " + std::to_string(n) + " variants to " + (out / "variants").string();
    } catch (const ConfigError& e) {
      return fail(kExitConfig, e.what());
    } catch (const UnknownParameter& e) {
      return fail(kExitConfig, e.what());
    } catch (const Error& e) {
      return fail(kExitDataset, e.what());
    }
    log_line(log, res.message);
    return res;
  }

  std::vector<VariantSet> sets;
  try {
    sets = load_variants(out);
  } catch (const Error& e) {
    return fail(kExitDataset, std::string("no variants (run mutate first): ") + e.what());
  }

  if (stage == "evaluate") {
    std::unique_ptr<Provider> owned;
    Provider* provider = options.provider;
    EvaluationStage eval;
    try {
      if (provider == nullptr) {
        owned = make_provider(cfg);
        provider = owned.get();
      }
      fs::remove_all(out / "responses");
      eval = stage_evaluate(cfg, sets, *provider, out);
    } catch (const AuthError& e) {
      return fail(kExitProvider, e.what());
    } catch (const FixtureError& e) {
      return fail(kExitProvider, e.what());
    } catch (const Error& e) {
      return fail(kExitConfig, e.what());
    }
    res.gateway = eval.gateway;
    const double fraction =
        eval.n_requests == 0 ? 0.0 : static_cast<double>(eval.n_provider_failures) / eval.n_requests;
    if (fraction > cfg.failure_threshold) {
      return fail(kExitProvider, "provider failure fraction " + std::to_string(eval.n_provider_failures) + "/" +
                                     std::to_string(eval.n_requests) + " exceeds threshold");
    }
    res.message = "evaluated " + std::to_string(eval.n_requests) + " requests (" +
                  std::to_string(eval.gateway.cache_hits) + " cached, " + std::to_string(eval.n_provider_failures) +
                  " provider failures)";
    log_line(log, res.message);
    return res;
  }

  if (stage == "analyze") {
    try {
      const EvaluationStage eval = load_evaluation(out, sets);
      res.gateway = eval.gateway;
      res.analysis = stage_analyze(cfg, ingest, sets, eval, out, &res.written);
    } catch (const std::exception& e) {
      return fail(kExitAnalysis, e.what());
    }
    res.message = "RS(all) = " + fixed_half_away(res.analysis->report.rs_all(), 2) +
                  ", RSR = " + fixed_half_away(res.analysis->report.rsr(), 2) + "%; results in " + out.string();
    log_line(log, res.message);
    return res;
  }

  return res;
}

}  // namespace srbench
