#include "srbench/reporting.hpp"

#include <fstream>
#include <sstream>

#include "srbench/errors.hpp"
#include "srbench/numfmt.hpp"

namespace fs = std::filesystem;

namespace srbench {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  return out + "\"";
}

std::string num2(double v) { return fixed_half_away(v, 2); }

void add_group_rows(std::vector<std::vector<std::string>>& rows, const std::string& model, const std::string& kind,
                    const std::string& key, const GroupStats& g) {
  rows.push_back({model, kind, key, "RS", num2(g.rs), std::to_string(g.n_scenarios), std::to_string(g.n_valid_votes)});
  rows.push_back(
      {model, kind, key, "RSR", num2(g.rsr), std::to_string(g.n_scenarios), std::to_string(g.n_valid_votes)});
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

ojson config_echo(const RunConfig& cfg) {
  ojson c;
  c["dataset_path"] = cfg.dataset_path.string();
  c["output_dir"] = cfg.output_dir.string();
  c["cache_path"] = cfg.cache_path.string();
  c["prompt_template"] = cfg.prompt_template.string();
  ojson roads = ojson::object();
  for (const auto& [road, text] : cfg.descriptions.roads) {
    roads[road.value] = text;
  }
  ojson weathers = ojson::object();
  for (const auto& [w, text] : cfg.descriptions.weathers) {
    weathers[std::string(to_string(w))] = text;
  }
  c["road_descriptions"] = roads;
  c["weather_descriptions"] = weathers;
  c["time_steps"] = cfg.time_steps;
  c["parameters"] = cfg.parameters;
  c["mutation_seeds"] = cfg.mutation_seeds;
  c["scenario_number"] = cfg.scenario_number;
  c["repetitions"] = cfg.repetitions;
  c["failure_threshold"] = cfg.failure_threshold;
  c["llm"] = {{"endpoint_url", cfg.llm.endpoint_url}, {"model_id", cfg.llm.model_id},
              {"temperature", cfg.llm.temperature},   {"max_tokens", cfg.llm.max_tokens},
              {"api_key_env", cfg.llm.api_key_env},   {"max_in_flight", cfg.llm.max_in_flight},
              {"max_retries", cfg.llm.max_retries},   {"timeout_s", cfg.llm.timeout_s}};
  c["mock"] = cfg.mock ? ojson(cfg.mock->to_string()) : ojson(nullptr);
  c["charts"] = cfg.charts;
  c["chart_format"] = cfg.chart_format;
  c["force_overwrite"] = cfg.force_overwrite;
  return c;
}

std::string manifest_json(const RunManifest& m) {
  ojson j;
  j["tool_version"] = m.tool_version;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["exit_status"] = m.exit_status;
  j["message"] = m.message;
  j["dry_run"] = m.dry_run;
  j["dataset_checksum"] = m.dataset_checksum;
  j["metric_formula_version"] = m.metric_formula_version;
  j["template_version"] = m.template_version;
  j["config"] = m.config;
  j["cache"] = {{"hits", m.gateway.cache_hits},
                {"misses", m.gateway.cache_misses},
                {"provider_calls", m.gateway.provider_calls},
                {"peak_in_flight", m.gateway.peak_in_flight}};
  j["counts"] = {{"scenarios", m.n_scenarios},
                 {"variants", m.n_variants},
                 {"requests", m.n_requests},
                 {"provider_failures", m.n_provider_failures},
                 {"parse_failures", m.n_parse_failures}};
  j["ingest_errors"] = m.ingest_errors;
  j["unscored_variants"] = m.unscored_variants;
  j["unscored_scenarios"] = m.unscored_scenarios;
  return j.dump(2) + "\n";
}

std::string results_csv(const MetricsReport& report, const std::string& model) {
  std::vector<std::vector<std::string>> rows;
  add_group_rows(rows, model, "all", "", report.all);
  for (const auto& [key, g] : report.by_parameter) {
    add_group_rows(rows, model, "parameter", key, g);
  }
  for (const auto& [key, g] : report.by_road) {
    add_group_rows(rows, model, "road", key, g);
  }
  for (const auto& [key, g] : report.by_weather) {
    add_group_rows(rows, model, "weather", key, g);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a[1], a[2], a[3]) < std::tie(b[1], b[2], b[3]);
  });

  std::string out = "model,group_kind,group_key,metric,value,n_scenarios,n_valid_votes\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += (i ? "," : "") + csv_field(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string per_variant_csv(const AnalysisResult& analysis) {
  std::string out = "scenario_id,variant_id,parameter,seed,n_valid,n_realistic,agreement,rs_v\n";
  for (const VariantResult& v : analysis.variants) {
    out += csv_field(v.meta.scenario_id) + ',' + csv_field(v.meta.variant_id) + ',';
    if (v.meta.applied) {
      out += csv_field(v.meta.applied->parameter) + ',' + shortest_repr(v.meta.applied->seed);
    } else {
      out += ',';
    }
    out += ',' + std::to_string(v.tally.n_valid) + ',' + std::to_string(v.tally.n_realistic) + ',';
    if (v.score) {
      out += num2(v.score->agreement) + ',' + num2(v.score->rs_v);
    } else {
      out += ',';
    }
    out += '\n';
  }
  return out;
}

std::string chart_svg(const std::string& group_kind, const std::map<std::string, GroupStats>& groups) {
  constexpr double kTop = 50.0;
  constexpr double kPlotHeight = 250.0;
  constexpr double kLeft = 60.0;
  constexpr double kGroupWidth = 90.0;
  constexpr double kBarWidth = 30.0;
  const double width = kLeft + kGroupWidth * static_cast<double>(std::max<std::size_t>(groups.size(), 1)) + 60.0;
  const double height = kTop + kPlotHeight + 60.0;
  // RS axis spans [-5, 20]; RSR [0, 100] is drawn at 1/5 scale on the same axis.
  auto y_of = [&](double rs_units) { return kTop + (kRsMax - rs_units) / (kRsMax - kRsMin) * kPlotHeight; };
  auto f = [](double v) { return fixed_half_away(v, 1); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f(width) << "\" height=\"" << f(height)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << f(width / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">RS and RSR by "
      << escape_xml(group_kind) << "</text>\n";

  for (int tick = -5; tick <= 20; tick += 5) {
    const double y = y_of(tick);
    svg << "<line x1=\"" << f(kLeft) << "\" y1=\"" << f(y) << "\" x2=\"" << f(width - 60.0) << "\" y2=\"" << f(y)
        << "\" stroke=\"" << (tick == 0 ? "black" : "#dddddd") << "\"/>\n";
    svg << "<text x=\"" << f(kLeft - 6) << "\" y=\"" << f(y + 4) << "\" text-anchor=\"end\">" << tick << "</text>\n";
    if (tick >= 0) {
      svg << "<text x=\"" << f(width - 54.0) << "\" y=\"" << f(y + 4) << "\">" << tick * 5 << "%</text>\n";
    }
  }

  double x = kLeft + 15.0;
  for (const auto& [key, g] : groups) {
    const double rs_top = y_of(std::max(g.rs, 0.0));
    const double rs_bottom = y_of(std::min(g.rs, 0.0));
    svg << "<rect x=\"" << f(x) << "\" y=\"" << f(rs_top) << "\" width=\"" << f(kBarWidth) << "\" height=\""
        << f(rs_bottom - rs_top) << "\" fill=\"#4472c4\"><title>RS " << num2(g.rs) << "</title></rect>\n";
    const double rsr_top = y_of(g.rsr / 5.0);
    svg << "<rect x=\"" << f(x + kBarWidth) << "\" y=\"" << f(rsr_top) << "\" width=\"" << f(kBarWidth)
        << "\" height=\"" << f(y_of(0.0) - rsr_top) << "\" fill=\"#ed7d31\"><title>RSR " << num2(g.rsr)
        << "%</title></rect>\n";
    svg << "<text x=\"" << f(x + kBarWidth) << "\" y=\"" << f(kTop + kPlotHeight + 18.0)
        << "\" text-anchor=\"middle\">" << escape_xml(key.empty() ? "all" : key) << "</text>\n";
    x += kGroupWidth;
  }

  const double legend_y = kTop + kPlotHeight + 40.0;
  svg << "<rect x=\"" << f(kLeft) << "\" y=\"" << f(legend_y - 9) << "\" width=\"10\" height=\"10\" fill=\"#4472c4\"/>"
      << "<text x=\"" << f(kLeft + 14) << "\" y=\"" << f(legend_y) << "\">RS (left axis)</text>\n";
  svg << "<rect x=\"" << f(kLeft + 110) << "\" y=\"" << f(legend_y - 9)
      << "\" width=\"10\" height=\"10\" fill=\"#ed7d31\"/>"
      << "<text x=\"" << f(kLeft + 124) << "\" y=\"" << f(legend_y) << "\">RSR (right axis)</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void write_text_file(const fs::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot read " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<fs::path> write_reports(const AnalysisResult& analysis, const RunManifest& manifest,
                                    const fs::path& out_dir, const ReportOptions& options) {
  const fs::path results = out_dir / "results.csv";
  if (fs::exists(results) && !options.force) {
    throw IoError(results.string() + " already exists (use --force to overwrite)");
  }

  std::vector<fs::path> written;
  write_text_file(results, results_csv(analysis.report, options.model));
  written.push_back(results);
  const fs::path per_variant = out_dir / "per_variant.csv";
  write_text_file(per_variant, per_variant_csv(analysis));
  written.push_back(per_variant);

  if (options.charts) {
    const MetricsReport& r = analysis.report;
    const std::pair<const char*, const std::map<std::string, GroupStats>*> kinds[] = {
        {"road", &r.by_road}, {"weather", &r.by_weather}, {"parameter", &r.by_parameter}};
    std::map<std::string, GroupStats> all{{"all", r.all}};
    const fs::path all_chart = out_dir / "charts" / "rs_all.svg";
    write_text_file(all_chart, chart_svg("all", all));
    written.push_back(all_chart);
    for (const auto& [kind, groups] : kinds) {
      const fs::path chart = out_dir / "charts" / (std::string("rs_by_") + kind + ".svg");
      write_text_file(chart, chart_svg(kind, *groups));
      written.push_back(chart);
    }
  }

  const fs::path manifest_path = out_dir / "manifest.json";
  write_text_file(manifest_path, manifest_json(manifest));
  written.push_back(manifest_path);
  return written;
}

// --- JSON-lines --------------------------------------------------------------

json to_json(const ParsedRecord& r) {
  json j;
  j["variant_id"] = r.variant_id;
  j["repetition_index"] = r.repetition_index;
  if (const auto* v = std::get_if<Verdict>(&r.result)) {
    j["status"] = "verdict";
    j["realistic"] = v->realistic;
    j["confidence"] = v->confidence ? json(*v->confidence) : json(nullptr);
    j["reason"] = v->reason;
    if (!v->warnings.empty()) {
      j["warnings"] = v->warnings;
    }
  } else if (const auto* p = std::get_if<ParseFailure>(&r.result)) {
    j["status"] = "parse_failure";
    j["reason"] = p->reason;
  } else {
    j["status"] = "provider_failure";
    j["reason"] = std::get<ProviderFailure>(r.result).reason;
  }
  return j;
}

ParsedRecord parsed_record_from_json(const json& j) {
  ParsedRecord r;
  r.variant_id = j.at("variant_id").get<std::string>();
  r.repetition_index = j.at("repetition_index").get<int>();
  const std::string status = j.at("status").get<std::string>();
  if (status == "verdict") {
    Verdict v;
    v.realistic = j.at("realistic").get<bool>();
    if (!j.at("confidence").is_null()) {
      v.confidence = j.at("confidence").get<int>();
    }
    v.reason = j.at("reason").get<std::string>();
    if (j.contains("warnings")) {
      v.warnings = j.at("warnings").get<std::vector<std::string>>();
    }
    r.result = std::move(v);
  } else if (status == "parse_failure") {
    r.result = ParseFailure{j.at("reason").get<std::string>()};
  } else {
    r.result = ProviderFailure{j.at("reason").get<std::string>()};
  }
  return r;
}

std::string records_jsonl(const std::vector<ParsedRecord>& records) {
  std::string out;
  for (const ParsedRecord& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

json to_json(const RawResponse& r, const std::string& variant_id) {
  json j;
  j["variant_id"] = variant_id;
  j["prompt_id"] = r.prompt_id;
  j["repetition_index"] = r.repetition_index;
  j["outcome"] = r.ok() ? "ok" : "provider_failure";
  j["text"] = r.text;
  j["failure_reason"] = r.failure_reason;
  j["latency_ms"] = r.latency_ms;
  return j;
}

RawResponse raw_response_from_json(const json& j) {
  RawResponse r;
  r.prompt_id = j.at("prompt_id").get<std::string>();
  r.repetition_index = j.at("repetition_index").get<int>();
  r.outcome = j.at("outcome").get<std::string>() == "ok" ? Outcome::ok : Outcome::provider_failure;
  r.text = j.at("text").get<std::string>();
  r.failure_reason = j.at("failure_reason").get<std::string>();
  r.latency_ms = j.at("latency_ms").get<std::int64_t>();
  return r;
}

}  // namespace srbench
