#include "srbench/metrics.hpp"

#include <algorithm>
#include <set>

#include "srbench/errors.hpp"

namespace srbench {

namespace {

// Sum in key order so results do not depend on input order.
double mean_by_key(const std::map<std::string, double>& values) {
  double sum = 0.0;
  for (const auto& [key, v] : values) {
    sum += v;
  }
  return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

struct GroupAccumulator {
  std::map<std::string, double> members;  // member key -> score
  std::set<std::string> scenarios;
  int n_valid = 0;
  int n_realistic = 0;

  GroupStats finish() const {
    GroupStats g;
    g.rs = mean_by_key(members);
    g.n_scenarios = static_cast<int>(scenarios.size());
    g.n_valid_votes = n_valid;
    g.n_realistic_votes = n_realistic;
    g.rsr = n_valid > 0 ? 100.0 * n_realistic / n_valid : 0.0;
    return g;
  }
};

std::map<std::string, GroupStats> finish_all(const std::map<std::string, GroupAccumulator>& groups) {
  std::map<std::string, GroupStats> out;
  for (const auto& [key, acc] : groups) {
    if (!acc.members.empty()) {
      out.emplace(key, acc.finish());
    }
  }
  return out;
}

}  // namespace

VoteTally tally(std::span<const ParsedRecord> records) {
  VoteTally t;
  if (!records.empty()) {
    t.variant_id = records.front().variant_id;
  }
  for (const ParsedRecord& r : records) {
    if (r.variant_id != t.variant_id) {
      throw MixedVariant("tally over mixed variants: '" + t.variant_id + "' and '" + r.variant_id + "'");
    }
    if (std::holds_alternative<Verdict>(r.result)) {
      ++t.n_valid;
      if (std::get<Verdict>(r.result).realistic) {
        ++t.n_realistic;
      }
    } else if (std::holds_alternative<ParseFailure>(r.result)) {
      ++t.n_parse_failures;
    } else {
      ++t.n_provider_failures;
    }
  }
  return t;
}

double rs_of_agreement(double a) noexcept {
  const double centered = 2.0 * a - 1.0;
  return a >= 0.5 ? kRsMax * centered : -kRsMin * centered;
}

VariantScore variant_rs(const VoteTally& t) {
  if (t.n_valid < 1) {
    throw NoValidVotes("variant " + t.variant_id + " has no valid votes");
  }
  const double a = static_cast<double>(t.n_realistic) / static_cast<double>(t.n_valid);
  return VariantScore{t.variant_id, a, rs_of_agreement(a)};
}

double realism_success_rate(std::span<const ParsedRecord> records) {
  long valid = 0;
  long realistic = 0;
  for (const ParsedRecord& r : records) {
    if (r.valid()) {
      ++valid;
      realistic += r.realistic() ? 1 : 0;
    }
  }
  if (valid == 0) {
    throw NoValidVotes("no valid verdicts in run");
  }
  return 100.0 * static_cast<double>(realistic) / static_cast<double>(valid);
}

MetricsReport aggregate(std::span<const ScenarioScore> scores, std::span<const VariantResult> variants) {
  std::map<std::string, const ScenarioScore*> by_id;
  for (const ScenarioScore& s : scores) {
    by_id[s.scenario_id] = &s;
  }

  GroupAccumulator all;
  std::map<std::string, GroupAccumulator> road;
  std::map<std::string, GroupAccumulator> weather;
  std::map<std::string, GroupAccumulator> parameter;

  for (const auto& [id, s] : by_id) {
    for (GroupAccumulator* g : {&all, &road[s->road.value], &weather[std::string(to_string(s->weather))]}) {
      g->members[id] = s->rs;
      g->scenarios.insert(id);
    }
  }

  MetricsReport report;
  for (const VariantResult& v : variants) {
    report.n_parse_failures += v.tally.n_parse_failures;
    report.n_provider_failures += v.tally.n_provider_failures;
    if (!v.score) {
      report.unscored_variants.push_back(v.meta.variant_id);
    }
    auto sc = by_id.find(v.meta.scenario_id);
    if (sc == by_id.end()) {
      continue;
    }
    ++report.n_variants;
    const ScenarioScore& s = *sc->second;
    std::vector<GroupAccumulator*> groups = {&all, &road[s.road.value], &weather[std::string(to_string(s.weather))]};
    if (v.meta.applied) {
      GroupAccumulator& p = parameter[v.meta.applied->parameter];
      if (v.score) {
        p.members[v.meta.variant_id] = v.score->rs_v;
        p.scenarios.insert(v.meta.scenario_id);
      }
      groups.push_back(&p);
    }
    for (GroupAccumulator* g : groups) {
      g->n_valid += v.tally.n_valid;
      g->n_realistic += v.tally.n_realistic;
    }
  }

  report.all = all.finish();
  report.by_road = finish_all(road);
  report.by_weather = finish_all(weather);
  report.by_parameter = finish_all(parameter);
  report.n_scenarios = static_cast<int>(by_id.size());
  report.n_valid_votes = all.n_valid;
  std::sort(report.unscored_variants.begin(), report.unscored_variants.end());
  return report;
}

AnalysisResult analyze_run(std::span<const ScenarioMeta> scenarios, std::span<const VariantMeta> variants,
                           std::span<const ParsedRecord> records) {
  std::map<std::string, std::vector<ParsedRecord>> grouped;
  for (const ParsedRecord& r : records) {
    grouped[r.variant_id].push_back(r);
  }

  AnalysisResult result;
  std::map<std::string, std::map<std::string, double>> per_scenario;
  for (const VariantMeta& meta : variants) {
    VariantResult vr;
    vr.meta = meta;
    auto it = grouped.find(meta.variant_id);
    if (it != grouped.end()) {
      vr.tally = tally(it->second);
    }
    vr.tally.variant_id = meta.variant_id;
    if (vr.tally.n_valid > 0) {
      vr.score = variant_rs(vr.tally);
      per_scenario[meta.scenario_id][meta.variant_id] = vr.score->rs_v;
    }
    result.variants.push_back(std::move(vr));
  }

  std::vector<std::string> unscored;
  for (const ScenarioMeta& s : scenarios) {
    auto it = per_scenario.find(s.scenario_id);
    if (it == per_scenario.end()) {
      unscored.push_back(s.scenario_id);
      continue;
    }
    result.scenarios.push_back(ScenarioScore{s.scenario_id, mean_by_key(it->second), s.road, s.weather});
  }

  result.report = aggregate(result.scenarios, result.variants);
  result.report.unscored_scenarios = std::move(unscored);
  return result;
}

}  // namespace srbench
