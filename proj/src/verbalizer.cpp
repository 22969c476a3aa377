#include "srbench/verbalizer.hpp"

#include <fstream>
#include <sstream>

#include "srbench/errors.hpp"
#include "srbench/hash.hpp"
#include "srbench/numfmt.hpp"

namespace srbench {

namespace {

constexpr int kDecimals = 2;
constexpr std::string_view kBuiltinVersion = "builtin-v1";

std::string render_vec(const Vec3& v) {
  return "(" + fixed_half_away(v.x, kDecimals) + ", " + fixed_half_away(v.y, kDecimals) + ", " +
         fixed_half_away(v.z, kDecimals) + ")";
}

std::string render_actor(std::string_view role, const ActorState& a) {
  return "- " + std::string(role) + " \"" + a.id + "\" is at position " + render_vec(a.position) +
         " m with rotation " + render_vec(a.rotation) + " degrees and velocity " + render_vec(a.velocity) +
         " m/s.\n";
}

std::string substitute(std::string_view body, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(body.size() + 1024);
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '{') {
      const auto close = body.find('}', i);
      if (close != std::string_view::npos) {
        const std::string key(body.substr(i + 1, close - i - 1));
        auto it = values.find(key);
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += body[i++];
  }
  return out;
}

}  // namespace

EnvironmentText resolve_environment(const Scenario& s, const DescriptionTables& tables) {
  auto road = tables.roads.find(s.road);
  if (road == tables.roads.end() || road->second.empty()) {
    throw MissingDescription("no description configured for road '" + s.road.value + "'");
  }
  auto weather = tables.weathers.find(s.weather);
  if (weather == tables.weathers.end() || weather->second.empty()) {
    throw MissingDescription("no description configured for weather '" + std::string(to_string(s.weather)) + "'");
  }
  return EnvironmentText{road->second, weather->second};
}

ScenarioDescription verbalize(const ScenarioVariant& v, const EnvironmentText& env, int max_timesteps) {
  if (env.road_description.empty() || env.weather_description.empty()) {
    throw MissingDescription("empty road or weather description for " + v.variant_id);
  }
  ScenarioDescription d;
  d.variant_id = v.variant_id;
  d.header = "Road: " + env.road_description + "\nWeather: " + env.weather_description + "\n";

  const auto& steps = v.scenario.timesteps;
  const std::size_t shown = std::min(steps.size(), static_cast<std::size_t>(std::max(max_timesteps, 0)));
  for (std::size_t t = 0; t < shown; ++t) {
    const TimeStep& step = steps[t];
    d.timesteps += "Time step " + std::to_string(step.index) + ":\n";
    d.timesteps += render_actor("Ego vehicle", step.ego);
    for (const ActorState& npc : step.npcs) {
      d.timesteps += render_actor("NPC vehicle", npc);
    }
  }
  d.text = d.header + "\n" + d.timesteps;
  return d;
}

PromptTemplate PromptTemplate::builtin() {
  return PromptTemplate{std::string(kBuiltinVersion),
                        std::string(kTaskPreamble) + "\n{road}\n{weather}\n\n{timesteps}\n{answer_contract}"};
}

PromptTemplate PromptTemplate::from_text(std::string_view text) {
  const auto eol = text.find('\n');
  const std::string_view first = text.substr(0, eol);
  constexpr std::string_view kPrefix = "template_version:";
  if (first.substr(0, kPrefix.size()) != kPrefix) {
    throw ConfigError("prompt template must start with 'template_version: <version>'");
  }
  std::string version(first.substr(kPrefix.size()));
  version.erase(0, version.find_first_not_of(" \t"));
  version.erase(version.find_last_not_of(" \t\r") + 1);
  if (version.empty() || version == kBuiltinVersion) {
    throw ConfigError("prompt template override needs its own template_version (not '" +
                      std::string(kBuiltinVersion) + "')");
  }
  PromptTemplate t{version, eol == std::string_view::npos ? std::string{} : std::string(text.substr(eol + 1))};

  for (std::size_t i = t.body.find('{'); i != std::string::npos; i = t.body.find('{', i + 1)) {
    const auto close = t.body.find('}', i);
    if (close == std::string::npos) {
      break;
    }
    const std::string key = t.body.substr(i + 1, close - i - 1);
    if (key != "road" && key != "weather" && key != "timesteps" && key != "answer_contract") {
      throw ConfigError("unknown placeholder {" + key + "} in prompt template");
    }
  }
  for (const char* required : {"{timesteps}", "{answer_contract}"}) {
    if (t.body.find(required) == std::string::npos) {
      throw ConfigError(std::string("prompt template lacks ") + required);
    }
  }
  return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read prompt template " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

PromptInstance build_prompt(const ScenarioDescription& d, const PromptTemplate& tmpl) {
  const auto header_split = d.header.find('\n');
  std::string road_line = d.header.substr(0, header_split);
  std::string weather_line = header_split == std::string::npos ? std::string{} : d.header.substr(header_split + 1);
  if (!weather_line.empty() && weather_line.back() == '\n') {
    weather_line.pop_back();
  }

  PromptInstance p;
  p.variant_id = d.variant_id;
  p.template_version = tmpl.version;
  p.text = substitute(tmpl.body, {{"road", road_line},
                                  {"weather", weather_line},
                                  {"timesteps", d.timesteps},
                                  {"answer_contract", std::string(kAnswerContract)}});
  p.prompt_id = sha256_hex(p.text);
  return p;
}

}  // namespace srbench
