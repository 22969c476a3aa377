#include "srbench/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "srbench/errors.hpp"
#include "srbench/mutation.hpp"
#include "srbench/numfmt.hpp"

namespace srbench {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      default:
        out += c;
    }
  }
  out += '"';
  return out;
}

// Splits a raw value into items at top-level commas, unquoting each.
std::vector<std::string> split_items(const std::string& key, std::string_view raw) {
  std::vector<std::string> items;
  std::string current;
  bool in_quotes = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (in_quotes) {
      if (c == '\\' && i + 1 < raw.size()) {
        const char n = raw[++i];
        current += n == 'n' ? '\n' : n;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        current += c;
      }
    } else if (c == '"') {
      if (!trim(current).empty()) {
        throw ConfigError(key + ": stray text before quoted value");
      }
      current.clear();
      in_quotes = true;
      was_quoted = true;
    } else if (c == ',') {
      items.push_back(was_quoted ? current : trim(current));
      current.clear();
      was_quoted = false;
    } else if (was_quoted) {
      if (c != ' ' && c != '\t' && c != '\r') {
        throw ConfigError(key + ": stray text after quoted value");
      }
    } else {
      current += c;
    }
  }
  if (in_quotes) {
    throw ConfigError(key + ": unterminated quoted value");
  }
  items.push_back(was_quoted ? current : trim(current));
  return items;
}

std::string single(const std::string& key, std::string_view raw) {
  auto items = split_items(key, raw);
  if (items.size() != 1) {
    throw ConfigError(key + ": expected a single value");
  }
  return items.front();
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used == v.size()) {
      return out;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected an integer, got '" + v + "'");
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size() && std::isfinite(out)) {
      return out;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") {
    return true;
  }
  if (v == "false" || v == "no" || v == "0") {
    return false;
  }
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig cfg;
  cfg.descriptions.roads = {
      {RoadId{"road1"}, "a straight two-lane urban road with lane markings on both sides"},
      {RoadId{"road2"}, "a four-way signalized intersection in a city centre"},
      {RoadId{"road3"}, "a curved multi-lane arterial road with a central divider"},
      {RoadId{"road4"}, "a T-junction where a side street merges into a main road"},
  };
  cfg.descriptions.weathers = {
      {Weather::rain_day, "rainy daytime conditions with a wet road surface"},
      {Weather::rain_night, "rainy night with a wet road surface and limited visibility"},
      {Weather::sunny_day, "sunny daytime conditions with a dry road surface"},
      {Weather::clear_night, "clear night with a dry road surface and street lighting"},
  };
  return cfg;
}

void RunConfig::validate() const {
  if (dataset_path.empty()) {
    throw ConfigError("dataset_path must be set");
  }
  if (output_dir.empty()) {
    throw ConfigError("output_dir must be set");
  }
  if (time_steps < 1) {
    throw ConfigError("time_steps must be >= 1");
  }
  if (scenario_number < 1) {
    throw ConfigError("scenario_number must be >= 1");
  }
  if (repetitions < 1) {
    throw ConfigError("repetitions must be >= 1");
  }
  if (!(failure_threshold >= 0.0 && failure_threshold <= 1.0)) {
    throw ConfigError("failure_threshold must be within [0, 1]");
  }
  if (chart_format != "svg") {
    throw ConfigError("chart_format '" + chart_format + "' is not supported (only svg)");
  }
  for (const std::string& p : parameters) {
    const bool known = std::any_of(std::begin(kMutableFields), std::end(kMutableFields),
                                   [&](const char* f) { return p == f; });
    if (!known) {
      throw ConfigError(UnknownParameter(p).what());
    }
  }
  std::set<std::string> seen_params;
  for (const std::string& p : parameters) {
    if (!seen_params.insert(p).second) {
      throw ConfigError("parameter '" + p + "' listed twice");
    }
  }
  std::set<double> seen_seeds;
  for (double s : mutation_seeds) {
    validate_seed(s);
    if (!seen_seeds.insert(s).second) {
      throw ConfigError("mutation seed " + shortest_repr(s) + " listed twice");
    }
  }
  for (const auto& [road, text] : descriptions.roads) {
    if (road.value.empty() || text.empty()) {
      throw ConfigError("road descriptions need a nonempty key and text");
    }
  }
  for (const auto& [w, text] : descriptions.weathers) {
    if (text.empty()) {
      throw ConfigError("weather." + std::string(to_string(w)) + " description is empty");
    }
  }
  if (!mock) {
    llm.validate();
  }
}

std::string RunConfig::model_label() const { return mock ? "mock/" + mock->to_string() : llm.model_id; }

RunConfig parse_config(std::string_view text) {
  RunConfig cfg = RunConfig::defaults();
  bool roads_cleared = false;
  bool weathers_cleared = false;
  std::set<std::string> seen;

  using Setter = std::function<void(const std::string&, std::string_view)>;
  const std::map<std::string, Setter> setters = {
      {"dataset_path", [&](const std::string& k, std::string_view v) { cfg.dataset_path = single(k, v); }},
      {"output_dir", [&](const std::string& k, std::string_view v) { cfg.output_dir = single(k, v); }},
      {"cache_path", [&](const std::string& k, std::string_view v) { cfg.cache_path = single(k, v); }},
      {"prompt_template", [&](const std::string& k, std::string_view v) { cfg.prompt_template = single(k, v); }},
      {"time_steps", [&](const std::string& k, std::string_view v) { cfg.time_steps = to_int(k, single(k, v)); }},
      {"parameters",
       [&](const std::string& k, std::string_view v) {
         cfg.parameters.clear();
         if (!trim(v).empty()) {
           cfg.parameters = split_items(k, v);
         }
       }},
      {"mutation_seeds",
       [&](const std::string& k, std::string_view v) {
         cfg.mutation_seeds.clear();
         if (!trim(v).empty()) {
           for (const std::string& item : split_items(k, v)) {
             cfg.mutation_seeds.push_back(to_real(k, item));
           }
         }
       }},
      {"scenario_number",
       [&](const std::string& k, std::string_view v) { cfg.scenario_number = to_int(k, single(k, v)); }},
      {"repetitions", [&](const std::string& k, std::string_view v) { cfg.repetitions = to_int(k, single(k, v)); }},
      {"failure_threshold",
       [&](const std::string& k, std::string_view v) { cfg.failure_threshold = to_real(k, single(k, v)); }},
      {"charts", [&](const std::string& k, std::string_view v) { cfg.charts = to_bool(k, single(k, v)); }},
      {"chart_format", [&](const std::string& k, std::string_view v) { cfg.chart_format = single(k, v); }},
      {"force_overwrite",
       [&](const std::string& k, std::string_view v) { cfg.force_overwrite = to_bool(k, single(k, v)); }},
      {"llm.endpoint_url", [&](const std::string& k, std::string_view v) { cfg.llm.endpoint_url = single(k, v); }},
      {"llm.model_id", [&](const std::string& k, std::string_view v) { cfg.llm.model_id = single(k, v); }},
      {"llm.temperature",
       [&](const std::string& k, std::string_view v) { cfg.llm.temperature = to_real(k, single(k, v)); }},
      {"llm.max_tokens",
       [&](const std::string& k, std::string_view v) { cfg.llm.max_tokens = to_int(k, single(k, v)); }},
      {"llm.api_key_env", [&](const std::string& k, std::string_view v) { cfg.llm.api_key_env = single(k, v); }},
      {"llm.max_in_flight",
       [&](const std::string& k, std::string_view v) { cfg.llm.max_in_flight = to_int(k, single(k, v)); }},
      {"llm.max_retries",
       [&](const std::string& k, std::string_view v) { cfg.llm.max_retries = to_int(k, single(k, v)); }},
      {"llm.timeout_s",
       [&](const std::string& k, std::string_view v) { cfg.llm.timeout_s = to_real(k, single(k, v)); }},
      {"llm.mock",
       [&](const std::string& k, std::string_view v) {
         const std::string s = single(k, v);
         if (s.empty()) {
           cfg.mock.reset();
         } else {
           cfg.mock = MockSpec::parse(s);
         }
       }},
  };

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    const std::string line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string_view value = std::string_view(line).substr(eq + 1);
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }

    if (key.rfind("road.", 0) == 0) {
      if (!roads_cleared) {
        cfg.descriptions.roads.clear();
        roads_cleared = true;
      }
      cfg.descriptions.roads[RoadId{key.substr(5)}] = single(key, value);
    } else if (key.rfind("weather.", 0) == 0) {
      const auto w = parse_weather(key.substr(8));
      if (!w) {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown weather key '" + key + "'");
      }
      if (!weathers_cleared) {
        cfg.descriptions.weathers.clear();
        weathers_cleared = true;
      }
      cfg.descriptions.weathers[*w] = single(key, value);
    } else if (auto it = setters.find(key); it != setters.end()) {
      it->second(key, value);
    } else {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read config file " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const RunConfig& cfg) {
  std::ostringstream out;
  auto join = [](const auto& items, auto render) {
    std::string s;
    for (const auto& item : items) {
      if (!s.empty()) {
        s += ", ";
      }
      s += render(item);
    }
    return s;
  };

  out << "# Scenario realism benchmark run configuration\n\n";
  out << "# File configuration\n";
  out << "dataset_path = " << quote(cfg.dataset_path.string()) << '\n';
  out << "output_dir = " << quote(cfg.output_dir.string()) << '\n';
  out << "cache_path = " << quote(cfg.cache_path.string()) << '\n';
  out << "prompt_template = " << quote(cfg.prompt_template.string()) << "\n\n";

  out << "# Road descriptions (road.<id>)\n";
  for (const auto& [road, text] : cfg.descriptions.roads) {
    out << "road." << road.value << " = " << quote(text) << '\n';
  }
  out << "\n# Weather descriptions (weather.<rain_day|rain_night|sunny_day|clear_night>)\n";
  for (const auto& [w, text] : cfg.descriptions.weathers) {
    out << "weather." << to_string(w) << " = " << quote(text) << '\n';
  }

  out << "\n# Scenario selection and mutation\n";
  out << "time_steps = " << cfg.time_steps << '\n';
  out << "scenario_number = " << cfg.scenario_number << '\n';
  out << "parameters = " << join(cfg.parameters, [&](const std::string& p) { return quote(p); }) << '\n';
  out << "mutation_seeds = " << join(cfg.mutation_seeds, [](double s) { return shortest_repr(s); }) << "\n\n";

  out << "# LLM evaluation\n";
  out << "repetitions = " << cfg.repetitions << '\n';
  out << "failure_threshold = " << shortest_repr(cfg.failure_threshold) << '\n';
  out << "llm.endpoint_url = " << quote(cfg.llm.endpoint_url) << '\n';
  out << "llm.model_id = " << quote(cfg.llm.model_id) << '\n';
  out << "llm.temperature = " << shortest_repr(cfg.llm.temperature) << '\n';
  out << "llm.max_tokens = " << cfg.llm.max_tokens << '\n';
  out << "llm.api_key_env = " << quote(cfg.llm.api_key_env) << '\n';
  out << "llm.max_in_flight = " << cfg.llm.max_in_flight << '\n';
  out << "llm.max_retries = " << cfg.llm.max_retries << '\n';
  out << "llm.timeout_s = " << shortest_repr(cfg.llm.timeout_s) << '\n';
  out << "# realistic[:CONF] | unrealistic[:CONF] | bernoulli:P[:SEED] | scripted:PATH | failing:FRACTION[:SEED]\n";
  out << "llm.mock = " << quote(cfg.mock ? cfg.mock->to_string() : std::string{}) << "\n\n";

  out << "# Reporting\n";
  out << "charts = " << (cfg.charts ? "true" : "false") << '\n';
  out << "chart_format = " << quote(cfg.chart_format) << '\n';
  out << "force_overwrite = " << (cfg.force_overwrite ? "true" : "false") << '\n';
  return out.str();
}

void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write config file " + path.string());
  }
  out << format_config(cfg);
}

}  // namespace srbench
