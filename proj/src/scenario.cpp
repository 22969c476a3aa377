#include "srbench/scenario.hpp"

#include <cmath>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "srbench/errors.hpp"
#include "srbench/numfmt.hpp"

namespace srbench {

using json = nlohmann::json;

std::string_view to_string(Weather w) noexcept {
  switch (w) {
    case Weather::rain_day:
      return "rain_day";
    case Weather::rain_night:
      return "rain_night";
    case Weather::sunny_day:
      return "sunny_day";
    case Weather::clear_night:
      return "clear_night";
  }
  return "sunny_day";
}

std::optional<Weather> parse_weather(std::string_view text) noexcept {
  for (Weather w : kAllWeathers) {
    if (to_string(w) == text) {
      return w;
    }
  }
  return std::nullopt;
}

double normalize_degrees(double degrees) noexcept {
  double r = std::fmod(degrees, 360.0);
  if (r < 0.0) {
    r += 360.0;
  }
  // fmod of a tiny negative can land exactly on 360 after the shift.
  if (r >= 360.0 || r == 0.0) {
    r = 0.0;
  }
  return r;
}

namespace {

std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

void check_vec(const Vec3& v, const std::string& path) {
  if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) {
    throw SchemaError(path, "non-finite number");
  }
}

void check_actor(ActorState& a, const std::string& path) {
  if (a.id.empty()) {
    throw SchemaError(path + ".id", "actor id must be nonempty");
  }
  check_vec(a.position, path + ".position");
  check_vec(a.rotation, path + ".rotation");
  check_vec(a.velocity, path + ".velocity");
  a.rotation.x = normalize_degrees(a.rotation.x);
  a.rotation.y = normalize_degrees(a.rotation.y);
  a.rotation.z = normalize_degrees(a.rotation.z);
}

// --- strict JSON reading -----------------------------------------------------

void expect_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) {
    throw SchemaError(path, "expected object");
  }
  for (const char* k : keys) {
    if (!obj.contains(k)) {
      throw SchemaError(path.empty() ? std::string(k) : path + "." + k, "missing field");
    }
  }
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (const char* allowed : keys) {
      known = known || k == allowed;
    }
    if (!known) {
      throw SchemaError(path.empty() ? k : path + "." + k, "unknown field");
    }
  }
}

std::string read_string(const json& j, const std::string& path) {
  if (!j.is_string()) {
    throw SchemaError(path, "expected string");
  }
  return j.get<std::string>();
}

double read_number(const json& j, const std::string& path) {
  if (!j.is_number()) {
    throw SchemaError(path, "expected number");
  }
  const double v = j.get<double>();
  if (!std::isfinite(v)) {
    throw SchemaError(path, "non-finite number");
  }
  return v;
}

Vec3 read_vec(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) {
    throw SchemaError(path, "expected array of 3 numbers");
  }
  return Vec3{read_number(j[0], index_path(path, 0)), read_number(j[1], index_path(path, 1)),
              read_number(j[2], index_path(path, 2))};
}

ActorState read_actor(const json& j, const std::string& path) {
  expect_keys(j, path, {"id", "position", "rotation", "velocity"});
  ActorState a;
  a.id = read_string(j["id"], path + ".id");
  a.position = read_vec(j["position"], path + ".position");
  a.rotation = read_vec(j["rotation"], path + ".rotation");
  a.velocity = read_vec(j["velocity"], path + ".velocity");
  return a;
}

// --- canonical writing -------------------------------------------------------

void write_vec(std::string& out, const Vec3& v) {
  out += '[';
  out += shortest_repr(v.x);
  out += ", ";
  out += shortest_repr(v.y);
  out += ", ";
  out += shortest_repr(v.z);
  out += ']';
}

void write_actor(std::string& out, const ActorState& a) {
  out += "{\"id\": ";
  out += json(a.id).dump();
  out += ", \"position\": ";
  write_vec(out, a.position);
  out += ", \"rotation\": ";
  write_vec(out, a.rotation);
  out += ", \"velocity\": ";
  write_vec(out, a.velocity);
  out += '}';
}

}  // namespace

void validate_scenario(Scenario& s) {
  if (s.id.empty()) {
    throw SchemaError("id", "scenario id must be nonempty");
  }
  if (s.road.value.empty()) {
    throw SchemaError("road", "road key must be nonempty");
  }
  if (s.timesteps.empty()) {
    throw SchemaError("timesteps", "at least one timestep required");
  }

  std::set<std::string> first_ids;
  for (std::size_t t = 0; t < s.timesteps.size(); ++t) {
    TimeStep& step = s.timesteps[t];
    const std::string path = index_path("timesteps", t);
    if (step.index != static_cast<int>(t)) {
      throw SchemaError(path + ".index", "expected index " + std::to_string(t) + ", got " + std::to_string(step.index));
    }
    check_actor(step.ego, path + ".ego");

    std::set<std::string> ids;
    for (std::size_t n = 0; n < step.npcs.size(); ++n) {
      const std::string npc_path = index_path(path + ".npcs", n);
      check_actor(step.npcs[n], npc_path);
      if (step.npcs[n].id == step.ego.id) {
        throw SchemaError(npc_path + ".id", "NPC id '" + step.ego.id + "' collides with the ego id");
      }
      if (!ids.insert(step.npcs[n].id).second) {
        throw SchemaError(npc_path + ".id", "duplicate NPC id '" + step.npcs[n].id + "'");
      }
    }
    if (t == 0) {
      first_ids = std::move(ids);
    } else if (ids != first_ids) {
      throw SchemaError(path + ".npcs", "NPC id set differs from timesteps[0]");
    } else if (step.ego.id != s.timesteps[0].ego.id) {
      throw SchemaError(path + ".ego.id", "ego id differs from timesteps[0]");
    }
  }
}

Scenario parse_scenario(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }

  expect_keys(doc, "", {"id", "road", "weather", "timesteps"});
  Scenario s;
  s.id = read_string(doc["id"], "id");
  s.road.value = read_string(doc["road"], "road");
  const std::string weather = read_string(doc["weather"], "weather");
  const auto w = parse_weather(weather);
  if (!w) {
    throw SchemaError("weather", "unknown weather '" + weather + "'");
  }
  s.weather = *w;

  const json& steps = doc["timesteps"];
  if (!steps.is_array()) {
    throw SchemaError("timesteps", "expected array");
  }
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const std::string path = index_path("timesteps", t);
    const json& js = steps[t];
    expect_keys(js, path, {"index", "ego", "npcs"});
    if (!js["index"].is_number_integer()) {
      throw SchemaError(path + ".index", "expected integer");
    }
    TimeStep step;
    step.index = js["index"].get<int>();
    step.ego = read_actor(js["ego"], path + ".ego");
    const json& npcs = js["npcs"];
    if (!npcs.is_array()) {
      throw SchemaError(path + ".npcs", "expected array");
    }
    for (std::size_t n = 0; n < npcs.size(); ++n) {
      step.npcs.push_back(read_actor(npcs[n], index_path(path + ".npcs", n)));
    }
    s.timesteps.push_back(std::move(step));
  }

  validate_scenario(s);
  return s;
}

std::string serialize_scenario(const Scenario& s) {
  std::string out;
  out += "{\n  \"id\": ";
  out += json(s.id).dump();
  out += ",\n  \"road\": ";
  out += json(s.road.value).dump();
  out += ",\n  \"weather\": \"";
  out += to_string(s.weather);
  out += "\",\n  \"timesteps\": [";
  for (std::size_t t = 0; t < s.timesteps.size(); ++t) {
    const TimeStep& step = s.timesteps[t];
    out += t == 0 ? "\n" : ",\n";
    out += "    {\n      \"index\": ";
    out += std::to_string(step.index);
    out += ",\n      \"ego\": ";
    write_actor(out, step.ego);
    out += ",\n      \"npcs\": [";
    for (std::size_t n = 0; n < step.npcs.size(); ++n) {
      out += n == 0 ? "\n        " : ",\n        ";
      write_actor(out, step.npcs[n]);
    }
    out += step.npcs.empty() ? "]" : "\n      ]";
    out += "\n    }";
  }
  out += s.timesteps.empty() ? "]" : "\n  ]";
  out += "\n}\n";
  return out;
}

ScenarioDataset take_first_n(const ScenarioDataset& ds, std::size_t n) {
  ScenarioDataset out;
  out.source_checksum = ds.source_checksum;
  const std::size_t count = std::min(n, ds.scenarios.size());
  out.scenarios.assign(ds.scenarios.begin(), ds.scenarios.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

}  // namespace srbench
