#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "srbench/errors.hpp"
#include "srbench/hash.hpp"
#include "srbench/scenario.hpp"

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace srbench {

namespace {

constexpr std::string_view kDeepScenarioExt = ".deepscenario";
constexpr std::string_view kJsonExt = ".json";

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

using Attrs = std::map<std::string, std::string>;

// Splits an element into attributes and child elements, rejecting stray text
// and attributes outside `allowed`.
Attrs read_attrs(const pt::ptree& node, const std::string& where, std::initializer_list<const char*> allowed) {
  Attrs attrs;
  if (!is_blank(node.data())) {
    throw IngestError(where + ": unexpected text content");
  }
  if (auto a = node.get_child_optional("<xmlattr>")) {
    for (const auto& [name, value] : *a) {
      const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* x) { return name == x; });
      if (!ok) {
        throw IngestError(where + ": unsupported attribute '" + name + "'");
      }
      attrs[name] = value.data();
    }
  }
  return attrs;
}

const std::string& require_attr(const Attrs& attrs, const std::string& where, const std::string& name) {
  auto it = attrs.find(name);
  if (it == attrs.end()) {
    throw IngestError(where + ": missing attribute '" + name + "'");
  }
  return it->second;
}

double parse_real(const std::string& token, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw IngestError(where + ": '" + token + "' is not a number");
  }
  if (used != token.size()) {
    throw IngestError(where + ": '" + token + "' is not a number");
  }
  return v;
}

int parse_index(const std::string& token, const std::string& where) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != token.size() || v < 0) {
    throw IngestError(where + ": '" + token + "' is not a non-negative integer");
  }
  return v;
}

Vec3 parse_triple(std::string text, const std::string& where) {
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream in(text);
  std::vector<std::string> tokens;
  for (std::string tok; in >> tok;) {
    tokens.push_back(tok);
  }
  if (tokens.size() != 3) {
    throw IngestError(where + ": expected three components");
  }
  return Vec3{parse_real(tokens[0], where), parse_real(tokens[1], where), parse_real(tokens[2], where)};
}

ActorState read_actor(const pt::ptree& node, const std::string& where) {
  const Attrs attrs = read_attrs(node, where, {"id", "position", "rotation", "velocity"});
  for (const auto& [name, child] : node) {
    if (name != "<xmlattr>" && name != "<xmlcomment>") {
      throw IngestError(where + ": unexpected child element <" + name + ">");
    }
  }
  ActorState a;
  a.id = require_attr(attrs, where, "id");
  a.position = parse_triple(require_attr(attrs, where, "position"), where + "@position");
  a.rotation = parse_triple(require_attr(attrs, where, "rotation"), where + "@rotation");
  a.velocity = parse_triple(require_attr(attrs, where, "velocity"), where + "@velocity");
  return a;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot read " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Scenario parse_deepscenario(std::string_view xml_text, const std::string& fallback_id) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml_text)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw IngestError(std::string("malformed XML: ") + e.what());
  }

  const pt::ptree* root = nullptr;
  for (const auto& [name, child] : tree) {
    if (name == "<xmlcomment>") {
      continue;
    }
    if (name != "scenario" || root != nullptr) {
      throw IngestError("root must be a single <scenario> element, found <" + name + ">");
    }
    root = &child;
  }
  if (root == nullptr) {
    throw IngestError("missing <scenario> root element");
  }

  const Attrs attrs = read_attrs(*root, "scenario", {"id", "road", "weather"});
  Scenario s;
  s.id = attrs.count("id") ? attrs.at("id") : fallback_id;
  s.road.value = require_attr(attrs, "scenario", "road");
  const std::string& weather = require_attr(attrs, "scenario", "weather");
  const auto w = parse_weather(weather);
  if (!w) {
    throw IngestError("scenario: unknown weather '" + weather + "'");
  }
  s.weather = *w;

  for (const auto& [name, child] : *root) {
    if (name == "<xmlattr>" || name == "<xmlcomment>") {
      continue;
    }
    const std::string where = "timestep[" + std::to_string(s.timesteps.size()) + "]";
    if (name != "timestep") {
      throw IngestError("scenario: unexpected element <" + name + ">");
    }
    const Attrs step_attrs = read_attrs(child, where, {"index"});
    TimeStep step;
    step.index = parse_index(require_attr(step_attrs, where, "index"), where + "@index");
    bool have_ego = false;
    for (const auto& [actor_name, actor] : child) {
      if (actor_name == "<xmlattr>" || actor_name == "<xmlcomment>") {
        continue;
      }
      if (actor_name == "ego") {
        if (have_ego) {
          throw IngestError(where + ": more than one <ego>");
        }
        step.ego = read_actor(actor, where + ".ego");
        have_ego = true;
      } else if (actor_name == "npc") {
        step.npcs.push_back(read_actor(actor, where + ".npc[" + std::to_string(step.npcs.size()) + "]"));
      } else {
        throw IngestError(where + ": unexpected element <" + actor_name + ">");
      }
    }
    if (!have_ego) {
      throw IngestError(where + ": missing <ego>");
    }
    s.timesteps.push_back(std::move(step));
  }

  try {
    validate_scenario(s);
  } catch (const SchemaError& e) {
    throw IngestError(e.what());
  }
  return s;
}

IngestResult ingest_source_dataset(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw IoError("dataset directory not readable: " + dir.string());
  }

  std::vector<fs::path> files;
  for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
    if (!it->is_regular_file()) {
      continue;
    }
    const std::string ext = it->path().extension().string();
    if (ext == kJsonExt || ext == kDeepScenarioExt) {
      files.push_back(it->path());
    }
  }
  if (ec) {
    throw IoError("cannot list " + dir.string() + ": " + ec.message());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  IngestResult result;
  Sha256 checksum;
  std::set<std::string> seen_ids;
  for (const fs::path& file : files) {
    std::string bytes;
    try {
      bytes = read_file(file);
    } catch (const IoError& e) {
      result.errors.push_back({file, e.what()});
      continue;
    }
    checksum.update(bytes);
    try {
      Scenario s = file.extension() == kJsonExt ? parse_scenario(bytes)
                                                : parse_deepscenario(bytes, file.stem().string());
      if (!seen_ids.insert(s.id).second) {
        throw IngestError("duplicate scenario id '" + s.id + "'");
      }
      result.dataset.scenarios.push_back(std::move(s));
    } catch (const Error& e) {
      result.errors.push_back({file, e.what()});
    }
  }
  result.dataset.source_checksum = checksum.hex_digest();

  if (result.dataset.scenarios.empty()) {
    std::string msg = "no scenarios found in " + dir.string();
    if (!result.errors.empty()) {
      msg += " (" + std::to_string(result.errors.size()) + " file(s) failed; first: " +
             result.errors.front().file.filename().string() + ": " + result.errors.front().message + ")";
    }
    throw IngestError(msg);
  }
  return result;
}

}  // namespace srbench
