#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "srbench/errors.hpp"
#include "srbench/gateway.hpp"
#include "srbench/hash.hpp"
#include "srbench/numfmt.hpp"

namespace srbench {

using json = nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& text, char sep, std::size_t max_parts) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (parts.size() + 1 < max_parts) {
    const auto pos = text.find(sep, start);
    if (pos == std::string::npos) {
      break;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  parts.push_back(text.substr(start));
  return parts;
}

double parse_fraction(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && v >= 0.0 && v <= 1.0) {
      return v;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(what + " must be a number in [0, 1], got '" + s + "'");
}

int parse_confidence(const std::string& s) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size() && v >= 0 && v <= 10) {
      return v;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("mock confidence must be an integer in [0, 10], got '" + s + "'");
}

std::uint64_t parse_seed(const std::string& s) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used == s.size()) {
      return v;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("mock rng seed must be a non-negative integer, got '" + s + "'");
}

std::string unit_key(std::uint64_t seed, const std::string& prompt_id, int rep) {
  return std::to_string(seed) + '\x1f' + prompt_id + '\x1f' + std::to_string(rep);
}

}  // namespace

std::string contract_reply(bool realistic, int confidence, std::string_view reason) {
  return std::string("Realism: ") + (realistic ? "Realistic" : "Unrealistic") +
         "\nConfidence: " + std::to_string(confidence) + "\nReason: " + std::string(reason) + "\n";
}

MockSpec MockSpec::parse(const std::string& text) {
  const auto parts = split(text, ':', text.rfind("scripted:", 0) == 0 ? 2 : 3);
  MockSpec spec;
  const std::string& kind = parts[0];
  if (kind == "realistic" || kind == "unrealistic") {
    spec.kind = kind == "realistic" ? Kind::always_realistic : Kind::always_unrealistic;
    if (parts.size() > 2) {
      throw ConfigError("too many fields in mock spec '" + text + "'");
    }
    if (parts.size() == 2) {
      spec.confidence = parse_confidence(parts[1]);
    }
  } else if (kind == "bernoulli" || kind == "failing") {
    spec.kind = kind == "bernoulli" ? Kind::bernoulli : Kind::failing;
    if (parts.size() < 2) {
      throw ConfigError("mock spec '" + text + "' needs a probability");
    }
    spec.p = parse_fraction(parts[1], kind + " probability");
    if (parts.size() == 3) {
      spec.rng_seed = parse_seed(parts[2]);
    }
  } else if (kind == "scripted") {
    spec.kind = Kind::scripted;
    if (parts.size() != 2 || parts[1].empty()) {
      throw ConfigError("scripted mock needs a fixture path: scripted:PATH");
    }
    spec.fixture = parts[1];
  } else {
    throw ConfigError("unknown mock kind '" + kind +
                      "' (expected realistic, unrealistic, bernoulli, scripted or failing)");
  }
  return spec;
}

std::string MockSpec::to_string() const {
  switch (kind) {
    case Kind::always_realistic:
      return "realistic:" + std::to_string(confidence);
    case Kind::always_unrealistic:
      return "unrealistic:" + std::to_string(confidence);
    case Kind::bernoulli:
      return "bernoulli:" + shortest_repr(p) + ":" + std::to_string(rng_seed);
    case Kind::failing:
      return "failing:" + shortest_repr(p) + ":" + std::to_string(rng_seed);
    case Kind::scripted:
      return "scripted:" + fixture.string();
  }
  return "realistic:8";
}

MockProvider::MockProvider(MockSpec spec) : spec_(std::move(spec)) {
  if (spec_.kind != MockSpec::Kind::scripted) {
    return;
  }
  std::ifstream in(spec_.fixture, std::ios::binary);
  if (!in) {
    throw FixtureError("cannot read scripted fixture " + spec_.fixture.string());
  }
  try {
    const json doc = json::parse(in);
    if (doc.contains("default")) {
      script_default_ = doc.at("default").get<std::string>();
    }
    for (const json& e : doc.at("responses")) {
      std::string id;
      if (e.contains("prompt_id")) {
        id = e.at("prompt_id").get<std::string>();
      } else {
        id = e.at("variant_id").get<std::string>();
      }
      ScriptEntry entry;
      if (e.contains("failure")) {
        entry.failure = e.at("failure").get<std::string>();
      } else {
        entry.text = e.at("text").get<std::string>();
      }
      script_[id + "#" + std::to_string(e.at("repetition_index").get<int>())] = std::move(entry);
    }
  } catch (const json::exception& e) {
    throw FixtureError("malformed scripted fixture " + spec_.fixture.string() + ": " + e.what());
  }
}

RawResponse MockProvider::evaluate(const EvaluationRequest& req) {
  calls_.fetch_add(1);
  RawResponse out;
  out.prompt_id = req.prompt.prompt_id;
  out.repetition_index = req.repetition_index;
  out.latency_ms = 0;

  switch (spec_.kind) {
    case MockSpec::Kind::always_realistic:
      out.text = contract_reply(true, spec_.confidence, "mock provider always answers realistic");
      break;
    case MockSpec::Kind::always_unrealistic:
      out.text = contract_reply(false, spec_.confidence, "mock provider always answers unrealistic");
      break;
    case MockSpec::Kind::bernoulli: {
      const double u = hash_to_unit(unit_key(spec_.rng_seed, req.prompt.prompt_id, req.repetition_index));
      const bool realistic = u < spec_.p;
      out.text = contract_reply(realistic, 7, "bernoulli mock verdict");
      break;
    }
    case MockSpec::Kind::failing: {
      const double u = hash_to_unit(unit_key(spec_.rng_seed, req.prompt.prompt_id, req.repetition_index));
      if (u < spec_.p) {
        out.outcome = Outcome::provider_failure;
        out.failure_reason = "mock provider failure";
      } else {
        out.text = contract_reply(true, spec_.confidence, "mock provider answered realistic");
      }
      break;
    }
    case MockSpec::Kind::scripted: {
      const std::string suffix = "#" + std::to_string(req.repetition_index);
      auto it = script_.find(req.prompt.prompt_id + suffix);
      if (it == script_.end()) {
        it = script_.find(req.prompt.variant_id + suffix);
      }
      if (it != script_.end()) {
        if (it->second.failure) {
          out.outcome = Outcome::provider_failure;
          out.failure_reason = *it->second.failure;
        } else {
          out.text = it->second.text;
        }
      } else if (script_default_) {
        out.text = *script_default_;
      } else {
        throw FixtureError("scripted fixture has no entry for prompt " + req.prompt.prompt_id + " (variant " +
                           req.prompt.variant_id + ") repetition " + std::to_string(req.repetition_index));
      }
      break;
    }
  }
  return out;
}

std::unique_ptr<MockProvider> make_mock_provider(const MockSpec& spec) { return std::make_unique<MockProvider>(spec); }

}  // namespace srbench
