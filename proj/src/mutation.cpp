#include "srbench/mutation.hpp"

#include <cmath>
#include <set>

#include "srbench/errors.hpp"
#include "srbench/numfmt.hpp"

namespace srbench {

namespace {

Vec3 ActorState::*field_for(const std::string& name) {
  if (name == "position") {
    return &ActorState::position;
  }
  if (name == "rotation") {
    return &ActorState::rotation;
  }
  if (name == "velocity") {
    return &ActorState::velocity;
  }
  throw UnknownParameter(name);
}

}  // namespace

void validate_seed(double seed) {
  if (!std::isfinite(seed) || seed == 0.0 || std::abs(seed) >= 1.0) {
    throw ConfigError("mutation seed must be finite, nonzero and within (-1, 1); got " +
                      (std::isfinite(seed) ? shortest_repr(seed) : std::string("non-finite")));
  }
}

std::string variant_suffix(const std::optional<MutationSpec>& spec) {
  if (!spec) {
    return "original";
  }
  return "p=" + spec->parameter + ",s=" + shortest_repr(spec->seed);
}

std::string variant_file_stem(const std::string& scenario_id, const std::optional<MutationSpec>& spec) {
  return scenario_id + "__" + variant_suffix(spec);
}

ScenarioVariant make_original(const Scenario& s) {
  return ScenarioVariant{s.id + "/original", VariantKind::original, std::nullopt, s};
}

ScenarioVariant apply_mutation(const Scenario& s, const MutationSpec& spec) {
  Vec3 ActorState::*field = field_for(spec.parameter);
  validate_seed(spec.seed);

  ScenarioVariant v{s.id + "/" + variant_suffix(spec), VariantKind::mutated, spec, s};
  const bool angular = field == &ActorState::rotation;
  for (TimeStep& step : v.scenario.timesteps) {
    for (ActorState& npc : step.npcs) {
      Vec3& target = npc.*field;
      for (double* c : {&target.x, &target.y, &target.z}) {
        *c = mutate_value(*c, spec.seed);
        if (angular) {
          *c = normalize_degrees(*c);
        }
      }
    }
  }
  return v;
}

VariantSet build_variant_set(const Scenario& s, std::span<const MutationSpec> specs) {
  std::set<std::pair<std::string, double>> seen;
  for (const MutationSpec& spec : specs) {
    if (!seen.emplace(spec.parameter, spec.seed).second) {
      throw ConfigError("duplicate mutation spec " + variant_suffix(spec));
    }
  }

  VariantSet set{s.id, {}};
  set.variants.reserve(specs.size() + 1);
  set.variants.push_back(make_original(s));
  for (const MutationSpec& spec : specs) {
    set.variants.push_back(apply_mutation(s, spec));
  }
  return set;
}

std::vector<MutationSpec> cross_specs(std::span<const std::string> parameters, std::span<const double> seeds) {
  std::vector<MutationSpec> out;
  out.reserve(parameters.size() * seeds.size());
  for (const std::string& p : parameters) {
    for (double seed : seeds) {
      out.push_back({p, seed});
    }
  }
  return out;
}

}  // namespace srbench
