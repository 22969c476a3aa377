#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srbench/scenario.hpp"

namespace srbench {

/// A recipe x -> x * (1 + seed) applied to one kinematic field of every NPC.
struct MutationSpec {
  std::string parameter;  // "position", "rotation" or "velocity"
  double seed = 0.0;

  friend bool operator==(const MutationSpec&, const MutationSpec&) = default;
};

enum class VariantKind { original, mutated };

struct ScenarioVariant {
  std::string variant_id;
  VariantKind kind = VariantKind::original;
  std::optional<MutationSpec> applied;
  Scenario scenario;

  friend bool operator==(const ScenarioVariant&, const ScenarioVariant&) = default;
};

struct VariantSet {
  std::string base_id;
  std::vector<ScenarioVariant> variants;  // original first

  friend bool operator==(const VariantSet&, const VariantSet&) = default;
};

inline constexpr const char* kMutableFields[] = {"position", "rotation", "velocity"};

inline double mutate_value(double x, double seed) noexcept { return x * (1.0 + seed); }

/// Throws ConfigError unless the seed is finite, nonzero and |seed| < 1.
void validate_seed(double seed);

/// "original" or "p=<parameter>,s=<seed>".
std::string variant_suffix(const std::optional<MutationSpec>& spec);

/// File stem used for a variant's JSON and response files:
/// "<scenario_id>__<variant_suffix>".
std::string variant_file_stem(const std::string& scenario_id, const std::optional<MutationSpec>& spec);

ScenarioVariant make_original(const Scenario& s);

/// Scales the named field of every NPC at every timestep. Ego, ids, ordering
/// and context are untouched; rotations are re-normalized into [0, 360).
/// Throws UnknownParameter for a field name outside kMutableFields and
/// ConfigError for an invalid seed.
ScenarioVariant apply_mutation(const Scenario& s, const MutationSpec& spec);

/// Original first, then one variant per spec in the given order. Duplicate
/// (parameter, seed) pairs raise ConfigError.
VariantSet build_variant_set(const Scenario& s, std::span<const MutationSpec> specs);

/// Cross product parameters x seeds, parameter-major.
std::vector<MutationSpec> cross_specs(std::span<const std::string> parameters, std::span<const double> seeds);

}  // namespace srbench
