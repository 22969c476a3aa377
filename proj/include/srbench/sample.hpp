#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "srbench/scenario.hpp"

namespace srbench {

/// Builds `count` synthetic scenarios. Scenario i gets weather i % 4 and
/// road (i / 4) % 4 + 1, 3-6 timesteps one second apart, one ego and 1-3
/// NPCs moving smoothly along their heading. Headings stay within [0, 300)
/// degrees. Identical (count, rng_seed) give identical scenarios.
std::vector<Scenario> generate_sample_scenarios(int count, std::uint64_t rng_seed);

/// Writes generate_sample_scenarios() as canonical JSON files
/// "<id>.json" into `out_dir`, returning the written paths.
std::vector<std::filesystem::path> generate_sample_dataset(const std::filesystem::path& out_dir, int count,
                                                           std::uint64_t rng_seed);

}  // namespace srbench
