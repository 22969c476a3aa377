#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace srbench {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

struct ActorState {
  std::string id;
  Vec3 position;  // m
  Vec3 rotation;  // degrees, each component in [0, 360)
  Vec3 velocity;  // m/s

  friend bool operator==(const ActorState&, const ActorState&) = default;
};

struct TimeStep {
  int index = 0;
  ActorState ego;
  std::vector<ActorState> npcs;

  friend bool operator==(const TimeStep&, const TimeStep&) = default;
};

/// Road grouping key, e.g. "road1". Resolved against the run configuration's
/// description table at prompt time.
struct RoadId {
  std::string value;

  friend auto operator<=>(const RoadId&, const RoadId&) = default;
};

enum class Weather { rain_day, rain_night, sunny_day, clear_night };

inline constexpr Weather kAllWeathers[] = {Weather::rain_day, Weather::rain_night,
                                           Weather::sunny_day, Weather::clear_night};

std::string_view to_string(Weather w) noexcept;
std::optional<Weather> parse_weather(std::string_view text) noexcept;

struct Scenario {
  std::string id;
  RoadId road;
  Weather weather = Weather::sunny_day;
  std::vector<TimeStep> timesteps;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct ScenarioDataset {
  std::vector<Scenario> scenarios;
  std::string source_checksum;  // sha256 hex of the ingested bytes

  friend bool operator==(const ScenarioDataset&, const ScenarioDataset&) = default;
};

/// Maps an angle in degrees into [0, 360).
double normalize_degrees(double degrees) noexcept;

/// Checks every invariant of `s` and normalizes rotations in place.
/// Throws SchemaError naming the JSON path of the first violation.
void validate_scenario(Scenario& s);

/// Strict parse of a canonical scenario document. Unknown or missing fields,
/// wrong types, empty timesteps, inconsistent NPC id sets and non-finite
/// numbers raise SchemaError.
Scenario parse_scenario(std::string_view json_text);

/// Canonical encoding: fixed key order, stored array order, shortest
/// round-trip reals, two-space indentation, trailing newline.
std::string serialize_scenario(const Scenario& s);

struct FileError {
  std::filesystem::path file;
  std::string message;
};

struct IngestResult {
  ScenarioDataset dataset;
  std::vector<FileError> errors;
};

/// Parses one .deepscenario XML document (subset grammar, see
/// docs/deepscenario_subset.md). `fallback_id` is used when the root element
/// carries no id attribute.
Scenario parse_deepscenario(std::string_view xml_text, const std::string& fallback_id);

/// Loads every *.json and *.deepscenario file in `dir`, sorted by file name.
/// Per-file failures are collected in IngestResult::errors; IngestError is
/// thrown when nothing ingests, IoError when the directory is unreadable.
IngestResult ingest_source_dataset(const std::filesystem::path& dir);

ScenarioDataset take_first_n(const ScenarioDataset& ds, std::size_t n);

}  // namespace srbench
