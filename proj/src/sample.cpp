#include "srbench/sample.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "srbench/errors.hpp"

namespace srbench {

namespace {

// Platform-independent uniform draws: std::uniform_*_distribution is
// implementation-defined, the mt19937_64 bit stream is not.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}

  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double range(double lo, double hi) { return lo + (hi - lo) * unit(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(rng_() % static_cast<std::uint64_t>(hi - lo + 1)); }

 private:
  std::mt19937_64 rng_;
};

double round2(double v) {
  const double r = std::round(v * 100.0) / 100.0;
  return r == 0.0 ? 0.0 : r;
}

// Ground plane is x/z with y up; heading is the rotation about y.
struct Track {
  double x, z, heading_deg, speed, accel;
};

ActorState state_at(const std::string& id, const Track& t, int step) {
  const double dt = 1.0;
  const double time = step * dt;
  const double rad = t.heading_deg * std::numbers::pi / 180.0;
  const double speed = t.speed + t.accel * time;
  const double dist = t.speed * time + 0.5 * t.accel * time * time;
  ActorState a;
  a.id = id;
  a.position = Vec3{round2(t.x + dist * std::sin(rad)), 0.0, round2(t.z + dist * std::cos(rad))};
  a.rotation = Vec3{0.0, round2(t.heading_deg), 0.0};
  a.velocity = Vec3{round2(speed * std::sin(rad)), 0.0, round2(speed * std::cos(rad))};
  return a;
}

}  // namespace

std::vector<Scenario> generate_sample_scenarios(int count, std::uint64_t rng_seed) {
  if (count < 1) {
    throw ConfigError("sample scenario count must be >= 1");
  }
  Draw draw(rng_seed);
  std::vector<Scenario> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "sample_%03d", i + 1);

    Scenario s;
    s.id = id;
    s.weather = kAllWeathers[i % 4];
    s.road = RoadId{"road" + std::to_string((i / 4) % 4 + 1)};

    const int steps = draw.integer(3, 6);
    const int n_npcs = draw.integer(1, 3);
    // Headings below 300 degrees keep a +/-10% rotation mutation from wrapping.
    const Track ego{draw.range(-50.0, 50.0), draw.range(-50.0, 50.0), draw.range(0.0, 300.0),
                    draw.range(5.0, 15.0), draw.range(-0.15, 0.3)};
    std::vector<Track> npcs;
    for (int n = 0; n < n_npcs; ++n) {
      npcs.push_back(Track{ego.x + draw.range(-30.0, 30.0), ego.z + draw.range(-30.0, 30.0),
                           draw.range(0.0, 300.0), draw.range(3.0, 18.0), draw.range(-0.15, 0.3)});
    }

    for (int t = 0; t < steps; ++t) {
      TimeStep step;
      step.index = t;
      step.ego = state_at("ego", ego, t);
      for (int n = 0; n < n_npcs; ++n) {
        step.npcs.push_back(state_at("npc" + std::to_string(n + 1), npcs[static_cast<std::size_t>(n)], t));
      }
      s.timesteps.push_back(std::move(step));
    }
    validate_scenario(s);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::filesystem::path> generate_sample_dataset(const std::filesystem::path& out_dir, int count,
                                                           std::uint64_t rng_seed) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  }
  std::vector<std::filesystem::path> written;
  for (const Scenario& s : generate_sample_scenarios(count, rng_seed)) {
    const auto path = out_dir / (s.id + ".json");
    std::ofstream out(path, std::ios::binary);
    if (!out) {
      throw IoError("cannot write " + path.string());
    }
    out << serialize_scenario(s);
    written.push_back(path);
  }
  return written;
}

}  // namespace srbench
