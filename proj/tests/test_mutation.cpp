#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "srbench/errors.hpp"
#include "srbench/mutation.hpp"
#include "srbench/sample.hpp"
#include "test_util.hpp"

using namespace srbench;

namespace {

double field_at(const ActorState& a, const std::string& param, int axis) {
  const Vec3& v = param == "position" ? a.position : param == "rotation" ? a.rotation : a.velocity;
  return axis == 0 ? v.x : axis == 1 ? v.y : v.z;
}

}  // namespace

TEST(MutateValue, WorkedExample) {
  EXPECT_NEAR(mutate_value(10.0, 0.01), 10.1, 1e-12);
  EXPECT_NEAR(mutate_value(10.0, -0.05), 9.5, 1e-12);
  EXPECT_EQ(mutate_value(0.0, 0.1), 0.0);
}

TEST(ValidateSeed, Bounds) {
  EXPECT_NO_THROW(validate_seed(0.01));
  EXPECT_NO_THROW(validate_seed(-0.99));
  EXPECT_THROW(validate_seed(0.0), ConfigError);
  EXPECT_THROW(validate_seed(1.0), ConfigError);
  EXPECT_THROW(validate_seed(-1.0), ConfigError);
  EXPECT_THROW(validate_seed(NAN), ConfigError);
  EXPECT_THROW(validate_seed(INFINITY), ConfigError);
}

TEST(ApplyMutation, ScalesEveryNpcAndLeavesEgoAlone) {
  const auto scenarios = generate_sample_scenarios(8, 42);
  for (const std::string param : {"position", "rotation", "velocity"}) {
    for (const Scenario& s : scenarios) {
      const ScenarioVariant v = apply_mutation(s, {param, 0.05});
      EXPECT_EQ(v.kind, VariantKind::mutated);
      EXPECT_EQ(v.variant_id, s.id + "/p=" + param + ",s=0.05");
      EXPECT_EQ(v.scenario.id, s.id);
      EXPECT_EQ(v.scenario.road, s.road);
      EXPECT_EQ(v.scenario.weather, s.weather);
      ASSERT_EQ(v.scenario.timesteps.size(), s.timesteps.size());
      for (std::size_t t = 0; t < s.timesteps.size(); ++t) {
        const TimeStep& a = s.timesteps[t];
        const TimeStep& b = v.scenario.timesteps[t];
        EXPECT_EQ(a.ego, b.ego);
        EXPECT_EQ(a.index, b.index);
        ASSERT_EQ(a.npcs.size(), b.npcs.size());
        for (std::size_t n = 0; n < a.npcs.size(); ++n) {
          EXPECT_EQ(a.npcs[n].id, b.npcs[n].id);
          for (int axis = 0; axis < 3; ++axis) {
            double expected = field_at(a.npcs[n], param, axis) * 1.05;
            if (param == "rotation") {
              expected = normalize_degrees(expected);
            }
            EXPECT_DOUBLE_EQ(field_at(b.npcs[n], param, axis), expected);
          }
          for (const std::string other : {"position", "rotation", "velocity"}) {
            if (other == param) {
              continue;
            }
            for (int axis = 0; axis < 3; ++axis) {
              EXPECT_EQ(field_at(a.npcs[n], other, axis), field_at(b.npcs[n], other, axis));
            }
          }
        }
      }
    }
  }
}

TEST(ApplyMutation, RotationWrapsIntoRange) {
  Scenario s = generate_sample_scenarios(1, 1)[0];
  for (auto& step : s.timesteps) {
    for (auto& npc : step.npcs) {
      npc.rotation = {0, 350, 10};
    }
  }
  const ScenarioVariant v = apply_mutation(s, {"rotation", 0.1});
  const Vec3 r = v.scenario.timesteps[0].npcs[0].rotation;
  EXPECT_NEAR(r.y, 25.0, 1e-9);
  EXPECT_NEAR(r.z, 11.0, 1e-9);
}

TEST(ApplyMutation, InverseSeedRoundTrip) {
  const auto scenarios = generate_sample_scenarios(8, 42);
  for (double seed : {0.01, -0.01, 0.05, -0.05, 0.1, -0.1}) {
    const double inverse = 1.0 / (1.0 + seed) - 1.0;
    for (const std::string param : {"position", "rotation", "velocity"}) {
      for (const Scenario& s : scenarios) {
        const Scenario back = apply_mutation(apply_mutation(s, {param, seed}).scenario, {param, inverse}).scenario;
        for (std::size_t t = 0; t < s.timesteps.size(); ++t) {
          for (std::size_t n = 0; n < s.timesteps[t].npcs.size(); ++n) {
            for (int axis = 0; axis < 3; ++axis) {
              EXPECT_NEAR(field_at(back.timesteps[t].npcs[n], param, axis),
                          field_at(s.timesteps[t].npcs[n], param, axis), 1e-9);
            }
          }
        }
      }
    }
  }
}

TEST(ApplyMutation, Errors) {
  const Scenario s = generate_sample_scenarios(1, 1)[0];
  EXPECT_THROW(apply_mutation(s, {"acceleration", 0.1}), UnknownParameter);
  EXPECT_THROW(apply_mutation(s, {"position", 0.0}), ConfigError);
}

TEST(VariantSet, OriginalFirstThenSpecsInOrder) {
  const Scenario s = generate_sample_scenarios(1, 1)[0];
  const std::vector<std::string> params = {"velocity", "position"};
  const std::vector<double> seeds = {0.1, -0.02};
  const auto specs = cross_specs(params, seeds);
  ASSERT_EQ(specs.size(), 4u);
  EXPECT_EQ(specs[1], (MutationSpec{"velocity", -0.02}));
  EXPECT_EQ(specs[2], (MutationSpec{"position", 0.1}));

  const VariantSet set = build_variant_set(s, specs);
  EXPECT_EQ(set.base_id, s.id);
  ASSERT_EQ(set.variants.size(), 5u);
  EXPECT_EQ(set.variants[0].variant_id, s.id + "/original");
  EXPECT_EQ(set.variants[0].scenario, s);
  EXPECT_EQ(set.variants[2].variant_id, s.id + "/p=velocity,s=-0.02");
  EXPECT_EQ(variant_file_stem(s.id, specs[2]), s.id + "__p=position,s=0.1");
  EXPECT_EQ(variant_file_stem(s.id, std::nullopt), s.id + "__original");
}

TEST(VariantSet, DuplicateSpecsRejected) {
  const Scenario s = generate_sample_scenarios(1, 1)[0];
  const std::vector<MutationSpec> specs = {{"position", 0.01}, {"position", 0.01}};
  EXPECT_THROW(build_variant_set(s, specs), ConfigError);
}
