#include <gtest/gtest.h>

#include <algorithm>

#include "gustrl/actuator.hpp"
#include "gustrl/config.hpp"
#include "gustrl/error.hpp"
#include "gustrl/seed.hpp"

using namespace gustrl;
using nlohmann::json;

namespace {

std::vector<std::string> problems_of(const json& doc, const std::vector<std::string>& overrides) {
  try {
    resolve_run_config(std::nullopt, std::nullopt, doc, overrides);
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
  return std::any_of(problems.begin(), problems.end(),
                     [&](const std::string& p) { return p.find(needle) != std::string::npos; });
}

}  // namespace

TEST(Config, DefaultsMatchFlightTable) {
  const auto cfg = resolve_run_config(FlightCondition::MedLift, TapConfig::One, json{}, {});
  EXPECT_EQ(cfg.plant.flight.name, FlightCondition::MedLift);
  EXPECT_EQ(cfg.plant.taps, TapConfig::One);
  EXPECT_EQ(cfg.plant.flight.baseline_lift_n, 2.5);
  EXPECT_DOUBLE_EQ(cfg.plant.actuator.camber_lift_gain_n, calibrated_camber_gain(cfg.plant.flight));
  EXPECT_EQ(cfg.actor_spec().input_channels, 2);
  EXPECT_EQ(cfg.actor_spec().outputs, 3);
}

TEST(Config, LaterSourcesWin) {
  const json file = {{"condition", "low-lift"}, {"ppo", {{"learning_rate", 1e-4}, {"epochs", 3}}}};
  const auto from_file = resolve_run_config(std::nullopt, std::nullopt, file, {});
  EXPECT_EQ(from_file.plant.flight.name, FlightCondition::LowLift);
  EXPECT_EQ(from_file.ppo.learning_rate, 1e-4);

  const auto overridden = resolve_run_config(FlightCondition::HighLift, std::nullopt, file, {"ppo.epochs=5"});
  EXPECT_EQ(overridden.plant.flight.name, FlightCondition::HighLift);  // explicit argument beats the file
  EXPECT_EQ(overridden.ppo.epochs, 5);
  EXPECT_EQ(overridden.ppo.learning_rate, 1e-4);
}

TEST(Config, PinnedCalibrationSurvives) {
  const auto pinned = resolve_run_config(std::nullopt, std::nullopt, json{}, {"actuator.camber_lift_gain_n=0"});
  EXPECT_EQ(pinned.plant.actuator.camber_lift_gain_n, 0.0);
  // A resolved snapshot reloads to the same configuration.
  EXPECT_EQ(config_hash(run_config_from_json(to_json(pinned))), config_hash(pinned));
}

TEST(Config, UnknownKeysRejected) {
  const auto p = problems_of(json{{"ppo", {{"learnin_rate", 1.0}}}, {"bogus", 1}}, {});
  EXPECT_TRUE(mentions(p, "ppo.learnin_rate: unknown key"));
  EXPECT_TRUE(mentions(p, "bogus: unknown key"));
}

TEST(Config, ReportsEveryProblemAtOnce) {
  const auto p = problems_of(json{}, {"ppo.gamma=1.5", "ppo.epochs=abc", "training.episodes=-1", "nonsense"});
  EXPECT_GE(p.size(), 3u);
  EXPECT_TRUE(mentions(p, "nonsense"));
  EXPECT_TRUE(mentions(p, "epochs"));
}

TEST(Config, RangeChecksAfterMerge) {
  const auto p = problems_of(json{}, {"ppo.gamma=1.5", "training.episodes=-1"});
  EXPECT_TRUE(mentions(p, "gamma"));
  EXPECT_TRUE(mentions(p, "training.episodes"));
}

TEST(Config, BadConditionAndTaps) {
  EXPECT_TRUE(mentions(problems_of(json{{"condition", "NoLift"}}, {}), "NoLift"));
  EXPECT_FALSE(problems_of(json{{"taps", 2}}, {}).empty());
  EXPECT_THROW(resolve_run_config(std::nullopt, std::nullopt, json::array(), {}), ConfigError);
}

TEST(Config, HashTracksContent) {
  const auto a = resolve_run_config(FlightCondition::HighLift, TapConfig::Six, json{}, {});
  const auto b = resolve_run_config(FlightCondition::HighLift, TapConfig::Six, json{}, {});
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 64u);
  const auto c = resolve_run_config(FlightCondition::HighLift, TapConfig::Six, json{}, {"sensors.noise_sigma=0"});
  EXPECT_NE(config_hash(a), config_hash(c));
}

TEST(Seeds, DerivationIsPureAndSpreads) {
  EXPECT_EQ(derive_seed(1, "train/HighLift/t6", 0), derive_seed(1, "train/HighLift/t6", 0));
  EXPECT_NE(derive_seed(1, "train/HighLift/t6", 0), derive_seed(1, "train/HighLift/t6", 1));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(2, "a"));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
}

TEST(Seeds, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
