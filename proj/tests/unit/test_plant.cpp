#include <gtest/gtest.h>

#include <cmath>

#include "gustrl/error.hpp"
#include "gustrl/plant.hpp"

using namespace gustrl;

namespace {

/// Lift after holding `deflection` unactuated long enough for wake and actuator to settle.
double settled_lift(FlightCondition condition, double deflection) {
  const auto cfg = PlantConfig::defaults(condition, TapConfig::Six).noiseless();
  GustPlant plant(cfg, 1);
  plant.reset(GustSchedule::training_hold(deflection, cfg.flight));
  double lift = 0.0;
  for (int i = 0; i < 40; ++i) lift = plant.step(cfg.flight.zero_action_index()).lift_n;
  return lift;
}

}  // namespace

TEST(GustLiftMap, PassesThroughOriginAndAnchors) {
  for (auto name : kAllFlightConditions) {
    const auto flight = builtin_flight_condition(name);
    EXPECT_EQ(gust_lift_map(0.0, flight), 0.0);
    for (const auto& a : flight.delta_lift_anchors) EXPECT_DOUBLE_EQ(gust_lift_map(a.deflection_deg, flight), a.delta_lift_n);
  }
}

TEST(GustLiftMap, InterpolatesAndExtrapolatesLinearly) {
  const auto flight = builtin_flight_condition(FlightCondition::HighLift);
  EXPECT_NEAR(gust_lift_map(8.75, flight), 0.095, 1e-15);
  EXPECT_NEAR(gust_lift_map(3.75, flight), 0.045, 1e-15);
  EXPECT_NEAR(gust_lift_map(13.5, flight), 0.14 + 0.04 / 2.5, 1e-15);
  EXPECT_NEAR(gust_lift_map(-13.5, flight), -0.17 - 0.02 / 2.5, 1e-15);
  EXPECT_THROW(gust_lift_map(14.0, flight), std::out_of_range);
}

TEST(Plant, UnactuatedNoiselessReproducesAnchors) {
  for (auto name : kAllFlightConditions) {
    const auto flight = builtin_flight_condition(name);
    for (const auto& a : flight.delta_lift_anchors)
      EXPECT_NEAR(settled_lift(name, a.deflection_deg) - flight.baseline_lift_n, a.delta_lift_n, 1e-12)
          << to_string(name) << " " << a.deflection_deg;
    EXPECT_EQ(settled_lift(name, 0.0), flight.baseline_lift_n);
  }
}

TEST(Plant, TapThreeDownwardSensitivityRatio) {
  const auto cfg = PlantConfig::defaults(FlightCondition::HighLift, TapConfig::Six).noiseless();
  const double d = 10.0;
  auto response = [&](double deflection) {
    PlantState s;
    s.wake_deflection_at_wing_deg = deflection;
    PlantState neutral;
    const auto p = raw_tap_pressures(s, cfg);
    const auto p0 = raw_tap_pressures(neutral, cfg);
    return (p[2] - p0[2]) / gust_lift_map(deflection, cfg.flight);
  };
  EXPECT_NEAR(response(-d) / response(d), 0.167, 1e-6);
}

TEST(Plant, SensitivityProfileValidation) {
  TapSensitivityProfile p;
  EXPECT_NO_THROW(p.validate());
  p.down_sensitivity[2] = 0.5 * p.up_sensitivity[2];
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Plant, PressureScaleCalibration) {
  const auto cfg = PlantConfig::defaults(FlightCondition::HighLift, TapConfig::Six).noiseless();
  const double dmax = cfg.flight.training_deflection_max_deg;
  double strongest = 0.0;
  for (double d : {dmax, -dmax}) {
    GustPlant plant(cfg, 1);
    plant.reset(GustSchedule::training_hold(d, cfg.flight));
    strongest = std::max(strongest, std::abs(plant.sense()[0]));
  }
  EXPECT_NEAR(strongest, 2.0, 1e-12);
}

TEST(Plant, WakeDelay) {
  EXPECT_EQ(wake_delay_steps(10.0, 0.05), 1);
  EXPECT_EQ(wake_delay_steps(15.0, 0.05), 1);
  EXPECT_EQ(wake_delay_steps(2.0, 0.05), 3);
}

TEST(Plant, WakeReachesWingAfterDelay) {
  auto cfg = PlantConfig::defaults(FlightCondition::HighLift, TapConfig::Six).noiseless();
  cfg.flight.flow_speed_mps = 2.0;  // 0.15 s transport = 3 steps
  GustPlant plant(cfg, 1);
  const auto schedule = GustSchedule::test_quarters(10.0, cfg.flight);
  plant.reset(schedule);
  const int onset = static_cast<int>(std::lround(cfg.flight.gust_duration_s / 2 / cfg.flight.timestep_s));
  const auto window = gust_window(schedule, cfg.flight.timestep_s, plant.wake_delay());
  EXPECT_EQ(window.first_step, onset + 3);
  for (int k = 0; k < window.first_step + 2; ++k) {
    const auto out = plant.step(cfg.flight.zero_action_index());
    if (k < window.first_step)
      EXPECT_EQ(out.lift_n, cfg.flight.baseline_lift_n) << k;
    else
      EXPECT_NEAR(out.lift_n, cfg.flight.baseline_lift_n + 0.10, 1e-12) << k;
  }
}

TEST(Schedule, QuartersLayout) {
  const auto flight = builtin_flight_condition(FlightCondition::HighLift);
  const auto s = GustSchedule::test_quarters(-7.5, flight);
  EXPECT_EQ(s.total_steps(0.05), 400);
  EXPECT_EQ(s.deflection_at_step(99, 0.05), 0.0);
  EXPECT_EQ(s.deflection_at_step(100, 0.05), -7.5);
  EXPECT_EQ(s.deflection_at_step(299, 0.05), -7.5);
  EXPECT_EQ(s.deflection_at_step(300, 0.05), 0.0);
  const auto w = gust_window(s, 0.05, 1);
  EXPECT_EQ(w.first_step, 101);
  EXPECT_EQ(w.length, 200);

  const auto med = builtin_flight_condition(FlightCondition::MedLift);
  EXPECT_EQ(GustSchedule::test_quarters(3.0, med).total_steps(0.05), 200);
  EXPECT_EQ(GustSchedule::training_hold(3.0, med).total_steps(0.05), 200);
}

TEST(Plant, MeasurementLayout) {
  for (auto taps : kAllTapConfigs) {
    GustPlant plant(PlantConfig::defaults(FlightCondition::HighLift, taps), 9);
    const auto first = plant.reset(GustSchedule::training_hold(0.0, plant.config().flight));
    ASSERT_EQ(first.size(), channel_count(taps));
    const auto out = plant.step(6);  // +0.6
    ASSERT_EQ(out.measurement.size(), channel_count(taps));
    EXPECT_DOUBLE_EQ(out.measurement.back(), 0.6);
    for (std::size_t i = 0; i < active_tap_count(taps); ++i) EXPECT_EQ(out.measurement[i], out.all_taps[i]);
  }
}

TEST(Plant, SignalsStayInRange) {
  auto cfg = PlantConfig::defaults(FlightCondition::HighLift, TapConfig::Six);
  cfg.sensors.noise_sigma = 5.0;
  GustPlant plant(cfg, 4);
  plant.reset(GustSchedule::training_hold(13.5, cfg.flight));
  for (int i = 0; i < 200; ++i) {
    const auto out = plant.step(static_cast<std::size_t>(i % 7));
    for (std::size_t c = 0; c + 1 < out.measurement.size(); ++c) ASSERT_LE(std::abs(out.measurement[c]), 2.5);
    ASSERT_LE(std::abs(out.measurement.back()), 1.0);
  }
}

TEST(Plant, SeededNoiseIsReproducible) {
  const auto cfg = PlantConfig::defaults(FlightCondition::LowLift, TapConfig::Three);
  auto run = [&](std::uint64_t seed) {
    GustPlant plant(cfg, seed);
    plant.reset(GustSchedule::training_hold(-6.0, cfg.flight));
    std::vector<double> lift;
    for (int i = 0; i < 50; ++i) lift.push_back(plant.step(static_cast<std::size_t>(i % 3)).lift_n);
    return std::make_pair(lift, plant.state());
  };
  const auto a = run(42);
  const auto b = run(42);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_NE(a.first, run(43).first);
}

TEST(Plant, CamberMovesLift) {
  const auto cfg = PlantConfig::defaults(FlightCondition::HighLift, TapConfig::Six).noiseless();
  GustPlant plant(cfg, 1);
  plant.reset(GustSchedule::training_hold(0.0, cfg.flight));
  double lift = 0.0;
  plant.step(0);  // -0.6
  for (int i = 0; i < 60; ++i) lift = plant.step(cfg.flight.zero_action_index()).lift_n;
  const auto& act = plant.state().actuator;
  EXPECT_NEAR(lift, cfg.flight.baseline_lift_n + cfg.actuator.camber_lift_gain_n * act.effective_camber, 1e-15);
  EXPECT_LT(lift, cfg.flight.baseline_lift_n - 0.05);
}

TEST(Plant, TraceSink) {
  const auto cfg = PlantConfig::defaults(FlightCondition::HighLift, TapConfig::One);
  GustPlant plant(cfg, 1);
  std::vector<TraceRow> rows;
  plant.set_trace(&rows);
  plant.reset(GustSchedule::test_quarters(12.5, cfg.flight));
  for (int i = 0; i < 5; ++i) plant.step(3);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_DOUBLE_EQ(rows.back().time_s, 0.25);
}

TEST(Plant, RejectsBadActionIndex) {
  GustPlant plant(PlantConfig::defaults(FlightCondition::MedLift, TapConfig::Six), 1);
  plant.reset(GustSchedule::training_hold(0.0, plant.config().flight));
  EXPECT_THROW(plant.step(3), std::out_of_range);
}
