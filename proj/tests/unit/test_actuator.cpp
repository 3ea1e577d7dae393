#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gustrl/actuator.hpp"
#include "gustrl/error.hpp"
#include "oracles.hpp"

using namespace gustrl;

namespace {

ActuatorParams lag_only() {
  ActuatorParams p;
  p.play_width = 0.0;
  p.creep_rate = 0.0;
  p.creep_limit = 0.0;
  p.camber_lift_gain_n = 1.0;
  return p;
}

}  // namespace

TEST(ApplyAction, AddsAndClamps) {
  const auto flight = builtin_flight_condition(FlightCondition::HighLift);
  ActuatorState s;
  s = apply_action(s, 0.6, flight.action_deltas);
  EXPECT_DOUBLE_EQ(s.commanded_signal, 0.6);
  s = apply_action(s, 0.6, flight.action_deltas);
  EXPECT_DOUBLE_EQ(s.commanded_signal, 1.0);
  s = apply_action(s, -0.1, flight.action_deltas);
  EXPECT_DOUBLE_EQ(s.commanded_signal, 0.9);
  EXPECT_EQ(s.effective_camber, 0.0);  // no dynamics advanced
}

TEST(ApplyAction, RejectsDeltaOutsideActionSet) {
  const auto flight = builtin_flight_condition(FlightCondition::MedLift);
  EXPECT_THROW(apply_action({}, 0.1, flight.action_deltas), std::invalid_argument);
  EXPECT_NO_THROW(apply_action({}, 0.25, flight.action_deltas));
}

TEST(PlayOperator, StaysWithinWidthOfCommand) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double m = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double c = u(rng);
    m = play_operator(m, c, 0.1);
    EXPECT_LE(std::abs(c - m), 0.1 + 1e-15);
  }
}

TEST(PlayOperator, DeadbandHoldsMemory) {
  EXPECT_EQ(play_operator(0.0, 0.05, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(play_operator(0.0, 0.3, 0.1), 0.2);
  EXPECT_DOUBLE_EQ(play_operator(0.2, -0.3, 0.1), -0.2);
}

TEST(PlayOperator, RateIndependentUnderPathRefinement) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> sub(1, 9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> cmd(40);
    for (auto& c : cmd) c = u(rng);
    double coarse = 0.0;
    double fine = 0.0;
    double prev = 0.0;
    for (double c : cmd) {
      coarse = play_operator(coarse, c, 0.1);
      const int n = sub(rng);
      for (int k = 1; k < n; ++k) fine = play_operator(fine, prev + (c - prev) * k / n, 0.1);
      fine = play_operator(fine, c, 0.1);
      prev = c;
      ASSERT_EQ(coarse, fine) << "trial " << trial;
    }
  }
}

TEST(PlayOperator, WipeOutForgetsHistory) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const double w = 0.1;
  for (int trial = 0; trial < 100; ++trial) {
    double a = 0.0;
    double b = 0.0;
    for (int i = 0; i < 30; ++i) a = play_operator(a, u(rng), w);
    for (int i = 0; i < 17; ++i) b = play_operator(b, u(rng), w);
    const double peak = 0.5 + 2 * w + 0.01;
    a = play_operator(a, peak, w);
    b = play_operator(b, peak, w);
    ASSERT_EQ(a, b);
    for (int i = 0; i < 20; ++i) {
      const double c = u(rng);
      a = play_operator(a, c, w);
      b = play_operator(b, c, w);
      ASSERT_EQ(a, b);
    }
  }
}

TEST(Lag, StepResponseMatchesDiscreteSolution) {
  const auto p = lag_only();
  for (double target : {0.6, -0.35, 1.0}) {
    ActuatorState s;
    s.commanded_signal = target;
    for (int n = 1; n <= 60; ++n) {
      s = step_dynamics(s, p, 0.05);
      EXPECT_NEAR(s.effective_camber, oracle::lag_step_response(0.0, target, p.lag_time_constant_s, 0.05, n), 1e-9);
    }
  }
}

TEST(Lag, ResponseFromNonzeroStart) {
  auto p = lag_only();
  p.lag_time_constant_s = 0.37;
  ActuatorState s;
  s.effective_camber = 0.8;
  s.play_memory = -0.2;
  s.commanded_signal = -0.2;
  for (int n = 1; n <= 40; ++n) {
    s = step_dynamics(s, p, 0.01);
    EXPECT_NEAR(s.effective_camber, oracle::lag_step_response(0.8, -0.2, 0.37, 0.01, n), 1e-9);
  }
}

TEST(Creep, DriftsTowardLimitAtRate) {
  ActuatorParams p;
  p.play_width = 0.0;
  ActuatorState s;
  s.commanded_signal = 0.5;
  s = step_dynamics(s, p, 0.05);
  EXPECT_NEAR(s.creep_accumulator, p.creep_rate * 0.05, 1e-15);
  for (int i = 0; i < 10000; ++i) s = step_dynamics(s, p, 0.05);
  EXPECT_NEAR(s.creep_accumulator, p.creep_limit, 1e-12);
  s.commanded_signal = -0.5;
  for (int i = 0; i < 10000; ++i) s = step_dynamics(s, p, 0.05);
  EXPECT_NEAR(s.creep_accumulator, -p.creep_limit, 1e-12);
}

TEST(Dynamics, CamberStaysBounded) {
  const auto flight = builtin_flight_condition(FlightCondition::HighLift);
  const auto p = default_actuator_params(flight);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> pick(0, flight.action_deltas.size() - 1);
  ActuatorState s;
  for (int i = 0; i < 20000; ++i) {
    s = apply_action(s, flight.action_deltas[pick(rng)], flight.action_deltas);
    s = step_dynamics(s, p, flight.timestep_s);
    ASSERT_LE(std::abs(s.effective_camber), 1.0);
    ASSERT_LE(std::abs(s.commanded_signal - s.play_memory), p.play_width + 1e-15);
  }
}

TEST(Dynamics, RejectsNonPositiveTimestep) {
  EXPECT_THROW(step_dynamics({}, ActuatorParams{}, 0.0), std::invalid_argument);
}

TEST(Gain, CalibratedWithMarginOverLargestAnchor) {
  EXPECT_DOUBLE_EQ(calibrated_camber_gain(builtin_flight_condition(FlightCondition::HighLift)), 1.2 * 0.17);
  EXPECT_DOUBLE_EQ(calibrated_camber_gain(builtin_flight_condition(FlightCondition::MedLift)), 1.2 * 0.61);
  EXPECT_DOUBLE_EQ(calibrated_camber_gain(builtin_flight_condition(FlightCondition::LowLift)), 1.2 * 0.35);
}

TEST(Gain, LiftIsLinearInCamber) {
  ActuatorParams p;
  p.camber_lift_gain_n = 0.204;
  EXPECT_DOUBLE_EQ(lift_from_camber(0.5, p), 0.102);
  p.camber_lift_gain_n = 0.0;
  EXPECT_EQ(lift_from_camber(0.9, p), 0.0);
}

TEST(Params, Validation) {
  ActuatorParams p;
  p.camber_lift_gain_n = 0.2;
  EXPECT_NO_THROW(p.validate());
  p.play_width = 0.5;
  EXPECT_THROW(p.validate(), ConfigError);
  p.play_width = 0.1;
  p.lag_time_constant_s = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p.lag_time_constant_s = 0.1;
  p.camber_lift_gain_n = -1.0;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(PlayOperator, ReturnStopsWidthShortOfZero) {
  auto p = lag_only();
  p.play_width = 0.2;
  ActuatorState s;
  s.commanded_signal = 1.0;
  for (int i = 0; i < 400; ++i) s = step_dynamics(s, p, 0.05);
  EXPECT_NEAR(s.effective_camber, 0.8, 1e-12);
  s.commanded_signal = 0.0;
  for (int i = 0; i < 400; ++i) s = step_dynamics(s, p, 0.05);
  EXPECT_NEAR(s.effective_camber, 0.2, 1e-12);
}

TEST(Lag, ThreeTimeConstantsReachesOneMinusExpMinusThree) {
  auto p = lag_only();
  p.lag_time_constant_s = 0.1;
  ActuatorState s;
  s.commanded_signal = 1.0;
  for (int i = 0; i < 6; ++i) s = step_dynamics(s, p, 0.05);  // 0.3 s
  EXPECT_NEAR(s.effective_camber, 1.0 - std::exp(-3.0), 1e-12);
}
