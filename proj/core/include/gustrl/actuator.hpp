#pragma once

#include <span>

#include "gustrl/domain.hpp"

namespace gustrl {

// Camber-morphing trailing edge driven by a normalized MFC voltage signal.
// The voltage-to-camber path is a single play (backlash) operator followed by
// bounded creep drift and a first-order lag.

struct ActuatorParams {
  double play_width = 0.1;          // signal units, [0, 0.5)
  double lag_time_constant_s = 0.1;
  double creep_rate = 0.01;         // signal units per second
  double creep_limit = 0.05;        // saturation of the creep accumulator
  double camber_lift_gain_n = 0.0;  // lift per unit camber; 0 ablates control authority

  void validate() const;
};

struct ActuatorState {
  double commanded_signal = 0.0;
  double play_memory = 0.0;
  double effective_camber = 0.0;
  double creep_accumulator = 0.0;

  friend bool operator==(const ActuatorState&, const ActuatorState&) = default;
};

/// Full-authority gain: 20% margin over the largest tabulated gust lift.
double calibrated_camber_gain(const FlightConditionConfig& cfg);

/// Default parameters with the gain calibrated for `cfg`.
ActuatorParams default_actuator_params(const FlightConditionConfig& cfg);

/// Adds `delta_v` to the commanded signal (clamped to [-1, 1]). `delta_v` must be
/// one of `action_deltas`; anything else indicates an action-index bug and throws.
ActuatorState apply_action(ActuatorState state, double delta_v, std::span<const double> action_deltas);

/// Advances play operator, creep and lag by `dt`.
ActuatorState step_dynamics(ActuatorState state, const ActuatorParams& params, double dt);

/// Play operator alone: clamps memory into [command - w, command + w].
double play_operator(double memory, double command, double width);

double lift_from_camber(double camber, const ActuatorParams& params);

}  // namespace gustrl
