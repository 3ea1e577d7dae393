#include "gustrl/actuator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gustrl/error.hpp"

namespace gustrl {

void ActuatorParams::validate() const {
  std::vector<std::string> problems;
  if (!(play_width >= 0.0 && play_width < 0.5)) problems.emplace_back("actuator.play_width must be in [0, 0.5)");
  if (!(lag_time_constant_s > 0.0)) problems.emplace_back("actuator.lag_time_constant_s must be > 0");
  if (!(creep_rate >= 0.0)) problems.emplace_back("actuator.creep_rate must be >= 0");
  if (!(creep_limit >= 0.0 && creep_limit <= 0.5)) problems.emplace_back("actuator.creep_limit must be in [0, 0.5]");
  if (!(camber_lift_gain_n >= 0.0) || !std::isfinite(camber_lift_gain_n))
    problems.emplace_back("actuator.camber_lift_gain_n must be finite and >= 0");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

double calibrated_camber_gain(const FlightConditionConfig& cfg) { return 1.2 * cfg.max_anchor_magnitude(); }

ActuatorParams default_actuator_params(const FlightConditionConfig& cfg) {
  ActuatorParams p;
  p.camber_lift_gain_n = calibrated_camber_gain(cfg);
  return p;
}

ActuatorState apply_action(ActuatorState state, double delta_v, std::span<const double> action_deltas) {
  if (std::find(action_deltas.begin(), action_deltas.end(), delta_v) == action_deltas.end())
    throw std::invalid_argument("apply_action: delta_v is not in the configured action set");
  state.commanded_signal = std::clamp(state.commanded_signal + delta_v, -kMfcSignalLimit, kMfcSignalLimit);
  return state;
}

double play_operator(double memory, double command, double width) {
  return std::clamp(memory, command - width, command + width);
}

ActuatorState step_dynamics(ActuatorState state, const ActuatorParams& params, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_dynamics: dt must be > 0");

  state.play_memory = play_operator(state.play_memory, state.commanded_signal, params.play_width);

  // Creep relaxes toward +-limit on the side of the current memory, at creep_rate.
  const double sign = (state.play_memory > 0.0) - (state.play_memory < 0.0);
  const double target = sign * params.creep_limit;
  const double max_move = params.creep_rate * dt;
  state.creep_accumulator += std::clamp(target - state.creep_accumulator, -max_move, max_move);

  // Zero-order-hold discretization of the first-order lag: exact for piecewise-constant input.
  const double drive = state.play_memory + state.creep_accumulator;
  const double blend = -std::expm1(-dt / params.lag_time_constant_s);
  state.effective_camber += blend * (drive - state.effective_camber);
  state.effective_camber = std::clamp(state.effective_camber, -1.0, 1.0);
  return state;
}

double lift_from_camber(double camber, const ActuatorParams& params) { return params.camber_lift_gain_n * camber; }

}  // namespace gustrl
