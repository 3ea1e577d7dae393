#include "gustrl/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gustrl/error.hpp"

namespace gustrl {

namespace {

int steps_for(double duration_s, double dt) { return static_cast<int>(std::lround(duration_s / dt)); }

}  // namespace

GustSchedule GustSchedule::training_hold(double deflection_deg, const FlightConditionConfig& cfg) {
  return {ScheduleKind::TrainingHold, {{deflection_deg, cfg.episode_steps * cfg.timestep_s}}};
}

GustSchedule GustSchedule::test_quarters(double deflection_deg, const FlightConditionConfig& cfg) {
  const double t = cfg.gust_duration_s;
  return {ScheduleKind::TestQuarters, {{0.0, t / 2.0}, {deflection_deg, t}, {0.0, t / 2.0}}};
}

int GustSchedule::total_steps(double dt) const {
  int total = 0;
  for (const auto& s : segments) total += steps_for(s.duration_s, dt);
  return total;
}

double GustSchedule::deflection_at_step(int step, double dt) const {
  if (segments.empty()) return 0.0;
  int end = 0;
  for (const auto& s : segments) {
    end += steps_for(s.duration_s, dt);
    if (step < end) return s.deflection_deg;
  }
  return segments.back().deflection_deg;
}

GustWindow gust_window(const GustSchedule& schedule, double dt, int wake_delay_steps) {
  if (schedule.kind == ScheduleKind::TrainingHold) {
    return {0, schedule.total_steps(dt)};
  }
  if (schedule.segments.size() != 3) throw std::invalid_argument("gust_window: TestQuarters needs 3 segments");
  return {steps_for(schedule.segments[0].duration_s, dt) + wake_delay_steps,
          steps_for(schedule.segments[1].duration_s, dt)};
}

void TapSensitivityProfile::validate() const {
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < kTapCount; ++i) {
    if (!(up_sensitivity[i] > 0.0)) problems.emplace_back("sensors.up_sensitivity entries must be > 0");
    if (!(down_sensitivity[i] > 0.0)) problems.emplace_back("sensors.down_sensitivity entries must be > 0");
    if (!(camber_coupling[i] >= 0.0)) problems.emplace_back("sensors.camber_coupling entries must be >= 0");
    if (i > 0 && !(up_sensitivity[i] < up_sensitivity[i - 1]))
      problems.emplace_back("sensors.up_sensitivity must decrease strictly toward the trailing edge");
    if (i > 0 && !(down_sensitivity[i] <= down_sensitivity[i - 1]))
      problems.emplace_back("sensors.down_sensitivity must not increase toward the trailing edge");
  }
  if (std::abs(down_sensitivity[1] - 0.73 * up_sensitivity[1]) > 1e-9)
    problems.emplace_back("sensors.down_sensitivity[1] must equal 0.73 * up_sensitivity[1]");
  if (std::abs(down_sensitivity[2] - 0.167 * up_sensitivity[2]) > 1e-9)
    problems.emplace_back("sensors.down_sensitivity[2] must equal 0.167 * up_sensitivity[2]");
  if (!(noise_sigma >= 0.0)) problems.emplace_back("sensors.noise_sigma must be >= 0");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

PlantConfig PlantConfig::defaults(FlightCondition condition, TapConfig taps) {
  PlantConfig cfg;
  cfg.flight = builtin_flight_condition(condition);
  cfg.actuator = default_actuator_params(cfg.flight);
  cfg.taps = taps;
  return cfg;
}

void PlantConfig::validate() const {
  std::vector<std::string> problems;
  auto collect = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
  };
  collect([&] { flight.validate(); });
  collect([&] { actuator.validate(); });
  collect([&] { sensors.validate(); });
  if (!(pressure_scale >= 0.0)) problems.emplace_back("plant.pressure_scale must be >= 0 (0 = calibrated)");
  if (!(lift_noise_sigma_n >= 0.0)) problems.emplace_back("plant.lift_noise_sigma_n must be >= 0");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

double PlantConfig::effective_pressure_scale() const {
  return pressure_scale > 0.0 ? pressure_scale : calibrated_pressure_scale(flight, sensors);
}

PlantConfig PlantConfig::noiseless() const {
  PlantConfig copy = *this;
  copy.sensors.noise_sigma = 0.0;
  copy.lift_noise_sigma_n = 0.0;
  return copy;
}

double calibrated_pressure_scale(const FlightConditionConfig& flight, const TapSensitivityProfile& sensors) {
  const double max_anchor = flight.max_anchor_magnitude();
  const double dmax = flight.training_deflection_max_deg;
  const double up = sensors.up_sensitivity[0] * std::abs(gust_lift_map(dmax, flight)) / max_anchor;
  const double down = sensors.down_sensitivity[0] * std::abs(gust_lift_map(-dmax, flight)) / max_anchor;
  return 2.0 / std::max(up, down);
}

double gust_lift_map(double deflection_deg, const FlightConditionConfig& cfg) {
  if (!std::isfinite(deflection_deg) || std::abs(deflection_deg) > kMaxGeneratorDeflectionDeg + 1e-12)
    throw std::out_of_range("gust_lift_map: deflection outside the generator limit");

  // Knots: negative anchors, origin, positive anchors.
  std::vector<LiftAnchor> knots;
  knots.reserve(cfg.delta_lift_anchors.size() + 1);
  for (const auto& a : cfg.delta_lift_anchors)
    if (a.deflection_deg < 0.0) knots.push_back(a);
  knots.push_back({0.0, 0.0});
  for (const auto& a : cfg.delta_lift_anchors)
    if (a.deflection_deg > 0.0) knots.push_back(a);
  if (knots.size() < 2) return 0.0;

  std::size_t hi = 1;
  while (hi + 1 < knots.size() && deflection_deg > knots[hi].deflection_deg) ++hi;
  const auto& a = knots[hi - 1];
  const auto& b = knots[hi];
  // Knots are returned verbatim so tabulated anchors and the origin are exact.
  if (deflection_deg == a.deflection_deg) return a.delta_lift_n;
  if (deflection_deg == b.deflection_deg) return b.delta_lift_n;
  const double w = (deflection_deg - a.deflection_deg) / (b.deflection_deg - a.deflection_deg);
  return a.delta_lift_n + w * (b.delta_lift_n - a.delta_lift_n);
}

int wake_delay_steps(double flow_speed_mps, double dt) {
  if (!(flow_speed_mps > 0.0) || !(dt > 0.0)) throw std::invalid_argument("wake_delay_steps: non-positive input");
  const double delay_s = kGeneratorToWingDistanceM / flow_speed_mps;
  return std::max(1, static_cast<int>(std::lround(delay_s / dt)));
}

PlantState transport_wake(PlantState state, double generator_deflection_deg) {
  state.generator_deflection_deg = generator_deflection_deg;
  state.wake_line.push_back(generator_deflection_deg);
  state.wake_deflection_at_wing_deg = state.wake_line.front();
  state.wake_line.pop_front();
  return state;
}

std::array<double, kTapCount> raw_tap_pressures(const PlantState& state, const PlantConfig& cfg) {
  const double wake = state.wake_deflection_at_wing_deg;
  const double strength = gust_lift_map(wake, cfg.flight) / cfg.flight.max_anchor_magnitude();
  const auto& sensitivity = wake >= 0.0 ? cfg.sensors.up_sensitivity : cfg.sensors.down_sensitivity;
  std::array<double, kTapCount> raw{};
  for (std::size_t i = 0; i < kTapCount; ++i) {
    // Static suction at the operating angle of attack, strongest at the leading edge.
    const double static_suction = -cfg.flight.alpha_deg / 10.0 * cfg.sensors.up_sensitivity[i];
    raw[i] = static_suction + sensitivity[i] * strength +
             cfg.sensors.camber_coupling[i] * state.actuator.effective_camber;
  }
  return raw;
}

std::array<double, kTapCount> tap_signals(const PlantState& state, const PlantConfig& cfg, Rng& rng) {
  const double scale = cfg.effective_pressure_scale();
  const auto raw = raw_tap_pressures(state, cfg);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::array<double, kTapCount> out{};
  for (std::size_t i = 0; i < kTapCount; ++i) {
    const double noise = cfg.sensors.noise_sigma * unit(rng) / scale;
    out[i] = normalize_pressure(raw[i] - state.baseline_pressures[i] + noise, scale);
  }
  return out;
}

PlantState reset_state(const PlantConfig& cfg, const GustSchedule& schedule) {
  const double dt = cfg.flight.timestep_s;
  const int delay = wake_delay_steps(cfg.flight.flow_speed_mps, dt);
  PlantState state;

  // Baseline pressures are taken in neutral flow with the trailing edge undeflected.
  state.baseline_pressures = raw_tap_pressures(state, cfg);

  const double initial = schedule.initial_deflection();
  if (std::abs(initial) > kMaxGeneratorDeflectionDeg)
    throw std::out_of_range("reset: initial deflection outside the generator limit");
  state.generator_deflection_deg = initial;
  state.wake_line.assign(static_cast<std::size_t>(delay), initial);
  state.wake_deflection_at_wing_deg = initial;
  state.lift_n = cfg.flight.baseline_lift_n + gust_lift_map(initial, cfg.flight);
  return state;
}

namespace {

std::vector<double> measurement_vector(const std::array<double, kTapCount>& taps, TapConfig active,
                                       double commanded_signal) {
  std::vector<double> m(taps.begin(), taps.begin() + static_cast<std::ptrdiff_t>(active_tap_count(active)));
  m.push_back(normalize_mfc(commanded_signal));
  return m;
}

}  // namespace

StepOutput plant_step(PlantState& state, std::size_t action_index, const PlantConfig& cfg,
                      const GustSchedule& schedule, Rng& rng) {
  const auto& deltas = cfg.flight.action_deltas;
  if (action_index >= deltas.size()) throw std::out_of_range("plant_step: action index out of range");
  const double dt = cfg.flight.timestep_s;

  state.actuator = apply_action(state.actuator, deltas[action_index], deltas);
  state.actuator = step_dynamics(state.actuator, cfg.actuator, dt);

  const double generator = schedule.deflection_at_step(state.step, dt);
  if (std::abs(generator) > kMaxGeneratorDeflectionDeg)
    throw std::out_of_range("plant_step: scheduled deflection outside the generator limit");
  state = transport_wake(std::move(state), generator);
  state.step += 1;
  state.time_s = state.step * dt;

  std::normal_distribution<double> unit(0.0, 1.0);
  const double lift_noise = cfg.lift_noise_sigma_n * unit(rng);
  state.lift_n = cfg.flight.baseline_lift_n + gust_lift_map(state.wake_deflection_at_wing_deg, cfg.flight) +
                 lift_from_camber(state.actuator.effective_camber, cfg.actuator) + lift_noise;
  if (!std::isfinite(state.lift_n)) throw std::runtime_error("plant_step: lift became non-finite");

  const auto taps = tap_signals(state, cfg, rng);
  return {measurement_vector(taps, cfg.taps, state.actuator.commanded_signal), state.lift_n, taps};
}

GustPlant::GustPlant(PlantConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), rng_(seed) {
  cfg_.validate();
  delay_ = wake_delay_steps(cfg_.flight.flow_speed_mps, cfg_.flight.timestep_s);
}

std::vector<double> GustPlant::reset(const GustSchedule& schedule) {
  schedule_ = schedule;
  state_ = reset_state(cfg_, schedule_);
  return sense();
}

StepOutput GustPlant::step(std::size_t action_index) {
  auto out = plant_step(state_, action_index, cfg_, schedule_, rng_);
  if (trace_ != nullptr) {
    TraceRow row;
    row.time_s = state_.time_s;
    row.generator_deflection_deg = state_.generator_deflection_deg;
    row.wake_deflection_deg = state_.wake_deflection_at_wing_deg;
    row.taps = out.all_taps;
    row.mfc_signal = out.measurement.back();
    row.camber = state_.actuator.effective_camber;
    row.lift_n = out.lift_n;
    trace_->push_back(row);
  }
  return out;
}

std::vector<double> GustPlant::sense() {
  const auto taps = tap_signals(state_, cfg_, rng_);
  return measurement_from(taps);
}

std::vector<double> GustPlant::measurement_from(const std::array<double, kTapCount>& taps) const {
  return measurement_vector(taps, cfg_.taps, state_.actuator.commanded_signal);
}

}  // namespace gustrl
