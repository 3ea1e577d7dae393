#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <vector>

#include "gustrl/actuator.hpp"
#include "gustrl/domain.hpp"
#include "gustrl/seed.hpp"

namespace gustrl {

// Phenomenological wind-tunnel surrogate: gust generator -> wake transport ->
// pressure taps and lift, with the morphing trailing edge in the loop.

enum class ScheduleKind { TrainingHold, TestQuarters };

struct GustSegment {
  double deflection_deg = 0.0;
  double duration_s = 0.0;
};

struct GustSchedule {
  ScheduleKind kind = ScheduleKind::TrainingHold;
  std::vector<GustSegment> segments;

  /// One segment held for a whole training episode.
  static GustSchedule training_hold(double deflection_deg, const FlightConditionConfig& cfg);
  /// Neutral for T/2, `deflection_deg` for T, neutral for T/2 (T = gust duration).
  static GustSchedule test_quarters(double deflection_deg, const FlightConditionConfig& cfg);

  int total_steps(double dt) const;
  double deflection_at_step(int step, double dt) const;
  double initial_deflection() const { return segments.empty() ? 0.0 : segments.front().deflection_deg; }
};

/// Step range over which a gust acts on the wing.
struct GustWindow {
  int first_step = 0;
  int length = 0;
};

/// Window of the middle (gust) segment of a TestQuarters schedule, shifted by the wake delay.
GustWindow gust_window(const GustSchedule& schedule, double dt, int wake_delay_steps);

struct TapSensitivityProfile {
  std::array<double, kTapCount> up_sensitivity{1.0, 0.8, 0.6, 0.3, 0.12, 0.06};
  // Tap 2 loses 27% and tap 3 loses 83.3% (keeps 16.7%) on downward gusts.
  std::array<double, kTapCount> down_sensitivity{0.9, 0.73 * 0.8, 0.167 * 0.6, 0.09, 0.05, 0.03};
  // Rear taps sit closest to the morphing trailing edge.
  std::array<double, kTapCount> camber_coupling{0.01, 0.015, 0.02, 0.04, 0.08, 0.10};
  double noise_sigma = 0.05;  // normalized signal units

  void validate() const;
};

struct PlantConfig {
  FlightConditionConfig flight;
  ActuatorParams actuator;
  TapSensitivityProfile sensors;
  double pressure_scale = 0.0;      // normalized units per raw unit; 0 selects the calibrated value
  double lift_noise_sigma_n = 0.005;
  TapConfig taps = TapConfig::Six;

  /// Table values with calibrated actuator gain and pressure scale.
  static PlantConfig defaults(FlightCondition condition, TapConfig taps);

  void validate() const;
  double effective_pressure_scale() const;
  /// Copy with every noise source disabled.
  PlantConfig noiseless() const;
};

/// Scale that maps the strongest training gust to |signal| = 2 at the leading-edge tap.
double calibrated_pressure_scale(const FlightConditionConfig& flight, const TapSensitivityProfile& sensors);

/// Gust lift increment: piecewise-linear through (0, 0) and the tabulated anchors,
/// linear extrapolation past the outermost anchors. Throws beyond the generator limit.
double gust_lift_map(double deflection_deg, const FlightConditionConfig& cfg);

/// Generator-to-wing transport delay (30 cm at the flow speed), in whole steps, never below one.
int wake_delay_steps(double flow_speed_mps, double dt);
inline constexpr double kGeneratorToWingDistanceM = 0.30;

struct PlantState {
  int step = 0;
  double time_s = 0.0;
  double generator_deflection_deg = 0.0;
  std::deque<double> wake_line;  // generator history in flight, oldest first
  double wake_deflection_at_wing_deg = 0.0;
  ActuatorState actuator;
  double lift_n = 0.0;
  std::array<double, kTapCount> baseline_pressures{};

  friend bool operator==(const PlantState&, const PlantState&) = default;
};

/// Advances the delay line with the new generator deflection.
PlantState transport_wake(PlantState state, double generator_deflection_deg);

/// Raw (pre-baseline) tap readings without noise: static suction + gust + camber coupling.
std::array<double, kTapCount> raw_tap_pressures(const PlantState& state, const PlantConfig& cfg);

/// Normalized, baseline-subtracted signals for all six taps, with sensor noise.
std::array<double, kTapCount> tap_signals(const PlantState& state, const PlantConfig& cfg, Rng& rng);

/// Fresh state for `schedule`: actuator zeroed, delay line flushed, baselines captured in neutral flow.
PlantState reset_state(const PlantConfig& cfg, const GustSchedule& schedule);

struct StepOutput {
  std::vector<double> measurement;  // active tap signals followed by the MFC signal
  double lift_n = 0.0;
  std::array<double, kTapCount> all_taps{};
};

/// One control period: action, actuator dynamics, wake transport, lift and sensing.
StepOutput plant_step(PlantState& state, std::size_t action_index, const PlantConfig& cfg,
                      const GustSchedule& schedule, Rng& rng);

/// Per-step snapshot for trace files.
struct TraceRow {
  double time_s = 0.0;
  double generator_deflection_deg = 0.0;
  double wake_deflection_deg = 0.0;
  std::array<double, kTapCount> taps{};
  double mfc_signal = 0.0;
  double camber = 0.0;
  double lift_n = 0.0;
};

/// Owns configuration, schedule, state and noise stream of one plant instance.
class GustPlant {
 public:
  GustPlant(PlantConfig cfg, std::uint64_t seed);

  /// Returns the measurement vector in the reset state (noise applied).
  std::vector<double> reset(const GustSchedule& schedule);
  StepOutput step(std::size_t action_index);
  /// Reads the sensors without advancing time.
  std::vector<double> sense();

  const PlantState& state() const noexcept { return state_; }
  const PlantConfig& config() const noexcept { return cfg_; }
  const GustSchedule& schedule() const noexcept { return schedule_; }
  int wake_delay() const noexcept { return delay_; }

  void set_trace(std::vector<TraceRow>* sink) noexcept { trace_ = sink; }

 private:
  std::vector<double> measurement_from(const std::array<double, kTapCount>& taps) const;

  PlantConfig cfg_;
  GustSchedule schedule_;
  PlantState state_;
  Rng rng_;
  int delay_ = 1;
  std::vector<TraceRow>* trace_ = nullptr;
};

}  // namespace gustrl
