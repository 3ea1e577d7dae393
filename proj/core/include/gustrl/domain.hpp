#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gustrl {

enum class FlightCondition { HighLift, MedLift, LowLift };

inline constexpr std::array<FlightCondition, 3> kAllFlightConditions = {
    FlightCondition::HighLift, FlightCondition::MedLift, FlightCondition::LowLift};

std::string_view to_string(FlightCondition condition);
/// Accepts "high-lift", "med-lift", "low-lift" (also "medium-lift").
FlightCondition parse_flight_condition(std::string_view text);

/// Hard mechanical limit of the gust generator, degrees.
inline constexpr double kMaxGeneratorDeflectionDeg = 13.5;

struct LiftAnchor {
  double deflection_deg = 0.0;
  double delta_lift_n = 0.0;
};

/// One operating point of the wind-tunnel campaign.
struct FlightConditionConfig {
  FlightCondition name = FlightCondition::HighLift;
  double baseline_lift_n = 0.0;
  double flow_speed_mps = 0.0;
  double alpha_deg = 0.0;
  // Training gusts are drawn from +-[min, max].
  double training_deflection_min_deg = 0.0;
  double training_deflection_max_deg = 0.0;
  std::vector<double> testing_deflections_deg;  // signed, ascending
  std::vector<LiftAnchor> delta_lift_anchors;   // ascending by deflection
  double gust_duration_s = 0.0;
  std::vector<double> action_deltas;  // ascending, symmetric about 0
  double timestep_s = 0.05;
  int episode_steps = 200;

  /// Throws ConfigError listing every violated invariant.
  void validate() const;

  double max_anchor_magnitude() const;
  std::size_t action_count() const { return action_deltas.size(); }
  /// Index of the 0 delta in action_deltas.
  std::size_t zero_action_index() const;
};

FlightConditionConfig builtin_flight_condition(FlightCondition name);

// Pressure taps, fraction of chord from the leading edge.
inline constexpr std::array<double, 6> kTapPositions = {0.0, 0.015, 0.05, 0.10, 0.40, 0.50};
inline constexpr std::size_t kTapCount = kTapPositions.size();

/// Active taps are always a leading-edge prefix of kTapPositions.
enum class TapConfig : int { One = 1, Three = 3, Six = 6 };

inline constexpr std::array<TapConfig, 3> kAllTapConfigs = {TapConfig::One, TapConfig::Three,
                                                            TapConfig::Six};

inline constexpr std::size_t active_tap_count(TapConfig taps) { return static_cast<std::size_t>(taps); }
/// Pressure channels plus one MFC channel.
inline constexpr std::size_t channel_count(TapConfig taps) { return active_tap_count(taps) + 1; }
/// Throws ConfigError unless count is 1, 3 or 6.
TapConfig tap_config_from_count(int count);

double normalize_pressure(double raw, double scale);
double normalize_mfc(double voltage_signal);

inline constexpr double kPressureSignalLimit = 2.5;
inline constexpr double kMfcSignalLimit = 1.0;

/// Sliding window of the most recent per-step measurement vectors, oldest first.
class Observation {
 public:
  static constexpr std::size_t kWindowLength = 10;

  Observation() = default;
  /// Window pre-filled with `fill` (the initialization baseline).
  Observation(std::size_t channels, std::span<const double> fill);
  explicit Observation(std::size_t channels);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t length() const noexcept { return kWindowLength; }

  /// Drops the oldest vector, appends `step` as the newest. Entries are clamped to their signal ranges.
  void push(std::span<const double> step);

  /// Value at window position `t` (0 = oldest) for `channel`.
  double at(std::size_t t, std::size_t channel) const { return data_[t * channels_ + channel]; }
  /// Step-major storage: data()[t * channels + c].
  std::span<const double> data() const noexcept { return data_; }

 private:
  std::size_t channels_ = 0;
  std::vector<double> data_;
};

}  // namespace gustrl
