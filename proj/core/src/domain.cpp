#include "gustrl/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gustrl/error.hpp"

namespace gustrl {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::ostringstream out;
  out << "invalid configuration";
  for (const auto& p : problems) out << "\n  - " << p;
  return out.str();
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

std::string_view to_string(FlightCondition condition) {
  switch (condition) {
    case FlightCondition::HighLift: return "high-lift";
    case FlightCondition::MedLift: return "med-lift";
    case FlightCondition::LowLift: return "low-lift";
  }
  return "unknown";
}

FlightCondition parse_flight_condition(std::string_view text) {
  if (text == "high-lift" || text == "high") return FlightCondition::HighLift;
  if (text == "med-lift" || text == "medium-lift" || text == "med") return FlightCondition::MedLift;
  if (text == "low-lift" || text == "low") return FlightCondition::LowLift;
  throw ConfigError("unknown flight condition '" + std::string(text) +
                    "' (expected high-lift, med-lift or low-lift)");
}

TapConfig tap_config_from_count(int count) {
  switch (count) {
    case 1: return TapConfig::One;
    case 3: return TapConfig::Three;
    case 6: return TapConfig::Six;
    default: break;
  }
  throw ConfigError("tap count " + std::to_string(count) + " is not supported (allowed: 1, 3, 6)");
}

FlightConditionConfig builtin_flight_condition(FlightCondition name) {
  FlightConditionConfig cfg;
  cfg.name = name;
  switch (name) {
    case FlightCondition::HighLift:
      cfg.baseline_lift_n = 3.5;
      cfg.flow_speed_mps = 10.0;
      cfg.alpha_deg = 10.0;
      cfg.training_deflection_min_deg = 3.5;
      cfg.training_deflection_max_deg = 13.5;
      cfg.testing_deflections_deg = {-12.5, -10.0, -7.5, 7.5, 10.0, 12.5};
      cfg.delta_lift_anchors = {{-12.5, -0.17}, {-10.0, -0.15}, {-7.5, -0.08},
                                {7.5, 0.09},    {10.0, 0.10},   {12.5, 0.14}};
      cfg.gust_duration_s = 10.0;
      cfg.action_deltas = {-0.6, -0.2, -0.1, 0.0, 0.1, 0.2, 0.6};
      break;
    case FlightCondition::MedLift:
      cfg.baseline_lift_n = 2.5;
      cfg.flow_speed_mps = 15.0;
      cfg.alpha_deg = 4.0;
      cfg.training_deflection_min_deg = 0.5;
      cfg.training_deflection_max_deg = 7.5;
      cfg.testing_deflections_deg = {-6.0, -4.5, -3.0, 3.0, 4.5, 6.0};
      cfg.delta_lift_anchors = {{-6.0, -0.61}, {-4.5, -0.43}, {-3.0, -0.26},
                                {3.0, 0.21},   {4.5, 0.36},   {6.0, 0.51}};
      cfg.gust_duration_s = 5.0;
      cfg.action_deltas = {-0.25, 0.0, 0.25};
      break;
    case FlightCondition::LowLift:
      cfg.baseline_lift_n = 1.2;
      cfg.flow_speed_mps = 10.0;
      cfg.alpha_deg = 4.0;
      cfg.training_deflection_min_deg = 1.0;
      cfg.training_deflection_max_deg = 9.0;
      cfg.testing_deflections_deg = {-8.0, -6.0, -4.0, 4.0, 6.0, 8.0};
      cfg.delta_lift_anchors = {{-8.0, -0.35}, {-6.0, -0.24}, {-4.0, -0.14},
                                {4.0, 0.13},   {6.0, 0.22},   {8.0, 0.28}};
      cfg.gust_duration_s = 5.0;
      cfg.action_deltas = {-0.25, 0.0, 0.25};
      break;
  }
  return cfg;
}

void FlightConditionConfig::validate() const {
  std::vector<std::string> problems;
  auto require = [&](bool ok, std::string message) {
    if (!ok) problems.push_back(std::move(message));
  };

  require(std::isfinite(baseline_lift_n) && baseline_lift_n > 0.0, "baseline_lift_n must be > 0");
  require(std::isfinite(flow_speed_mps) && flow_speed_mps > 0.0, "flow_speed_mps must be > 0");
  require(std::isfinite(alpha_deg), "alpha_deg must be finite");
  require(training_deflection_min_deg >= 0.0 &&
              training_deflection_min_deg < training_deflection_max_deg,
          "training deflection range must satisfy 0 <= min < max");
  require(training_deflection_max_deg <= kMaxGeneratorDeflectionDeg,
          "training deflection max exceeds the generator limit of 13.5 deg");
  require(gust_duration_s > 0.0, "gust_duration_s must be > 0");
  require(timestep_s > 0.0, "timestep_s must be > 0");
  require(episode_steps > 0, "episode_steps must be > 0");

  require(testing_deflections_deg.size() == 6, "testing_deflections_deg must hold 6 values");
  require(std::is_sorted(testing_deflections_deg.begin(), testing_deflections_deg.end()),
          "testing_deflections_deg must be ascending");
  for (double d : testing_deflections_deg) {
    require(d != 0.0, "testing deflections must be nonzero");
    require(std::abs(d) <= training_deflection_max_deg,
            "testing deflection " + std::to_string(d) + " exceeds the training range");
  }

  require(delta_lift_anchors.size() == testing_deflections_deg.size(),
          "delta_lift_anchors must pair one anchor with each testing deflection");
  for (std::size_t i = 0; i < delta_lift_anchors.size(); ++i) {
    const auto& a = delta_lift_anchors[i];
    require(std::abs(a.deflection_deg) <= kMaxGeneratorDeflectionDeg,
            "anchor deflection outside the generator limit");
    require(a.deflection_deg != 0.0 && (a.deflection_deg > 0.0) == (a.delta_lift_n > 0.0) &&
                a.delta_lift_n != 0.0,
            "anchor " + std::to_string(i) + " lift sign must match its deflection sign");
    if (i > 0) {
      const auto& prev = delta_lift_anchors[i - 1];
      require(a.deflection_deg > prev.deflection_deg && a.delta_lift_n > prev.delta_lift_n,
              "delta_lift_anchors must be strictly increasing");
    }
  }

  require(!action_deltas.empty(), "action_deltas must not be empty");
  require(std::is_sorted(action_deltas.begin(), action_deltas.end()), "action_deltas must be ascending");
  require(std::find(action_deltas.begin(), action_deltas.end(), 0.0) != action_deltas.end(),
          "action_deltas must contain 0");
  for (std::size_t i = 0; i < action_deltas.size(); ++i) {
    require(action_deltas[i] == -action_deltas[action_deltas.size() - 1 - i],
            "action_deltas must be symmetric about 0");
  }

  if (!problems.empty()) throw ConfigError(std::move(problems));
}

double FlightConditionConfig::max_anchor_magnitude() const {
  double m = 0.0;
  for (const auto& a : delta_lift_anchors) m = std::max(m, std::abs(a.delta_lift_n));
  return m;
}

std::size_t FlightConditionConfig::zero_action_index() const {
  auto it = std::find(action_deltas.begin(), action_deltas.end(), 0.0);
  if (it == action_deltas.end()) throw ConfigError("action_deltas must contain 0");
  return static_cast<std::size_t>(it - action_deltas.begin());
}

double normalize_pressure(double raw, double scale) {
  if (!std::isfinite(raw)) throw std::invalid_argument("normalize_pressure: non-finite signal");
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("normalize_pressure: scale must be positive");
  return std::clamp(raw * scale, -kPressureSignalLimit, kPressureSignalLimit);
}

double normalize_mfc(double voltage_signal) {
  if (!std::isfinite(voltage_signal)) throw std::invalid_argument("normalize_mfc: non-finite signal");
  return std::clamp(voltage_signal, -kMfcSignalLimit, kMfcSignalLimit);
}

Observation::Observation(std::size_t channels) : channels_(channels), data_(channels * kWindowLength, 0.0) {}

Observation::Observation(std::size_t channels, std::span<const double> fill) : Observation(channels) {
  if (fill.size() != channels) throw std::invalid_argument("Observation: fill vector has wrong channel count");
  for (std::size_t t = 0; t < kWindowLength; ++t) push(fill);
}

void Observation::push(std::span<const double> step) {
  if (step.size() != channels_) throw std::invalid_argument("Observation::push: wrong channel count");
  std::shift_left(data_.begin(), data_.end(), static_cast<std::ptrdiff_t>(channels_));
  auto newest = data_.end() - static_cast<std::ptrdiff_t>(channels_);
  for (std::size_t c = 0; c < channels_; ++c) {
    const double limit = (c + 1 == channels_) ? kMfcSignalLimit : kPressureSignalLimit;
    newest[static_cast<std::ptrdiff_t>(c)] = std::clamp(step[c], -limit, limit);
  }
}

}  // namespace gustrl
