#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gustrl/domain.hpp"

namespace gustrl {

/// One evaluation episode of one controller at one gust condition.
struct GustTestRecord {
  std::string controller_id;
  FlightCondition condition = FlightCondition::HighLift;
  TapConfig taps = TapConfig::Six;
  double deflection_deg = 0.0;
  int repetition = 0;
  std::uint64_t seed = 0;

  std::vector<double> lift_trace;  // whole test episode, newtons
  std::vector<double> grp_trace;   // gust window, percent
  double baseline_delta_n = 0.0;   // mean unactuated lift change over the gust
  double settled_grp = 0.0;
  std::optional<double> rise_time_s;  // empty when unmeasurable
  std::string metadata_hash;

  /// Identity of the test cell; persistence is idempotent on this key.
  std::string key() const;
};

std::string record_key(FlightCondition condition, TapConfig taps, const std::string& controller_id,
                       double deflection_deg, int repetition);

}  // namespace gustrl
