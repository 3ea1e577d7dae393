#include "gustrl/record.hpp"

#include <cstdio>

namespace gustrl {

std::string record_key(FlightCondition condition, TapConfig taps, const std::string& controller_id,
                       double deflection_deg, int repetition) {
  char deflection[32];
  std::snprintf(deflection, sizeof deflection, "%+.2f", deflection_deg);
  return std::string(to_string(condition)) + "/t" + std::to_string(static_cast<int>(taps)) + "/" + controller_id +
         "/" + deflection + "/r" + std::to_string(repetition);
}

std::string GustTestRecord::key() const {
  return record_key(condition, taps, controller_id, deflection_deg, repetition);
}

}  // namespace gustrl
