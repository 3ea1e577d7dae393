#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gustrl/nn.hpp"
#include "gustrl/plant.hpp"
#include "gustrl/ppo.hpp"

namespace gustrl {

struct NetworkOptions {
  int filters = 16;
  int hidden = 512;
};

struct TrainingOptions {
  int episodes = 200;
  int init_steps = 10;  // neutral readings that fill the window before a test
};

/// Everything needed to reproduce one training or evaluation run.
struct RunConfig {
  PlantConfig plant;
  PpoHyperparams ppo;
  NetworkOptions network;
  TrainingOptions training;

  static RunConfig defaults(FlightCondition condition, TapConfig taps);

  NetworkSpec actor_spec() const;
  void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);

/// Resolves defaults < `file_doc` < `overrides` ("section.key=value").
/// Rejects unknown keys and reports every type or range problem at once (ConfigError).
/// The actuator gain and pressure scale resolve to their calibrated values unless given.
RunConfig resolve_run_config(std::optional<FlightCondition> condition, std::optional<TapConfig> taps,
                             const nlohmann::json& file_doc, const std::vector<std::string>& overrides);

/// Parses a resolved snapshot (as written by to_json) back into a RunConfig.
RunConfig run_config_from_json(const nlohmann::json& doc);

nlohmann::json load_json_file(const std::filesystem::path& path);

/// SHA-256 of the canonical JSON form.
std::string config_hash(const RunConfig& cfg);

}  // namespace gustrl
