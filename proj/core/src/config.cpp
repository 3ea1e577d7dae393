#include "gustrl/config.hpp"

#include <fstream>

#include "gustrl/error.hpp"
#include "gustrl/seed.hpp"

namespace gustrl {

using nlohmann::json;

namespace {

constexpr std::string_view kCalibrated = "calibrated";

// Collects every problem while walking a document.
class Parser {
 public:
  template <typename T>
  void get(const json& obj, const char* key, T& out, const std::string& path) {
    if (!obj.contains(key)) {
      problems.push_back(path + "." + key + ": missing");
      return;
    }
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception&) {
      problems.push_back(path + "." + key + ": wrong type (" + std::string(obj.at(key).type_name()) + ")");
    }
  }
  std::vector<std::string> problems;
};

void check_keys(const json& schema, const json& doc, const std::string& path, std::vector<std::string>& problems) {
  if (!doc.is_object()) {
    problems.push_back((path.empty() ? "<root>" : path) + ": expected an object");
    return;
  }
  for (const auto& [key, value] : doc.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!schema.contains(key)) {
      problems.push_back(here + ": unknown key");
      continue;
    }
    if (schema.at(key).is_object()) check_keys(schema.at(key), value, here, problems);
  }
}

json parse_override_value(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(std::string(text));
  }
}

}  // namespace

RunConfig RunConfig::defaults(FlightCondition condition, TapConfig taps) {
  RunConfig cfg;
  cfg.plant = PlantConfig::defaults(condition, taps);
  cfg.ppo.horizon = cfg.plant.flight.episode_steps;
  return cfg;
}

NetworkSpec RunConfig::actor_spec() const {
  NetworkSpec spec;
  spec.input_channels = static_cast<int>(channel_count(plant.taps));
  spec.filters = network.filters;
  spec.hidden = network.hidden;
  spec.outputs = static_cast<int>(plant.flight.action_count());
  return spec;
}

void RunConfig::validate() const {
  std::vector<std::string> problems;
  auto collect = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
  };
  collect([&] { plant.validate(); });
  collect([&] { ppo.validate(); });
  collect([&] { actor_spec().validate(); });
  if (ppo.horizon != plant.flight.episode_steps) problems.emplace_back("ppo.horizon must equal flight.episode_steps");
  if (training.episodes < 0) problems.emplace_back("training.episodes must be >= 0");
  if (training.init_steps < 0) problems.emplace_back("training.init_steps must be >= 0");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

json to_json(const RunConfig& cfg) {
  const auto& f = cfg.plant.flight;
  json anchors = json::array();
  for (const auto& a : f.delta_lift_anchors) anchors.push_back({a.deflection_deg, a.delta_lift_n});
  const auto& s = cfg.plant.sensors;
  const auto& a = cfg.plant.actuator;
  const auto& p = cfg.ppo;
  return json{
      {"condition", std::string(to_string(f.name))},
      {"taps", static_cast<int>(cfg.plant.taps)},
      {"flight",
       {{"baseline_lift_n", f.baseline_lift_n},
        {"flow_speed_mps", f.flow_speed_mps},
        {"alpha_deg", f.alpha_deg},
        {"training_deflection_min_deg", f.training_deflection_min_deg},
        {"training_deflection_max_deg", f.training_deflection_max_deg},
        {"testing_deflections_deg", f.testing_deflections_deg},
        {"delta_lift_anchors", anchors},
        {"gust_duration_s", f.gust_duration_s},
        {"action_deltas", f.action_deltas},
        {"timestep_s", f.timestep_s},
        {"episode_steps", f.episode_steps}}},
      {"actuator",
       {{"play_width", a.play_width},
        {"lag_time_constant_s", a.lag_time_constant_s},
        {"creep_rate", a.creep_rate},
        {"creep_limit", a.creep_limit},
        {"camber_lift_gain_n", a.camber_lift_gain_n}}},
      {"sensors",
       {{"up_sensitivity", s.up_sensitivity},
        {"down_sensitivity", s.down_sensitivity},
        {"camber_coupling", s.camber_coupling},
        {"noise_sigma", s.noise_sigma}}},
      {"plant", {{"pressure_scale", cfg.plant.effective_pressure_scale()}, {"lift_noise_sigma_n", cfg.plant.lift_noise_sigma_n}}},
      {"ppo",
       {{"gamma", p.gamma},
        {"gae_lambda", p.gae_lambda},
        {"clip_epsilon", p.clip_epsilon},
        {"epochs", p.epochs},
        {"minibatch_size", p.minibatch_size},
        {"horizon", p.horizon},
        {"entropy_coef", p.entropy_coef},
        {"value_coef", p.value_coef},
        {"max_grad_norm", p.max_grad_norm},
        {"learning_rate", p.learning_rate}}},
      {"network", {{"filters", cfg.network.filters}, {"hidden", cfg.network.hidden}}},
      {"training", {{"episodes", cfg.training.episodes}, {"init_steps", cfg.training.init_steps}}},
  };
}

RunConfig run_config_from_json(const json& doc) {
  Parser ps;
  std::string condition_name;
  int taps = 6;
  ps.get(doc, "condition", condition_name, "");
  ps.get(doc, "taps", taps, "");
  if (!ps.problems.empty()) throw ConfigError(ps.problems);

  RunConfig cfg;
  try {
    cfg = RunConfig::defaults(parse_flight_condition(condition_name), tap_config_from_count(taps));
  } catch (const ConfigError& e) {
    throw ConfigError(e.problems());
  }

  auto section = [&](const char* name) -> const json& {
    static const json empty = json::object();
    if (!doc.contains(name) || !doc.at(name).is_object()) {
      ps.problems.push_back(std::string(name) + ": missing section");
      return empty;
    }
    return doc.at(name);
  };

  auto& f = cfg.plant.flight;
  const json& fj = section("flight");
  ps.get(fj, "baseline_lift_n", f.baseline_lift_n, "flight");
  ps.get(fj, "flow_speed_mps", f.flow_speed_mps, "flight");
  ps.get(fj, "alpha_deg", f.alpha_deg, "flight");
  ps.get(fj, "training_deflection_min_deg", f.training_deflection_min_deg, "flight");
  ps.get(fj, "training_deflection_max_deg", f.training_deflection_max_deg, "flight");
  ps.get(fj, "testing_deflections_deg", f.testing_deflections_deg, "flight");
  std::vector<std::array<double, 2>> anchors;
  ps.get(fj, "delta_lift_anchors", anchors, "flight");
  f.delta_lift_anchors.clear();
  for (const auto& pair : anchors) f.delta_lift_anchors.push_back({pair[0], pair[1]});
  ps.get(fj, "gust_duration_s", f.gust_duration_s, "flight");
  ps.get(fj, "action_deltas", f.action_deltas, "flight");
  ps.get(fj, "timestep_s", f.timestep_s, "flight");
  ps.get(fj, "episode_steps", f.episode_steps, "flight");

  auto& a = cfg.plant.actuator;
  const json& aj = section("actuator");
  ps.get(aj, "play_width", a.play_width, "actuator");
  ps.get(aj, "lag_time_constant_s", a.lag_time_constant_s, "actuator");
  ps.get(aj, "creep_rate", a.creep_rate, "actuator");
  ps.get(aj, "creep_limit", a.creep_limit, "actuator");
  if (aj.contains("camber_lift_gain_n") && aj.at("camber_lift_gain_n") == json(kCalibrated)) {
    a.camber_lift_gain_n = calibrated_camber_gain(f);
  } else {
    ps.get(aj, "camber_lift_gain_n", a.camber_lift_gain_n, "actuator");
  }

  auto& s = cfg.plant.sensors;
  const json& sj = section("sensors");
  ps.get(sj, "up_sensitivity", s.up_sensitivity, "sensors");
  ps.get(sj, "down_sensitivity", s.down_sensitivity, "sensors");
  ps.get(sj, "camber_coupling", s.camber_coupling, "sensors");
  ps.get(sj, "noise_sigma", s.noise_sigma, "sensors");

  const json& pj = section("plant");
  if (pj.contains("pressure_scale") && pj.at("pressure_scale") == json(kCalibrated)) {
    cfg.plant.pressure_scale = 0.0;
  } else {
    ps.get(pj, "pressure_scale", cfg.plant.pressure_scale, "plant");
  }
  ps.get(pj, "lift_noise_sigma_n", cfg.plant.lift_noise_sigma_n, "plant");

  auto& p = cfg.ppo;
  const json& qj = section("ppo");
  ps.get(qj, "gamma", p.gamma, "ppo");
  ps.get(qj, "gae_lambda", p.gae_lambda, "ppo");
  ps.get(qj, "clip_epsilon", p.clip_epsilon, "ppo");
  ps.get(qj, "epochs", p.epochs, "ppo");
  ps.get(qj, "minibatch_size", p.minibatch_size, "ppo");
  ps.get(qj, "horizon", p.horizon, "ppo");
  ps.get(qj, "entropy_coef", p.entropy_coef, "ppo");
  ps.get(qj, "value_coef", p.value_coef, "ppo");
  ps.get(qj, "max_grad_norm", p.max_grad_norm, "ppo");
  ps.get(qj, "learning_rate", p.learning_rate, "ppo");

  const json& nj = section("network");
  ps.get(nj, "filters", cfg.network.filters, "network");
  ps.get(nj, "hidden", cfg.network.hidden, "network");

  const json& tj = section("training");
  ps.get(tj, "episodes", cfg.training.episodes, "training");
  ps.get(tj, "init_steps", cfg.training.init_steps, "training");

  // Fields that failed to parse kept their defaults, so range checks still apply to the rest.
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    ps.problems.insert(ps.problems.end(), e.problems().begin(), e.problems().end());
  }
  if (!ps.problems.empty()) throw ConfigError(ps.problems);
  return cfg;
}

RunConfig resolve_run_config(std::optional<FlightCondition> condition, std::optional<TapConfig> taps,
                             const json& file_doc, const std::vector<std::string>& overrides) {
  std::vector<std::string> problems;
  json user = file_doc.is_null() ? json::object() : file_doc;
  if (!user.is_object()) throw ConfigError("configuration file must contain a JSON object");

  for (const auto& assignment : overrides) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
      problems.push_back("override '" + assignment + "': expected section.key=value");
      continue;
    }
    const std::string path = assignment.substr(0, eq);
    json* node = &user;
    std::size_t start = 0;
    while (true) {
      const auto dot = path.find('.', start);
      const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (dot == std::string::npos) {
        (*node)[part] = parse_override_value(std::string_view(assignment).substr(eq + 1));
        break;
      }
      if (!node->contains(part) || !(*node)[part].is_object()) (*node)[part] = json::object();
      node = &(*node)[part];
      start = dot + 1;
    }
  }
  if (condition) user["condition"] = std::string(to_string(*condition));
  if (taps) user["taps"] = static_cast<int>(*taps);

  FlightCondition cond = FlightCondition::HighLift;
  TapConfig tap_cfg = TapConfig::Six;
  try {
    if (user.contains("condition")) cond = parse_flight_condition(user.at("condition").get<std::string>());
  } catch (const json::exception&) {
    problems.emplace_back("condition: expected a string");
  } catch (const ConfigError& e) {
    problems.insert(problems.end(), e.problems().begin(), e.problems().end());
  }
  try {
    if (user.contains("taps")) tap_cfg = tap_config_from_count(user.at("taps").get<int>());
  } catch (const json::exception&) {
    problems.emplace_back("taps: expected an integer");
  } catch (const ConfigError& e) {
    problems.insert(problems.end(), e.problems().begin(), e.problems().end());
  }

  json merged = to_json(RunConfig::defaults(cond, tap_cfg));
  check_keys(merged, user, "", problems);

  // Calibrated quantities follow the resolved flight table unless pinned by the user.
  merged["actuator"]["camber_lift_gain_n"] = std::string(kCalibrated);
  merged["plant"]["pressure_scale"] = std::string(kCalibrated);
  merged.merge_patch(user);
  try {
    auto cfg = run_config_from_json(merged);
    if (problems.empty()) return cfg;
  } catch (const ConfigError& e) {
    problems.insert(problems.end(), e.problems().begin(), e.problems().end());
  }
  throw ConfigError(std::move(problems));
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open configuration file '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_hash(const RunConfig& cfg) { return sha256_hex(to_json(cfg).dump()); }

}  // namespace gustrl
