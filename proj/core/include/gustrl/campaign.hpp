#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gustrl/config.hpp"
#include "gustrl/harness.hpp"
#include "gustrl/metrics.hpp"
#include "gustrl/store.hpp"

namespace gustrl {

enum class CampaignPreset { Desk, Full };
std::string_view to_string(CampaignPreset preset);
CampaignPreset parse_campaign_preset(std::string_view text);

inline constexpr std::uint64_t kDefaultMasterSeed = 1;
inline constexpr int kDefaultBootstrapResamples = 10000;

/// Scale of an ablation campaign. Every (condition, taps) cell trains
/// controllers.at(condition) controllers and tests each one at every testing
/// deflection `repetitions` times.
struct CampaignPlan {
  std::string preset = "desk";
  std::vector<FlightCondition> conditions;
  std::vector<TapConfig> taps{TapConfig::One, TapConfig::Three, TapConfig::Six};
  std::map<FlightCondition, int> controllers;
  int repetitions = 3;
  std::optional<int> episodes;  // overrides training.episodes when set
  int bootstrap_resamples = kDefaultBootstrapResamples;
  std::uint64_t master_seed = kDefaultMasterSeed;

  void validate() const;
};

CampaignPlan campaign_preset(CampaignPreset preset);

nlohmann::json plan_to_json(const CampaignPlan& plan);
CampaignPlan plan_from_json(const nlohmann::json& doc);

struct MatrixEntry {
  FlightCondition condition = FlightCondition::HighLift;
  TapConfig taps = TapConfig::Six;
  int controller = 0;
  double deflection_deg = 0.0;
  int repetition = 0;

  std::string controller_id() const;
  std::string key() const;
};

/// Test matrix in commit order: condition, taps, controller, deflection, repetition.
std::vector<MatrixEntry> enumerate_matrix(const CampaignPlan& plan);

/// Seed tree shared by the campaign and the single-run commands.
std::uint64_t training_seed(std::uint64_t master, FlightCondition condition, TapConfig taps, int controller);
std::uint64_t test_seed(std::uint64_t master, const std::string& record_key);
std::uint64_t baseline_seed(std::uint64_t master, FlightCondition condition, double deflection_deg);

/// Per-deflection baselines for one configuration (unactuated plant, configured noise).
std::map<double, BaselineTrace> compute_baselines(const RunConfig& cfg, std::uint64_t master);

/// Runs every (deflection, repetition) test of one trained actor.
std::vector<GustTestRecord> evaluate_policy(const Network& actor, const RunConfig& cfg, const std::string& controller_id,
                                            int repetitions, const std::vector<double>& deflections,
                                            std::uint64_t master, const std::map<double, BaselineTrace>& baselines);

struct CampaignOptions {
  std::filesystem::path out_dir;
  nlohmann::json config_doc = nlohmann::json::object();
  std::vector<std::string> overrides;
  int workers = 1;
  std::function<void(const std::string&)> log;
};

struct CampaignOutcome {
  std::size_t expected_records = 0;
  std::size_t stored_records = 0;
  std::size_t new_records = 0;
  std::size_t reused_records = 0;
  std::vector<std::string> failures;  // one line per failed controller or test
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> artifacts;
  nlohmann::json seeds = nlohmann::json::object();
  nlohmann::json configs = nlohmann::json::object();

  bool complete() const { return failures.empty() && stored_records == expected_records; }
};

/// Trains (or reuses) every controller, runs the missing tests, appends records in
/// matrix order, then rewrites the summary, consistency, distribution and
/// significance tables from everything in the store. Failed controllers and tests
/// are reported and skipped.
CampaignOutcome run_ablation_campaign(const CampaignPlan& plan, const CampaignOptions& options);

/// Summary tables recomputed from a record set; returns the files written.
std::vector<std::filesystem::path> write_summaries(const std::filesystem::path& out_dir,
                                                   std::span<const GustTestRecord> records, int resamples,
                                                   std::uint64_t master, std::vector<std::string>& warnings);

}  // namespace gustrl
