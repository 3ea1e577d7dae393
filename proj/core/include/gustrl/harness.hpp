#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "gustrl/config.hpp"
#include "gustrl/metrics.hpp"
#include "gustrl/ppo.hpp"
#include "gustrl/record.hpp"

namespace gustrl {

/// Alternates neutral and random-gust episodes: even (0-based) episodes start at 0 deg,
/// odd ones at a deflection drawn uniformly from +-[min, max].
double training_deflection(int episode, const FlightConditionConfig& flight, Rng& rng);

struct EpisodeLog {
  int episode = 0;
  double deflection_deg = 0.0;
  double total_reward = 0.0;
  double running_average = 0.0;  // trailing 100 episodes
  UpdateStats update;
};

struct TrainingResult {
  PpoAgent agent;
  std::vector<double> episode_rewards;
  std::vector<double> running_average;
  std::vector<EpisodeLog> log;
};

inline constexpr int kRunningAverageWindow = 100;

/// Trains one controller for cfg.training.episodes episodes. Throws std::runtime_error
/// naming the episode if the plant or the update produces non-finite values.
TrainingResult run_training(const RunConfig& cfg, std::uint64_t seed,
                            const std::function<void(const EpisodeLog&)>& on_episode = {});

/// Anything that picks an action each control period during a gust test. Test doubles
/// may read the plant state; trained policies only look at the observation.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::size_t act(const Observation& observation, const PlantState& state, const PlantConfig& cfg) = 0;
};

/// Greedy (argmax) action from a trained actor.
class GreedyPolicy final : public Controller {
 public:
  explicit GreedyPolicy(const Network& actor) : actor_(actor) {}
  std::size_t act(const Observation& observation, const PlantState&, const PlantConfig&) override;

 private:
  const Network& actor_;
};

class ConstantAction final : public Controller {
 public:
  explicit ConstantAction(std::size_t index) : index_(index) {}
  std::size_t act(const Observation&, const PlantState&, const PlantConfig&) override { return index_; }

 private:
  std::size_t index_;
};

/// Unactuated lift under the test gust schedule. Unlike a gust test, any deflection
/// the generator can reach is accepted (0 deg gives the neutral trace).
struct BaselineTrace {
  FlightCondition condition = FlightCondition::HighLift;
  double deflection_deg = 0.0;
  std::vector<double> lift_n;
  double mean_delta_n = 0.0;  // over the gust window
};

BaselineTrace compute_baseline(const RunConfig& cfg, double deflection_deg, std::uint64_t seed);

struct GustTestSpec {
  std::string controller_id = "controller";
  double deflection_deg = 0.0;
  int repetition = 0;
  std::uint64_t seed = 0;
};

/// Initialization window, then neutral / gust / neutral with `controller` in the loop.
/// GRP is evaluated over the gust window against `baseline`.
GustTestRecord run_gust_test(Controller& controller, const RunConfig& cfg, const GustTestSpec& test,
                             const BaselineTrace& baseline);

/// Same, computing the baseline on the fly from a derived seed.
GustTestRecord run_gust_test(Controller& controller, const RunConfig& cfg, const GustTestSpec& test);

}  // namespace gustrl
