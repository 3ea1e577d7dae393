#include "gustrl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gustrl/error.hpp"

namespace gustrl {

double training_deflection(int episode, const FlightConditionConfig& flight, Rng& rng) {
  if (episode % 2 == 0) return 0.0;
  std::uniform_real_distribution<double> magnitude(flight.training_deflection_min_deg,
                                                   flight.training_deflection_max_deg);
  std::bernoulli_distribution upward(0.5);
  const double m = magnitude(rng);
  return upward(rng) ? m : -m;
}

TrainingResult run_training(const RunConfig& cfg, std::uint64_t seed,
                            const std::function<void(const EpisodeLog&)>& on_episode) {
  cfg.validate();
  const auto& flight = cfg.plant.flight;
  const std::size_t channels = channel_count(cfg.plant.taps);
  const std::vector<double> neutral(channels, 0.0);

  TrainingResult result{PpoAgent(cfg.actor_spec(), cfg.ppo, derive_seed(seed, "agent")), {}, {}, {}};
  GustPlant plant(cfg.plant, derive_seed(seed, "plant"));
  Rng gust_rng(derive_seed(seed, "gusts"));
  Rng action_rng(derive_seed(seed, "actions"));

  std::vector<Transition> rollout;
  rollout.reserve(static_cast<std::size_t>(flight.episode_steps));
  double window_sum = 0.0;

  for (int episode = 0; episode < cfg.training.episodes; ++episode) {
    EpisodeLog entry;
    entry.episode = episode;
    try {
      entry.deflection_deg = training_deflection(episode, flight, gust_rng);
      const auto first = plant.reset(GustSchedule::training_hold(entry.deflection_deg, flight));
      Observation obs(channels, neutral);
      obs.push(first);

      rollout.clear();
      for (int step = 0; step < flight.episode_steps; ++step) {
        const auto choice = result.agent.select_action(obs, ActionMode::Sample, action_rng);
        const auto out = plant.step(choice.index);
        const double reward = reward_from_lift(out.lift_n, flight.baseline_lift_n);
        if (!std::isfinite(reward)) throw std::runtime_error("non-finite reward");
        rollout.push_back({obs, choice.index, choice.log_prob, choice.value, reward, step + 1 == flight.episode_steps});
        entry.total_reward += reward;
        obs.push(out.measurement);
      }
      const double bootstrap = forward_critic(result.agent.critic(), obs);
      entry.update = result.agent.update(rollout, bootstrap);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw std::runtime_error("training aborted at episode " + std::to_string(episode) + ": " + e.what());
    }

    result.episode_rewards.push_back(entry.total_reward);
    window_sum += entry.total_reward;
    if (episode >= kRunningAverageWindow) window_sum -= result.episode_rewards[episode - kRunningAverageWindow];
    entry.running_average = window_sum / std::min(episode + 1, kRunningAverageWindow);
    result.running_average.push_back(entry.running_average);
    result.log.push_back(entry);
    if (on_episode) on_episode(entry);
  }
  return result;
}

std::size_t GreedyPolicy::act(const Observation& observation, const PlantState&, const PlantConfig&) {
  return greedy_action(forward_actor(actor_, observation));
}

namespace {

struct Episode {
  std::vector<double> lift;
  GustWindow window;
};

void require_testing_deflection(const FlightConditionConfig& flight, double deflection_deg) {
  if (std::find(flight.testing_deflections_deg.begin(), flight.testing_deflections_deg.end(), deflection_deg) ==
      flight.testing_deflections_deg.end())
    throw std::invalid_argument("gust test: deflection " + std::to_string(deflection_deg) +
                                " is not one of the configured testing deflections");
}

Episode run_test_episode(Controller& controller, const RunConfig& cfg, double deflection_deg, std::uint64_t seed) {
  const auto& flight = cfg.plant.flight;

  const std::size_t channels = channel_count(cfg.plant.taps);
  GustPlant plant(cfg.plant, seed);
  const auto schedule = GustSchedule::test_quarters(deflection_deg, flight);
  plant.reset(schedule);

  Observation obs(channels, std::vector<double>(channels, 0.0));
  for (int i = 0; i < cfg.training.init_steps; ++i) obs.push(plant.sense());

  Episode ep;
  const int steps = schedule.total_steps(flight.timestep_s);
  ep.lift.reserve(static_cast<std::size_t>(steps));
  for (int step = 0; step < steps; ++step) {
    const auto action = controller.act(obs, plant.state(), plant.config());
    const auto out = plant.step(action);
    ep.lift.push_back(out.lift_n);
    obs.push(out.measurement);
  }
  ep.window = gust_window(schedule, flight.timestep_s, plant.wake_delay());
  return ep;
}

}  // namespace

BaselineTrace compute_baseline(const RunConfig& cfg, double deflection_deg, std::uint64_t seed) {
  ConstantAction hold(cfg.plant.flight.zero_action_index());
  auto ep = run_test_episode(hold, cfg, deflection_deg, seed);
  BaselineTrace out;
  out.condition = cfg.plant.flight.name;
  out.deflection_deg = deflection_deg;
  double sum = 0.0;
  for (int i = 0; i < ep.window.length; ++i)
    sum += ep.lift[static_cast<std::size_t>(ep.window.first_step + i)] - cfg.plant.flight.baseline_lift_n;
  out.mean_delta_n = sum / ep.window.length;
  out.lift_n = std::move(ep.lift);
  return out;
}

GustTestRecord run_gust_test(Controller& controller, const RunConfig& cfg, const GustTestSpec& test,
                             const BaselineTrace& baseline) {
  const auto& flight = cfg.plant.flight;
  require_testing_deflection(flight, test.deflection_deg);
  auto ep = run_test_episode(controller, cfg, test.deflection_deg, test.seed);
  if (baseline.lift_n.size() != ep.lift.size())
    throw std::invalid_argument("gust test: baseline trace length does not match the test episode");

  GustTestRecord record;
  record.controller_id = test.controller_id;
  record.condition = flight.name;
  record.taps = cfg.plant.taps;
  record.deflection_deg = test.deflection_deg;
  record.repetition = test.repetition;
  record.seed = test.seed;

  const auto trace = grp_timeseries(ep.lift, baseline.lift_n, flight.baseline_lift_n,
                                    static_cast<std::size_t>(ep.window.first_step),
                                    static_cast<std::size_t>(ep.window.length), flight.timestep_s);
  record.lift_trace = std::move(ep.lift);
  record.grp_trace = trace.grp;
  record.baseline_delta_n = trace.baseline_delta_n;
  record.settled_grp = settled_grp(trace);
  record.rise_time_s = rise_time(trace, record.settled_grp);
  record.metadata_hash = sha256_hex(config_hash(cfg) + "|" + record.key() + "|" + std::to_string(test.seed));
  return record;
}

GustTestRecord run_gust_test(Controller& controller, const RunConfig& cfg, const GustTestSpec& test) {
  const auto baseline = compute_baseline(cfg, test.deflection_deg, derive_seed(test.seed, "baseline"));
  return run_gust_test(controller, cfg, test, baseline);
}

}  // namespace gustrl
