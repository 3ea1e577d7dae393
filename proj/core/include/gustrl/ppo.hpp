#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gustrl/domain.hpp"
#include "gustrl/nn.hpp"
#include "gustrl/seed.hpp"

namespace gustrl {

struct PpoHyperparams {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  int epochs = 4;
  int minibatch_size = 64;
  int horizon = 200;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  double learning_rate = 3e-5;

  void validate() const;
};

struct Transition {
  Observation observation;
  std::size_t action = 0;
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  bool done = false;
};

/// -10 * (lift - baseline)^2.
double reward_from_lift(double lift_n, double baseline_lift_n);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Generalized advantage estimation. `dones[t]` cuts the recursion after step t;
/// `bootstrap_value` stands in for V(s_T) when the last step is not terminal.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, double bootstrap_value,
                      double gamma, double lambda, std::span<const bool> dones = {});

/// Zero-mean, unit-variance copy; returned unchanged when the variance is below 1e-12.
std::vector<double> normalize_advantages(std::span<const double> advantages);

/// Loss value with its gradient with respect to the network outputs.
struct LossGradient {
  double loss = 0.0;
  RowMatrix d_outputs;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double entropy = 0.0;
};

/// -mean(min(rA, clip(r, 1-eps, 1+eps)A)) - entropy_coef * mean(H) over a minibatch of logits.
LossGradient actor_loss(const RowMatrix& logits, std::span<const std::size_t> actions,
                        std::span<const double> old_log_probs, std::span<const double> advantages,
                        double clip_epsilon, double entropy_coef);
/// value_coef * mean((V - R)^2).
LossGradient critic_loss(const RowMatrix& values, std::span<const double> returns, double value_coef);
/// -mean(H): the entropy bonus on its own.
LossGradient entropy_loss(const RowMatrix& logits);

double policy_entropy(std::span<const double> probabilities);

enum class ActionMode { Sample, Greedy };

struct ActionChoice {
  std::size_t index = 0;
  double log_prob = 0.0;
  double value = 0.0;
};

/// Greedy picks the most probable action, lowest index on ties.
std::size_t greedy_action(std::span<const double> probabilities);

struct UpdateStats {
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  int minibatches = 0;
};

/// Separate actor and critic networks with their own Adam states.
class PpoAgent {
 public:
  PpoAgent(const NetworkSpec& actor_spec, const PpoHyperparams& hp, std::uint64_t seed);
  PpoAgent(Network actor, AdamState actor_opt, Network critic, AdamState critic_opt, const PpoHyperparams& hp,
           std::uint64_t seed);

  ActionChoice select_action(const Observation& observation, ActionMode mode, Rng& rng) const;

  /// Runs the clipped-surrogate update over one rollout. Throws on a non-finite loss
  /// before any parameter is touched for that minibatch.
  UpdateStats update(std::span<const Transition> rollout, double bootstrap_value);

  const Network& actor() const noexcept { return actor_; }
  const Network& critic() const noexcept { return critic_; }
  const AdamState& actor_optimizer() const noexcept { return actor_opt_; }
  const AdamState& critic_optimizer() const noexcept { return critic_opt_; }
  const PpoHyperparams& hyperparams() const noexcept { return hp_; }

 private:
  Network actor_;
  Network critic_;
  AdamState actor_opt_;
  AdamState critic_opt_;
  PpoHyperparams hp_;
  Rng shuffle_rng_;
};

/// Critic spec matching an actor spec (same trunk, scalar head).
NetworkSpec critic_spec_for(NetworkSpec actor_spec);

/// Scales `grads` so its Euclidean norm is at most `max_norm`; returns the norm before clipping.
double clip_grad_norm(std::span<double> grads, double max_norm);

}  // namespace gustrl
