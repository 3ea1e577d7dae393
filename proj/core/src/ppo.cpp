#include "gustrl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "gustrl/error.hpp"

namespace gustrl {

void PpoHyperparams::validate() const {
  std::vector<std::string> problems;
  if (!(gamma > 0.0 && gamma <= 1.0)) problems.emplace_back("ppo.gamma must be in (0, 1]");
  if (!(gae_lambda > 0.0 && gae_lambda <= 1.0)) problems.emplace_back("ppo.gae_lambda must be in (0, 1]");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) problems.emplace_back("ppo.clip_epsilon must be in (0, 1)");
  if (epochs <= 0) problems.emplace_back("ppo.epochs must be > 0");
  if (minibatch_size <= 0) problems.emplace_back("ppo.minibatch_size must be > 0");
  if (horizon <= 0) problems.emplace_back("ppo.horizon must be > 0");
  if (!(entropy_coef >= 0.0)) problems.emplace_back("ppo.entropy_coef must be >= 0");
  if (!(value_coef > 0.0)) problems.emplace_back("ppo.value_coef must be > 0");
  if (!(max_grad_norm > 0.0)) problems.emplace_back("ppo.max_grad_norm must be > 0");
  if (!(learning_rate >= 0.0)) problems.emplace_back("ppo.learning_rate must be >= 0");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

double reward_from_lift(double lift_n, double baseline_lift_n) {
  const double delta = lift_n - baseline_lift_n;
  return -10.0 * delta * delta;
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, double bootstrap_value,
                      double gamma, double lambda, std::span<const bool> dones) {
  if (rewards.size() != values.size()) throw std::invalid_argument("compute_gae: rewards and values differ in length");
  if (!dones.empty() && dones.size() != rewards.size())
    throw std::invalid_argument("compute_gae: dones length differs from rewards");
  const std::size_t n = rewards.size();
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const bool cut = !dones.empty() && dones[i];
    const double next_value = cut ? 0.0 : (i + 1 < n ? values[i + 1] : bootstrap_value);
    const double delta = rewards[i] + gamma * next_value - values[i];
    running = delta + (cut ? 0.0 : gamma * lambda * running);
    out.advantages[i] = running;
    out.returns[i] = running + values[i];
  }
  return out;
}

std::vector<double> normalize_advantages(std::span<const double> advantages) {
  std::vector<double> out(advantages.begin(), advantages.end());
  if (out.empty()) return out;
  const double n = static_cast<double>(out.size());
  const double mean = std::accumulate(out.begin(), out.end(), 0.0) / n;
  double var = 0.0;
  for (double a : out) var += (a - mean) * (a - mean);
  var /= n;
  if (var < 1e-12) return out;
  const double sd = std::sqrt(var);
  for (double& a : out) a = (a - mean) / sd;
  return out;
}

double policy_entropy(std::span<const double> probabilities) {
  double h = 0.0;
  for (double p : probabilities)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

LossGradient actor_loss(const RowMatrix& logits, std::span<const std::size_t> actions,
                        std::span<const double> old_log_probs, std::span<const double> advantages,
                        double clip_epsilon, double entropy_coef) {
  const auto batch = logits.rows();
  const auto k = logits.cols();
  if (static_cast<std::size_t>(batch) != actions.size() || actions.size() != old_log_probs.size() ||
      actions.size() != advantages.size())
    throw std::invalid_argument("actor_loss: batch size mismatch");

  const RowMatrix logp = log_softmax_rows(logits);
  LossGradient out;
  out.d_outputs = RowMatrix::Zero(batch, k);
  const double inv_b = 1.0 / static_cast<double>(batch);
  double surrogate_sum = 0.0;
  double entropy_sum = 0.0;
  int clipped = 0;
  double ratio_sum = 0.0;

  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto a = static_cast<Eigen::Index>(actions[static_cast<std::size_t>(b)]);
    const double adv = advantages[static_cast<std::size_t>(b)];
    const double ratio = std::exp(logp(b, a) - old_log_probs[static_cast<std::size_t>(b)]);
    const double clipped_ratio = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
    const double unclipped_term = ratio * adv;
    const double clipped_term = clipped_ratio * adv;
    ratio_sum += ratio;
    if (clipped_ratio != ratio) ++clipped;

    // min() picks the clipped branch only when it is strictly smaller; that branch is constant in theta.
    const bool use_clipped = clipped_term < unclipped_term;
    surrogate_sum += use_clipped ? clipped_term : unclipped_term;

    double entropy = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) entropy -= std::exp(logp(b, j)) * logp(b, j);
    entropy_sum += entropy;

    for (Eigen::Index j = 0; j < k; ++j) {
      const double p = std::exp(logp(b, j));
      double g = 0.0;
      if (!use_clipped) g -= unclipped_term * ((j == a ? 1.0 : 0.0) - p);
      // dH/dz_j = -p_j (log p_j + H)
      g -= entropy_coef * (-p * (logp(b, j) + entropy));
      out.d_outputs(b, j) = g * inv_b;
    }
  }
  out.entropy = entropy_sum * inv_b;
  out.loss = -surrogate_sum * inv_b - entropy_coef * out.entropy;
  out.mean_ratio = ratio_sum * inv_b;
  out.clip_fraction = clipped * inv_b;
  return out;
}

LossGradient critic_loss(const RowMatrix& values, std::span<const double> returns, double value_coef) {
  if (values.cols() != 1 || static_cast<std::size_t>(values.rows()) != returns.size())
    throw std::invalid_argument("critic_loss: shape mismatch");
  const auto batch = values.rows();
  LossGradient out;
  out.d_outputs = RowMatrix::Zero(batch, 1);
  const double inv_b = 1.0 / static_cast<double>(batch);
  double sum = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const double err = values(b, 0) - returns[static_cast<std::size_t>(b)];
    sum += err * err;
    out.d_outputs(b, 0) = 2.0 * value_coef * err * inv_b;
  }
  out.loss = value_coef * sum * inv_b;
  return out;
}

LossGradient entropy_loss(const RowMatrix& logits) {
  const auto batch = logits.rows();
  std::vector<std::size_t> actions(static_cast<std::size_t>(batch), 0);
  std::vector<double> zeros(static_cast<std::size_t>(batch), 0.0);
  return actor_loss(logits, actions, zeros, zeros, 0.2, 1.0);
}

std::size_t greedy_action(std::span<const double> probabilities) {
  return static_cast<std::size_t>(std::max_element(probabilities.begin(), probabilities.end()) -
                                  probabilities.begin());
}

double clip_grad_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grads) g *= scale;
  }
  return norm;
}

NetworkSpec critic_spec_for(NetworkSpec actor_spec) {
  actor_spec.outputs = 1;
  return actor_spec;
}

PpoAgent::PpoAgent(const NetworkSpec& actor_spec, const PpoHyperparams& hp, std::uint64_t seed)
    : actor_(actor_spec, derive_seed(seed, "actor")),
      critic_(critic_spec_for(actor_spec), derive_seed(seed, "critic")),
      hp_(hp),
      shuffle_rng_(derive_seed(seed, "shuffle")) {
  hp_.validate();
  actor_opt_ = AdamState::for_parameters(actor_.parameters().size(), hp_.learning_rate);
  critic_opt_ = AdamState::for_parameters(critic_.parameters().size(), hp_.learning_rate);
}

PpoAgent::PpoAgent(Network actor, AdamState actor_opt, Network critic, AdamState critic_opt,
                   const PpoHyperparams& hp, std::uint64_t seed)
    : actor_(std::move(actor)),
      critic_(std::move(critic)),
      actor_opt_(std::move(actor_opt)),
      critic_opt_(std::move(critic_opt)),
      hp_(hp),
      shuffle_rng_(derive_seed(seed, "shuffle")) {
  hp_.validate();
  if (critic_.spec() != critic_spec_for(actor_.spec()))
    throw SpecMismatchError("PpoAgent: critic trunk does not match the actor");
}

ActionChoice PpoAgent::select_action(const Observation& observation, ActionMode mode, Rng& rng) const {
  const auto probs = forward_actor(actor_, observation);
  ActionChoice choice;
  if (mode == ActionMode::Greedy) {
    choice.index = greedy_action(probs);
  } else {
    std::discrete_distribution<std::size_t> dist(probs.begin(), probs.end());
    choice.index = dist(rng);
  }
  choice.log_prob = std::log(probs[choice.index]);
  choice.value = forward_critic(critic_, observation);
  return choice;
}

UpdateStats PpoAgent::update(std::span<const Transition> rollout, double bootstrap_value) {
  UpdateStats stats;
  if (rollout.empty()) return stats;
  const std::size_t n = rollout.size();

  std::vector<double> rewards(n), values(n);
  // Only interior terminal flags cut the recursion; the final step bootstraps.
  auto dones = std::make_unique<bool[]>(n);
  for (std::size_t i = 0; i < n; ++i) {
    rewards[i] = rollout[i].reward;
    values[i] = rollout[i].value;
    dones[i] = rollout[i].done && i + 1 < n;
  }
  const auto gae = compute_gae(rewards, values, bootstrap_value, hp_.gamma, hp_.gae_lambda, {dones.get(), n});
  const auto advantages = normalize_advantages(gae.advantages);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> actor_grad(actor_.parameters().size());
  std::vector<double> critic_grad(critic_.parameters().size());
  const auto mb = static_cast<std::size_t>(hp_.minibatch_size);

  for (int epoch = 0; epoch < hp_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng_);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t end = std::min(n, start + mb);
      const std::size_t b = end - start;
      std::vector<Observation> obs;
      obs.reserve(b);
      std::vector<std::size_t> actions(b);
      std::vector<double> old_logp(b), adv(b), ret(b);
      for (std::size_t i = 0; i < b; ++i) {
        const auto& t = rollout[order[start + i]];
        obs.push_back(t.observation);
        actions[i] = t.action;
        old_logp[i] = t.log_prob;
        adv[i] = advantages[order[start + i]];
        ret[i] = gae.returns[order[start + i]];
      }
      const RowMatrix inputs = stack_observations(obs);

      ForwardCache actor_cache, critic_cache;
      const RowMatrix logits = actor_.forward(inputs, &actor_cache);
      const RowMatrix value_out = critic_.forward(inputs, &critic_cache);
      const auto a_loss = actor_loss(logits, actions, old_logp, adv, hp_.clip_epsilon, hp_.entropy_coef);
      const auto c_loss = critic_loss(value_out, ret, hp_.value_coef);
      if (!std::isfinite(a_loss.loss) || !std::isfinite(c_loss.loss)) {
        throw std::runtime_error("ppo update: non-finite loss (actor " + std::to_string(a_loss.loss) + ", critic " +
                                 std::to_string(c_loss.loss) + ") at epoch " + std::to_string(epoch));
      }

      std::fill(actor_grad.begin(), actor_grad.end(), 0.0);
      std::fill(critic_grad.begin(), critic_grad.end(), 0.0);
      actor_.backward(actor_cache, a_loss.d_outputs, actor_grad);
      critic_.backward(critic_cache, c_loss.d_outputs, critic_grad);
      clip_grad_norm(actor_grad, hp_.max_grad_norm);
      clip_grad_norm(critic_grad, hp_.max_grad_norm);
      adam_step(actor_.parameters(), actor_grad, actor_opt_);
      adam_step(critic_.parameters(), critic_grad, critic_opt_);

      stats.mean_ratio += a_loss.mean_ratio;
      stats.clip_fraction += a_loss.clip_fraction;
      stats.actor_loss += a_loss.loss;
      stats.critic_loss += c_loss.loss;
      stats.entropy += a_loss.entropy;
      stats.minibatches += 1;
    }
  }
  const double m = stats.minibatches;
  stats.mean_ratio /= m;
  stats.clip_fraction /= m;
  stats.actor_loss /= m;
  stats.critic_loss /= m;
  stats.entropy /= m;
  return stats;
}

}  // namespace gustrl
