#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "gradcheck.hpp"
#include "gustrl/ppo.hpp"
#include "oracles.hpp"

using namespace gustrl;

TEST(Reward, NegativeTenSquaredLiftError) {
  EXPECT_NEAR(reward_from_lift(3.6, 3.5), -0.1, 1e-15);
  EXPECT_NEAR(reward_from_lift(3.3, 3.5), -0.4, 1e-15);
  EXPECT_EQ(reward_from_lift(3.5, 3.5), 0.0);
}

TEST(Gae, MatchesBruteForceSums) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0), unit(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 50);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = len(rng);
    std::vector<double> r(n), v(n);
    std::vector<bool> dones(n);
    auto flags = std::make_unique<bool[]>(n);
    for (int i = 0; i < n; ++i) {
      r[i] = u(rng);
      v[i] = u(rng);
      flags[i] = dones[i] = trial % 2 == 1 && unit(rng) < 0.1;
    }
    const double gamma = unit(rng), lambda = unit(rng), boot = u(rng);
    const auto got = compute_gae(r, v, boot, gamma, lambda, trial % 2 ? std::span<const bool>(flags.get(), n)
                                                                      : std::span<const bool>{});
    const auto want = oracle::gae(r, v, boot, gamma, lambda, trial % 2 ? dones : std::vector<bool>{});
    for (int i = 0; i < n; ++i) {
      ASSERT_NEAR(got.advantages[i], want[i], 1e-12) << "trial " << trial << " step " << i;
      ASSERT_NEAR(got.returns[i], want[i] + v[i], 1e-12);
    }
  }
}

TEST(Gae, LimitingCases) {
  const std::vector<double> r{1.0, 2.0, 3.0}, v{0.5, 0.25, 0.125};
  const auto td = compute_gae(r, v, 2.0, 0.9, 0.0);
  EXPECT_NEAR(td.advantages[0], 1.0 + 0.9 * 0.25 - 0.5, 1e-15);
  EXPECT_NEAR(td.advantages[2], 3.0 + 0.9 * 2.0 - 0.125, 1e-15);
  const auto mc = compute_gae(r, v, 2.0, 1.0, 1.0);
  EXPECT_NEAR(mc.advantages[0], 1.0 + 2.0 + 3.0 + 2.0 - 0.5, 1e-14);
  EXPECT_THROW(compute_gae(r, std::vector<double>{1.0}, 0.0, 0.9, 0.9), std::invalid_argument);
}

TEST(Advantages, Normalized) {
  const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
  const auto n = normalize_advantages(a);
  const double mean = std::accumulate(n.begin(), n.end(), 0.0) / 4;
  double var = 0.0;
  for (double x : n) var += (x - mean) * (x - mean);
  EXPECT_NEAR(mean, 0.0, 1e-15);
  EXPECT_NEAR(var / 4, 1.0, 1e-6);
  const std::vector<double> flat{0.3, 0.3};
  EXPECT_EQ(normalize_advantages(flat), flat);
}

TEST(Losses, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(77);
  for (auto loss : {gradcheck::Loss::Actor, gradcheck::Loss::Critic, gradcheck::Loss::Entropy})
    for (int channels : {2, 4, 7}) {
      const auto problem = gradcheck::random_problem(channels, loss, rng);
      ASSERT_LE(problem.net.parameters().size(), 500u);
      const auto r = gradcheck::check(problem, loss);
      EXPECT_LT(r.max_rel_error, 1e-5) << "loss " << static_cast<int>(loss) << " channels " << channels;
      EXPECT_GT(r.checked, r.parameters * 9 / 10);
    }
}

TEST(Losses, ActorAtRatioOne) {
  RowMatrix logits(2, 3);
  logits << 0.1, 0.2, -0.3, 1.0, 0.0, 0.5;
  const auto logp = log_softmax_rows(logits);
  const std::vector<std::size_t> actions{1, 2};
  const std::vector<double> old{logp(0, 1), logp(1, 2)}, adv{0.5, -1.5};
  const auto l = actor_loss(logits, actions, old, adv, 0.2, 0.0);
  EXPECT_NEAR(l.loss, 0.5, 1e-15);  // -mean(A)
  EXPECT_NEAR(l.mean_ratio, 1.0, 1e-15);
  EXPECT_EQ(l.clip_fraction, 0.0);
}

TEST(Losses, ClippedSampleHasNoSurrogateGradient) {
  RowMatrix logits(1, 3);
  logits << 2.0, 0.0, 0.0;
  const auto logp = log_softmax_rows(logits);
  const std::vector<std::size_t> actions{0};
  const std::vector<double> old{logp(0, 0) - 0.5}, adv{1.0};  // ratio e^0.5 > 1.2, positive advantage
  const auto l = actor_loss(logits, actions, old, adv, 0.2, 0.0);
  EXPECT_EQ(l.clip_fraction, 1.0);
  EXPECT_NEAR(l.loss, -1.2, 1e-15);
  EXPECT_EQ(l.d_outputs.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Entropy, UniformIsLogN) {
  const std::vector<double> p(7, 1.0 / 7);
  EXPECT_NEAR(policy_entropy(p), std::log(7.0), 1e-15);
  const std::vector<double> sure{0.0, 1.0, 0.0};
  EXPECT_EQ(policy_entropy(sure), 0.0);
}

TEST(Actions, GreedyTiesTakeLowestIndex) {
  EXPECT_EQ(greedy_action(std::vector<double>{0.2, 0.4, 0.4}), 1u);
  EXPECT_EQ(greedy_action(std::vector<double>{0.5, 0.1, 0.4}), 0u);
}

TEST(GradNorm, ClipsToMax) {
  std::vector<double> g{3.0, 4.0};
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g[0], 0.6, 1e-15);
  EXPECT_NEAR(g[1], 0.8, 1e-15);
  std::vector<double> small{0.1};
  clip_grad_norm(small, 1.0);
  EXPECT_EQ(small[0], 0.1);
}

namespace {

std::vector<Transition> synthetic_rollout(std::size_t channels, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Transition> out;
  for (int i = 0; i < n; ++i) {
    Observation obs(channels);
    for (int k = 0; k < 10; ++k) {
      std::vector<double> step(channels);
      for (auto& x : step) x = u(rng);
      obs.push(step);
    }
    out.push_back({obs, static_cast<std::size_t>(i % 3), std::log(1.0 / 3.0), 0.0, u(rng), i + 1 == n});
  }
  return out;
}

NetworkSpec tiny_actor(int channels, int outputs) {
  NetworkSpec s;
  s.input_channels = channels;
  s.filters = 4;
  s.hidden = 16;
  s.outputs = outputs;
  return s;
}

}  // namespace

TEST(Agent, UpdateIsDeterministic) {
  PpoHyperparams hp;
  hp.learning_rate = 1e-3;
  const auto rollout = synthetic_rollout(4, 100, 5);
  PpoAgent a(tiny_actor(4, 3), hp, 11), b(tiny_actor(4, 3), hp, 11);
  const auto sa = a.update(rollout, 0.0);
  const auto sb = b.update(rollout, 0.0);
  EXPECT_EQ(sa.actor_loss, sb.actor_loss);
  EXPECT_EQ(sa.minibatches, 4 * 2);
  const auto pa = a.actor().parameters(), pb = b.actor().parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) ASSERT_EQ(pa[i], pb[i]) << i;
  EXPECT_EQ(a.critic_optimizer(), b.critic_optimizer());
}

TEST(Agent, UpdateMovesTowardRewardedAction) {
  PpoHyperparams hp;
  hp.learning_rate = 1e-3;
  hp.entropy_coef = 0.0;
  // Action 2 always pays, the others always cost.
  auto rollout = synthetic_rollout(2, 64, 6);
  for (auto& t : rollout) t.reward = t.action == 2 ? 1.0 : -1.0;
  PpoAgent agent(tiny_actor(2, 3), hp, 3);
  const double before = forward_actor(agent.actor(), rollout[0].observation)[2];
  for (int i = 0; i < 5; ++i) agent.update(rollout, 0.0);
  EXPECT_GT(forward_actor(agent.actor(), rollout[0].observation)[2], before);
}

TEST(Agent, SamplingFollowsPolicy) {
  PpoAgent agent(tiny_actor(2, 3), PpoHyperparams{}, 1);
  Observation obs(2);
  const auto probs = forward_actor(agent.actor(), obs);
  Rng rng(2);
  std::vector<int> counts(3, 0);
  const int n = 30000;
  for (int i = 0; i < n; ++i) {
    const auto c = agent.select_action(obs, ActionMode::Sample, rng);
    ++counts[c.index];
    ASSERT_NEAR(c.log_prob, std::log(probs[c.index]), 1e-12);
  }
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(counts[k] / double(n), probs[k], 0.015);
  EXPECT_EQ(agent.select_action(obs, ActionMode::Greedy, rng).index, greedy_action(probs));
}

TEST(Agent, RejectsNonFiniteLoss) {
  PpoAgent agent(tiny_actor(2, 3), PpoHyperparams{}, 1);
  auto rollout = synthetic_rollout(2, 8, 1);
  rollout[3].reward = std::numeric_limits<double>::infinity();
  EXPECT_THROW(agent.update(rollout, 0.0), std::runtime_error);
}

TEST(Hyperparams, Validation) {
  PpoHyperparams hp;
  EXPECT_NO_THROW(hp.validate());
  hp.clip_epsilon = 0.0;
  EXPECT_ANY_THROW(hp.validate());
}
