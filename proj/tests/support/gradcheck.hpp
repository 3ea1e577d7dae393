#pragma once

// Analytic-versus-central-difference gradient check of the PPO losses through a
// small network. Parameters whose +-h perturbation flips a ReLU or a clip branch
// sit on a kink where the derivative is undefined; they are counted and skipped.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gustrl/nn.hpp"
#include "gustrl/ppo.hpp"
#include "oracles.hpp"

namespace gradcheck {

enum class Loss { Actor, Critic, Entropy };

struct Result {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::size_t parameters = 0;
};

inline constexpr double kStep = 1e-4;
/// Below this magnitude on both sides a gradient entry is compared absolutely.
inline constexpr double kTinyGradient = 1e-8;

inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kTinyGradient});
}

struct Problem {
  gustrl::Network net;
  gustrl::RowMatrix inputs;
  std::vector<std::size_t> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> returns;
  double clip = 0.2;
  double entropy_coef = 0.01;
};

/// A random network with at most 500 parameters for the given channel count.
inline Problem random_problem(int channels, Loss loss, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> filters(1, 2), hidden(4, 8), batch(3, 6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  gustrl::NetworkSpec spec;
  spec.input_channels = channels;
  spec.filters = filters(rng);
  spec.hidden = hidden(rng);
  spec.outputs = loss == Loss::Critic ? 1 : (u(rng) < 0 ? 3 : 7);
  while (spec.parameter_count() > 500) --spec.hidden;

  Problem p{gustrl::Network(spec, rng()), {}, {}, {}, {}, {}};
  for (auto& w : p.net.parameters()) w = 0.6 * u(rng);
  const int n = batch(rng);
  p.inputs.resize(n, spec.input_channels * spec.input_length);
  for (Eigen::Index i = 0; i < p.inputs.size(); ++i) p.inputs.data()[i] = 2.0 * u(rng);

  const auto logp = gustrl::log_softmax_rows(p.net.forward(p.inputs));
  std::uniform_int_distribution<std::size_t> act(0, static_cast<std::size_t>(spec.outputs - 1));
  for (int i = 0; i < n; ++i) {
    const auto a = act(rng);
    p.actions.push_back(a);
    // Old policy within +-40% of the current probability: some samples clip, most do not.
    p.old_log_probs.push_back(logp(i, static_cast<Eigen::Index>(a)) + 0.4 * u(rng));
    p.advantages.push_back(2.0 * u(rng));
    p.returns.push_back(3.0 * u(rng));
  }
  p.entropy_coef = 0.05 + 0.5 * std::abs(u(rng));
  return p;
}

/// Branch pattern of the forward pass: ReLU activity and, for the actor, the clip branch per sample.
inline std::vector<bool> signature(const Problem& p, const gustrl::Network& net, Loss loss) {
  gustrl::ForwardCache cache;
  const auto out = net.forward(p.inputs, &cache);
  std::vector<bool> sig;
  for (Eigen::Index i = 0; i < cache.hidden1.size(); ++i) sig.push_back(cache.hidden1.data()[i] > 0.0);
  for (Eigen::Index i = 0; i < cache.hidden2.size(); ++i) sig.push_back(cache.hidden2.data()[i] > 0.0);
  if (loss == Loss::Actor) {
    const auto logp = gustrl::log_softmax_rows(out);
    for (std::size_t b = 0; b < p.actions.size(); ++b) {
      const double r = std::exp(logp(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(p.actions[b])) -
                                p.old_log_probs[b]);
      const double c = std::clamp(r, 1.0 - p.clip, 1.0 + p.clip);
      sig.push_back(c * p.advantages[b] < r * p.advantages[b]);
    }
  }
  return sig;
}

inline gustrl::LossGradient evaluate(const Problem& p, const gustrl::RowMatrix& out, Loss loss) {
  switch (loss) {
    case Loss::Actor:
      return gustrl::actor_loss(out, p.actions, p.old_log_probs, p.advantages, p.clip, p.entropy_coef);
    case Loss::Critic:
      return gustrl::critic_loss(out, p.returns, 0.5);
    case Loss::Entropy:
      return gustrl::entropy_loss(out);
  }
  return {};
}

inline Result check(const Problem& p, Loss loss) {
  Result r;
  gustrl::ForwardCache cache;
  const auto out = p.net.forward(p.inputs, &cache);
  const auto lg = evaluate(p, out, loss);
  std::vector<double> analytic(p.net.parameters().size(), 0.0);
  p.net.backward(cache, lg.d_outputs, analytic);

  const auto base_sig = signature(p, p.net, loss);
  gustrl::Network probe = p.net;
  auto params = probe.parameters();
  r.parameters = params.size();
  // Central difference at h and h/2 combined by Richardson extrapolation (O(h^4)).
  auto central = [&](std::size_t i, double h, bool& smooth) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = evaluate(p, probe.forward(p.inputs), loss).loss;
    smooth = smooth && signature(p, probe, loss) == base_sig;
    params[i] = keep - h;
    const double down = evaluate(p, probe.forward(p.inputs), loss).loss;
    smooth = smooth && signature(p, probe, loss) == base_sig;
    params[i] = keep;
    return (up - down) / (2.0 * h);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    bool smooth = true;
    const double coarse = central(i, kStep, smooth);
    const double fine = central(i, kStep / 2, smooth);
    if (!smooth) {
      ++r.skipped;
      continue;
    }
    const double numeric = (4.0 * fine - coarse) / 3.0;
    r.max_rel_error = std::max(r.max_rel_error, rel_error(analytic[i], numeric));
    ++r.checked;
  }
  return r;
}

}  // namespace gradcheck
