#include <benchmark/benchmark.h>

#include <random>

#include "gustrl/config.hpp"
#include "gustrl/harness.hpp"
#include "gustrl/metrics.hpp"
#include "gustrl/nn.hpp"
#include "gustrl/plant.hpp"
#include "gustrl/ppo.hpp"

using namespace gustrl;

namespace {

RowMatrix random_batch(const NetworkSpec& spec, int rows) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RowMatrix x(rows, spec.input_channels * spec.input_length);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  return x;
}

// Full-size actor, one observation: the per-step cost of acting.
void BM_ActorForwardSingle(benchmark::State& state) {
  NetworkSpec spec;
  spec.input_channels = static_cast<int>(state.range(0));
  const Network net(spec, 1);
  const auto x = random_batch(spec, 1);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
}
BENCHMARK(BM_ActorForwardSingle)->Arg(2)->Arg(4)->Arg(7);

// One minibatch of forward + backward, as inside a PPO update.
void BM_ForwardBackwardMinibatch(benchmark::State& state) {
  NetworkSpec spec;
  const Network net(spec, 1);
  const auto x = random_batch(spec, static_cast<int>(state.range(0)));
  std::vector<double> grads(net.parameters().size());
  for (auto _ : state) {
    ForwardCache cache;
    const auto y = net.forward(x, &cache);
    net.backward(cache, y, grads);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackwardMinibatch)->Arg(50)->Arg(200);

void BM_PlantStep(benchmark::State& state) {
  GustPlant plant(PlantConfig::defaults(FlightCondition::HighLift, TapConfig::Six), 1);
  const auto schedule = GustSchedule::training_hold(10.0, plant.config().flight);
  plant.reset(schedule);
  std::size_t a = 0;
  int steps = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(plant.step(a));
    a = (a + 1) % 7;
    if (++steps == 200) {
      plant.reset(schedule);
      steps = 0;
    }
  }
}
BENCHMARK(BM_PlantStep);

void BM_PpoUpdate(benchmark::State& state) {
  const auto cfg = RunConfig::defaults(FlightCondition::HighLift, TapConfig::Six);
  PpoAgent agent(cfg.actor_spec(), cfg.ppo, 1);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Transition> rollout;
  for (int i = 0; i < cfg.plant.flight.episode_steps; ++i) {
    Observation obs(7);
    for (int k = 0; k < 10; ++k) {
      std::vector<double> v(7);
      for (auto& x : v) x = u(rng);
      obs.push(v);
    }
    rollout.push_back({obs, static_cast<std::size_t>(i % 7), std::log(1.0 / 7), 0.0, -0.01, false});
  }
  for (auto _ : state) benchmark::DoNotOptimize(agent.update(rollout, 0.0));
}
BENCHMARK(BM_PpoUpdate)->Unit(benchmark::kMillisecond);

void BM_ClusterBootstrap(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(80.0, 5.0);
  ClusteredSample a(10, std::vector<double>(60)), b(10, std::vector<double>(60));
  for (auto* s : {&a, &b})
    for (auto& c : *s)
      for (auto& v : c) v = n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(cluster_bootstrap_p_value(a, b, 10000, 4));
}
BENCHMARK(BM_ClusterBootstrap)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
