#include <benchmark/benchmark.h>

#include "smtw/baselines.hpp"
#include "smtw/behaviors.hpp"
#include "smtw/cascade.hpp"

using namespace smtw;

namespace {

EnvInstance bench_instance(uint64_t seed = 1) {
  EnvConfig cfg{5, 2000, seed};
  Rng rng(seed);
  return generate_instance(cfg, rng);
}

Episode bench_episode(int steps) {
  EnvInstance inst = bench_instance(2);
  Rng rng(3);
  Rollout roll(inst, steps + 1);
  for (int t = 0; t < steps && !roll.done(); ++t) {
    roll.apply(static_cast<Action>(rng.uniform_index(kNumActions)));
  }
  return roll.take_episode();
}

}  // namespace

static void BM_EnvStep(benchmark::State& state) {
  EnvInstance inst = bench_instance();
  Rng rng(4);
  EnvState env = reset(inst).first;
  for (auto _ : state) {
    if (env.terminal) env = reset(inst).first;
    StepResult r = step(env, static_cast<Action>(rng.uniform_index(kNumActions)), inst, 1 << 20);
    env = r.state;
    benchmark::DoNotOptimize(r.reward);
  }
}
BENCHMARK(BM_EnvStep);

static void BM_Render(benchmark::State& state) {
  EnvInstance inst = bench_instance();
  EnvState env = reset(inst).first;
  for (auto _ : state) {
    Observation obs = render(env, inst);
    benchmark::DoNotOptimize(obs.pixels.data());
  }
}
BENCHMARK(BM_Render);

static void BM_DemonstratorEpisode(benchmark::State& state) {
  EnvInstance inst = bench_instance();
  for (auto _ : state) {
    Episode ep = run_demonstrator(inst, canonical_trial_order(5), 2000);
    benchmark::DoNotOptimize(ep.length());
  }
}
BENCHMARK(BM_DemonstratorEpisode);

static void BM_PolicyForwardBackward(benchmark::State& state) {
  Episode ep = bench_episode(static_cast<int>(state.range(0)));
  PolicyNet net(5, 64, 512, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.forward_backward(ep));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PolicyForwardBackward)->Arg(32)->Arg(128);

static void BM_BonusIncrementalStep(benchmark::State& state) {
  Episode ep = bench_episode(64);
  BonusNet net(5, 64, 512, 6);
  auto eval = net.make_state();
  size_t t = 0;
  for (auto _ : state) {
    if (t == ep.length()) {
      eval = net.make_state();
      t = 0;
    }
    net.feed(ep.frames[t], eval);
    benchmark::DoNotOptimize(net.score(eval, ep.actions[t]));
    ++t;
  }
}
BENCHMARK(BM_BonusIncrementalStep);

static void BM_CountBonus(benchmark::State& state) {
  CountBonus counts;
  int s = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(counts.record_and_bonus(s, Action::kWait));
    s = (s + 1) % 150;
  }
}
BENCHMARK(BM_CountBonus);

static void BM_RndStep(benchmark::State& state) {
  Episode ep = bench_episode(64);
  RndBonus pair(5, 7);
  size_t t = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pair.score_and_update(ep.frames[t]));
    t = (t + 1) % ep.length();
  }
}
BENCHMARK(BM_RndStep);

BENCHMARK_MAIN();
