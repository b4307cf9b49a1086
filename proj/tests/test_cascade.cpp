#include <cmath>
#include <filesystem>

#include <stdexcept>

#include "doctest.h"
#include "fd_check.hpp"
#include "smtw/behaviors.hpp"
#include "smtw/cascade.hpp"

using namespace smtw;

namespace {

EnvInstance make(int n, uint64_t seed) {
  EnvConfig cfg{n, 2000, seed};
  Rng rng(seed);
  return generate_instance(cfg, rng);
}

Episode random_episode(int n, uint64_t seed, int steps) {
  EnvInstance inst = make(n, seed);
  Rng rng(seed ^ 0x5bd1e995);
  Rollout roll(inst, steps + 1);
  for (int t = 0; t < steps && !roll.done(); ++t) {
    roll.apply(static_cast<Action>(rng.uniform_index(kNumActions)));
  }
  return roll.take_episode();
}

void zero_params(ParamStore& store) {
  for (auto& [name, arr] : store.arrays()) {
    std::fill(arr.data.begin(), arr.data.end(), 0.0);
  }
}

}  // namespace

TEST_CASE("uniform logits cost ln 7 per step") {
  PolicyNet net(3, 8, 16, 1);
  zero_params(net.params());  // all logits zero -> a uniform softmax
  Episode ep = random_episode(3, 2, 25);
  const double loss = net.episode_loss(ep);
  CHECK(std::abs(loss - static_cast<double>(ep.length()) * std::log(7.0)) <= 1e-9);
}

TEST_CASE("behavior cloning overfits a single episode") {
  // Pick an instance whose first trial succeeds so the episode stays short.
  EnvInstance inst = make(5, 3);
  for (uint64_t seed = 3; inst.correct_key != 0 || inst.correct_door != 0; ++seed) {
    inst = make(5, seed);
  }
  Episode ep = run_demonstrator(inst, canonical_trial_order(5), 2000);
  std::vector<const Episode*> dataset = {&ep};

  CascadeConfig cfg;
  cfg.n = 5;
  cfg.bc_epochs = 500;
  cfg.seed = 4;
  BcResult result = train_bc(dataset, cfg);
  CHECK(result.final_accuracy >= 0.99);
}

TEST_CASE("policy gradients agree with finite differences") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    PolicyNet net(2, 4, 6, 5 + seed);
    Episode ep = random_episode(2, 6 + seed, 6);
    net.forward_backward(ep);
    CHECK(fdcheck::check_store(net.params(), [&] { return net.episode_loss(ep); }, 7) == 0);
  }
}

TEST_CASE("bonus gradients agree with finite differences") {
  BonusNet net(2, 4, 6, 7);
  Episode ep = random_episode(2, 8, 5);
  std::vector<double> targets(ep.length(), 0.5);
  std::vector<Action> contrast(ep.length(), Action::kWait);
  for (size_t t = 0; t < ep.length(); ++t) {
    if (ep.actions[t] == Action::kWait) contrast[t] = Action::kLeft;
  }
  net.forward_backward(ep, targets, contrast, -1.0);
  CHECK(fdcheck::check_store(net.params(),
                             [&] { return net.episode_loss(ep, targets, contrast, -1.0); },
                             7) == 0);
}

TEST_CASE("regression targets: constant-logit closed form") {
  // With every logit equal to c, y = (1 - gamma) * c - r off termination and
  // y = c - r on the goal transition.
  EnvInstance inst = make(5, 9);
  Episode ep = run_demonstrator(inst, canonical_trial_order(5), 2000);
  std::vector<const Episode*> dataset = {&ep};

  PolicyNet net(5, 8, 16, 10);
  zero_params(net.params());
  const double c = 0.75;
  auto& bias = net.params().at("fc2.b");
  std::fill(bias.data.begin(), bias.data.end(), c);

  CascadeConfig cfg;
  cfg.n = 5;
  cfg.gamma = 0.99;
  cfg.seed = 11;
  RegressionTargets targets = make_regression_targets(net, dataset, cfg);
  REQUIRE(targets.y.size() == 1);
  REQUIRE(targets.y[0].size() == ep.length());
  for (size_t t = 0; t < ep.length(); ++t) {
    const double expected = (t + 1 == ep.length())
                                ? c - ep.rewards[t]
                                : (1.0 - cfg.gamma) * c - ep.rewards[t];
    CHECK(std::abs(targets.y[0][t] - expected) <= 1e-12);
  }
}

TEST_CASE("regression targets: b_min bounds every target, contrast differs") {
  EnvInstance inst = make(5, 12);
  Episode ep = run_demonstrator(inst, canonical_trial_order(5), 2000);
  std::vector<const Episode*> dataset = {&ep};
  PolicyNet net(5, 8, 16, 13);

  CascadeConfig cfg;
  cfg.n = 5;
  cfg.seed = 14;
  RegressionTargets targets = make_regression_targets(net, dataset, cfg);
  for (size_t t = 0; t < ep.length(); ++t) {
    CHECK(targets.b_min <= targets.y[0][t]);
    CHECK(targets.contrast[0][t] != ep.actions[t]);
  }

  cfg.b_min_override = -123.0;
  CHECK(make_regression_targets(net, dataset, cfg).b_min == -123.0);
}

TEST_CASE("regression targets recompute bit-equal from a checkpointed policy") {
  EnvInstance inst = make(5, 15);
  Episode ep = run_demonstrator(inst, canonical_trial_order(5), 2000);
  std::vector<const Episode*> dataset = {&ep};

  CascadeConfig cfg;
  cfg.n = 5;
  cfg.bc_epochs = 2;
  cfg.seed = 16;
  BcResult bc = train_bc(dataset, cfg);
  RegressionTargets before = make_regression_targets(*bc.policy, dataset, cfg);

  const auto path = std::filesystem::temp_directory_path() / "smtw_test_policy.json";
  bc.policy->save(path.string());
  auto restored = PolicyNet::from_checkpoint(path.string());
  std::filesystem::remove(path);
  RegressionTargets after = make_regression_targets(*restored, dataset, cfg);

  CHECK(before.b_min == after.b_min);
  CHECK(before.y == after.y);
  CHECK(before.contrast == after.contrast);
}

TEST_CASE("bonus regression fits a constant target on rich inputs") {
  std::vector<Episode> episodes;
  for (uint64_t seed = 0; seed < 6; ++seed) episodes.push_back(random_episode(3, 20 + seed, 30));
  std::vector<const Episode*> dataset;
  for (const Episode& e : episodes) dataset.push_back(&e);

  const double target_value = 0.7;
  RegressionTargets targets;
  targets.b_min = target_value;  // both terms pull to the same constant
  Rng rng(17);
  for (const Episode* ep : dataset) {
    targets.y.emplace_back(ep->length(), target_value);
    std::vector<Action> contrast(ep->length());
    for (size_t t = 0; t < ep->length(); ++t) {
      int pick = static_cast<int>(rng.uniform_index(kNumActions - 1));
      if (pick >= static_cast<int>(ep->actions[t])) ++pick;
      contrast[t] = static_cast<Action>(pick);
    }
    targets.contrast.push_back(std::move(contrast));
  }

  CascadeConfig cfg;
  cfg.n = 3;
  cfg.lstm_units = 8;
  cfg.dense_units = 16;
  cfg.bonus_epochs = 400;
  cfg.bonus_lr = 1e-3;
  cfg.seed = 18;
  BonusResult result = train_bonus(dataset, targets, cfg);
  CHECK(result.rms_demo <= 1e-2);
}

TEST_CASE("the contrast term pulls non-demonstrated actions toward b_min") {
  // Demonstrator episodes never wait, so "wait" can serve as a consistent,
  // learnable contrast everywhere.
  std::vector<Episode> episodes;
  for (uint64_t seed = 0; seed < 6; ++seed) {
    EnvInstance inst = make(3, 40 + seed);
    episodes.push_back(run_demonstrator(inst, canonical_trial_order(3), 2000));
  }
  std::vector<const Episode*> dataset;
  for (const Episode& e : episodes) dataset.push_back(&e);

  const double demo_value = 1.0, floor_value = -1.0;
  RegressionTargets targets;
  targets.b_min = floor_value;
  for (const Episode* ep : dataset) {
    targets.y.emplace_back(ep->length(), demo_value);
    targets.contrast.emplace_back(ep->length(), Action::kWait);
  }

  CascadeConfig cfg;
  cfg.n = 3;
  cfg.lstm_units = 8;
  cfg.dense_units = 16;
  cfg.bonus_epochs = 300;
  cfg.bonus_lr = 1e-3;
  cfg.seed = 20;
  BonusResult result = train_bonus(dataset, targets, cfg);

  double sum = 0.0;
  size_t count = 0;
  for (size_t e = 0; e < dataset.size(); ++e) {
    auto state = result.bonus->make_state();
    for (size_t t = 0; t < dataset[e]->length(); ++t) {
      result.bonus->feed(dataset[e]->frames[t], state);
      sum += result.bonus->score(state, targets.contrast[e][t]);
      ++count;
    }
  }
  CHECK(std::abs(sum / static_cast<double>(count) - floor_value) <= 0.1);

  // Action-conditioning must reach the head: demonstrated and contrast
  // actions score differently on a trained model.
  auto state = result.bonus->make_state();
  result.bonus->feed(dataset[0]->frames[0], state);
  const double demo_score = result.bonus->score(state, dataset[0]->actions[0]);
  const double other_score = result.bonus->score(state, targets.contrast[0][0]);
  CHECK(demo_score != other_score);
}

TEST_CASE("incremental bonus evaluation is bitwise equal to from-scratch") {
  BonusNet net(3, 8, 16, 21);
  Episode ep = random_episode(3, 22, 50);
  auto state = net.make_state();
  for (size_t t = 0; t < ep.length(); ++t) {
    net.feed(ep.frames[t], state);
    for (int a = 0; a < kNumActions; ++a) {
      const double inc = net.score(state, static_cast<Action>(a));
      const double scratch = bonus_from_scratch(
          net, std::span<const Frame>(ep.frames.data(), t + 1), static_cast<Action>(a));
      CHECK(inc == scratch);
    }
  }
}

TEST_CASE("bonus evaluation rejects an empty history and stays finite") {
  BonusNet net(3, 8, 16, 23);
  CHECK_THROWS_AS(bonus_from_scratch(net, {}, Action::kWait), std::invalid_argument);
  Episode ep = random_episode(3, 24, 40);
  auto state = net.make_state();
  for (size_t t = 0; t < ep.length(); ++t) {
    net.feed(ep.frames[t], state);
    CHECK(std::isfinite(net.score(state, ep.actions[t])));
  }
}

TEST_CASE("training on an empty dataset is rejected") {
  CascadeConfig cfg;
  CHECK_THROWS_AS(train_bc({}, cfg), std::invalid_argument);
  RegressionTargets targets;
  CHECK_THROWS_AS(train_bonus({}, targets, cfg), std::invalid_argument);
}

TEST_CASE("the predicted class is the argmax of the logits") {
  PolicyNet net(3, 8, 16, 25);
  Episode ep = random_episode(3, 26, 10);
  auto logits = net.episode_logits(ep);
  auto state = net.make_state();
  for (size_t t = 0; t <= ep.length(); ++t) {
    auto stepwise = net.step_logits(ep.frames[t], state);
    for (int a = 0; a < kNumActions; ++a) CHECK(stepwise[a] == logits[t][a]);
  }
}
