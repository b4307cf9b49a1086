#include "smtw/behaviors.hpp"

#include <stdexcept>
#include <string>

namespace smtw {

const char* behavior_name(BehaviorKind kind) {
  switch (kind) {
    case BehaviorKind::kDemonstrator: return "demonstrator";
    case BehaviorKind::kRandom: return "random";
    case BehaviorKind::kDemonstratorInverse: return "demonstrator_inverse";
    case BehaviorKind::kDemonstratorRandomOrder: return "demonstrator_random_order";
    case BehaviorKind::kDummyDemonstrator: return "dummy_demonstrator";
    case BehaviorKind::kStandingStill: return "standing_still";
    case BehaviorKind::kWaitingDemonstrator: return "waiting_demonstrator";
    case BehaviorKind::kUnsafeDemonstrator: return "unsafe_demonstrator";
  }
  return "?";
}

BehaviorKind behavior_from_name(std::string_view name) {
  for (BehaviorKind k : kAllBehaviors) {
    if (name == behavior_name(k)) return k;
  }
  throw std::invalid_argument("unknown behavior: " + std::string(name));
}

std::vector<Action> navigate(Cell from, Cell to) {
  std::vector<Action> moves;
  for (int c = from.col; c < to.col; ++c) moves.push_back(Action::kRight);
  for (int c = from.col; c > to.col; --c) moves.push_back(Action::kLeft);
  for (int r = from.row; r < to.row; ++r) moves.push_back(Action::kDown);
  for (int r = from.row; r > to.row; --r) moves.push_back(Action::kUp);
  return moves;
}

std::vector<std::pair<int, int>> canonical_trial_order(int n) {
  std::vector<std::pair<int, int>> order;
  order.reserve(static_cast<size_t>(n) * n);
  for (int k = 0; k < n; ++k)
    for (int d = 0; d < n; ++d) order.emplace_back(k, d);
  return order;
}

namespace {

struct ScriptOptions {
  double wait_prob = 0.0;     // chance of one wait before each scripted action
  bool drop_on_door_leg = false;  // dummy: one extra open along each door leg
  bool take_after_moves = false;  // unsafe: take after every move while keyless
  bool may_exhaust_plan = false;  // dummy: plan exhaustion just ends the episode
  Rng* rng = nullptr;
};

// Shared engine for the demonstrator family. Runs trial pairs in order until
// the goal transition or the cap ends the episode.
Episode run_trial_script(const EnvInstance& inst,
                         std::span<const std::pair<int, int>> order, int cap,
                         const ScriptOptions& opt) {
  Rollout roll(inst, cap);
  auto emit = [&](Action a) {
    if (roll.done()) return;
    if (opt.wait_prob > 0.0 && opt.rng->next_double() < opt.wait_prob) {
      roll.apply(Action::kWait);
      if (roll.done()) return;
    }
    roll.apply(a);
  };

  size_t next_trial = 0;
  while (!roll.done()) {
    if (next_trial == order.size()) {
      if (!opt.may_exhaust_plan) {
        throw std::runtime_error("trial script exhausted its plan without reaching the goal");
      }
      break;
    }
    auto [key_col, door_col] = order[next_trial++];

    for (Action m : navigate(roll.state().agent, inst.key_cell(key_col))) {
      emit(m);
      if (roll.done()) break;
      if (opt.take_after_moves && !roll.state().held_key) emit(Action::kTake);
      if (roll.done()) break;
    }
    if (roll.done()) break;
    if (!(roll.state().held_key && *roll.state().held_key == key_col)) {
      emit(Action::kTake);
      if (roll.done()) break;
    }

    auto path = navigate(roll.state().agent, inst.door_cell(door_col));
    size_t drop_after = opt.drop_on_door_leg && !path.empty()
                            ? opt.rng->uniform_index(path.size())
                            : path.size();
    for (size_t i = 0; i < path.size(); ++i) {
      emit(path[i]);
      if (roll.done()) break;
      if (i == drop_after) {
        emit(Action::kOpen);
        if (roll.done()) break;
      }
    }
    if (roll.done()) break;
    emit(Action::kOpen);
  }

  Episode ep = roll.take_episode();
  if (!opt.may_exhaust_plan && !ep.terminal) {
    throw std::runtime_error("trial script hit the episode cap before the goal");
  }
  return ep;
}

Episode run_random(const EnvInstance& inst, Rng& rng, int cap) {
  Rollout roll(inst, cap);
  while (!roll.done()) {
    roll.apply(static_cast<Action>(rng.uniform_index(kNumActions)));
  }
  return roll.take_episode();
}

Episode run_standing_still(const EnvInstance& inst, int cap) {
  Rollout roll(inst, cap);
  while (!roll.done()) roll.apply(Action::kWait);
  return roll.take_episode();
}

}  // namespace

Episode run_demonstrator(const EnvInstance& instance,
                         std::span<const std::pair<int, int>> order, int episode_cap) {
  return run_trial_script(instance, order, episode_cap, {});
}

Episode run_behavior(BehaviorKind kind, const EnvInstance& instance, Rng& rng,
                     const BehaviorConfig& cfg) {
  auto order = canonical_trial_order(instance.n);
  switch (kind) {
    case BehaviorKind::kDemonstrator:
      return run_demonstrator(instance, order, cfg.demonstrator_cap);
    case BehaviorKind::kRandom:
      return run_random(instance, rng, cfg.free_cap);
    case BehaviorKind::kDemonstratorInverse: {
      std::vector<std::pair<int, int>> rev(order.rbegin(), order.rend());
      return run_demonstrator(instance, rev, cfg.demonstrator_cap);
    }
    case BehaviorKind::kDemonstratorRandomOrder: {
      rng.shuffle(order);
      return run_demonstrator(instance, order, cfg.demonstrator_cap);
    }
    case BehaviorKind::kDummyDemonstrator: {
      ScriptOptions opt;
      opt.drop_on_door_leg = true;
      opt.may_exhaust_plan = true;  // the dropped key makes most trials fail
      opt.rng = &rng;
      return run_trial_script(instance, order, cfg.free_cap, opt);
    }
    case BehaviorKind::kStandingStill:
      return run_standing_still(instance, cfg.free_cap);
    case BehaviorKind::kWaitingDemonstrator: {
      ScriptOptions opt;
      opt.wait_prob = cfg.wait_prob;
      opt.rng = &rng;
      return run_trial_script(instance, order, cfg.demonstrator_cap, opt);
    }
    case BehaviorKind::kUnsafeDemonstrator: {
      ScriptOptions opt;
      opt.take_after_moves = true;
      return run_trial_script(instance, order, cfg.demonstrator_cap, opt);
    }
  }
  throw std::invalid_argument("run_behavior: unknown behavior kind");
}

Demonstration make_demonstration(const EnvInstance& instance, const BehaviorConfig& cfg) {
  Demonstration demo;
  demo.exploration =
      run_demonstrator(instance, canonical_trial_order(instance.n), cfg.demonstrator_cap);

  for (int i = 0; i < 5; ++i) {
    Rollout roll(instance, cfg.demonstrator_cap);
    for (Action m : navigate(roll.state().agent, instance.key_cell(instance.correct_key)))
      roll.apply(m);
    roll.apply(Action::kTake);
    for (Action m : navigate(roll.state().agent, instance.goal_cell())) roll.apply(m);
    roll.apply(Action::kOpen);
    Episode ep = roll.take_episode();
    if (!ep.terminal) throw std::runtime_error("exploit episode failed to reach the goal");
    demo.exploits.push_back(std::move(ep));
  }
  return demo;
}

std::vector<Demonstration> generate_demonstrations(std::span<const EnvInstance> instances,
                                                   int per_env, const BehaviorConfig& cfg) {
  if (per_env < 1) throw std::invalid_argument("generate_demonstrations: per_env must be >= 1");
  std::vector<Demonstration> demos;
  demos.reserve(instances.size() * static_cast<size_t>(per_env));
  for (const EnvInstance& inst : instances) {
    for (int i = 0; i < per_env; ++i) demos.push_back(make_demonstration(inst, cfg));
  }
  return demos;
}

}  // namespace smtw
