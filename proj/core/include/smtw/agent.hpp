#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "smtw/baselines.hpp"
#include "smtw/cascade.hpp"
#include "smtw/gridworld.hpp"
#include "smtw/prng.hpp"

namespace smtw {

enum class BonusKind : int { kNone = 0, kCount = 1, kSmtw = 2, kRnd = 3 };
const char* bonus_kind_name(BonusKind k);
BonusKind bonus_kind_from_name(std::string_view name);

// Dense tabular Q over the ground-truth-state code space, default 0.
class QTable {
 public:
  QTable(int n_states, int n_actions)
      : n_actions_(n_actions), q_(static_cast<size_t>(n_states) * n_actions, 0.0) {}

  double& at(int s, int a) { return q_[static_cast<size_t>(s) * n_actions_ + a]; }
  double at(int s, int a) const { return q_[static_cast<size_t>(s) * n_actions_ + a]; }
  double max_value(int s) const;
  int argmax_action(int s) const;  // ties break to the lowest action index
  int argmax_action_uniform(int s, Rng& rng) const;
  bool finite() const;

  int n_actions() const { return n_actions_; }

 private:
  int n_actions_;
  std::vector<double> q_;
};

// One Q-learning update towards r + b + gamma * max_a' Q(s',a'); the bootstrap
// term is dropped on goal termination (kept on truncation).
void q_update(QTable& q, int s, int a, double reward, double bonus, int s_next,
              bool goal_terminal, double lr, double gamma);

struct AgentConfig {
  double lr = 0.1;
  double epsilon = 0.1;
  double gamma = 0.99;
  int episodes = 300;
  int episode_cap = 1000;
  BonusKind bonus_kind = BonusKind::kNone;
};

struct CurvePoint {
  // Environment return of the training episode itself (bonuses excluded);
  // this is the per-episode return a learning curve plots.
  double train_return = 0.0;
  // Return of a greedy probe episode (epsilon 0, bonus off, no learning) run
  // after the training episode: what the learned policy is worth.
  double eval_return = 0.0;
  // Summed bonus actually added to rewards during the training episode.
  double total_bonus = 0.0;
};

// Optional per-step trace of the bonus actually applied, for tests that
// recompute it independently.
struct BonusTrace {
  std::vector<uint64_t> global_step;  // k, starting at 1
  std::vector<Action> action;
  std::vector<double> applied;                 // bonus added to the reward
  std::vector<std::vector<Frame>> history;     // observation history at query time
};

// Tabular Q-learning on ground-truth states. The learned bonus is evaluated
// incrementally from observation histories (reset each episode) and decayed by
// 1/sqrt(k) with k the global training step counter; the count bonus is
// undecayed; kNone adds nothing.
std::vector<CurvePoint> train_agent(const AgentConfig& cfg, const EnvInstance& instance,
                                    const BonusNet* bonus_model, Rng& rng,
                                    BonusTrace* trace = nullptr);

struct ExperimentRun {
  int run_id = 0;
  BonusKind kind = BonusKind::kNone;
  double lr = 0.0;
  uint64_t instance_seed = 0;
  int repeat = 0;
  std::vector<CurvePoint> curve;
};

struct ExperimentResult {
  std::vector<ExperimentRun> runs;
  // Best learning rate per algorithm: the lr whose 10x2 runs have the highest
  // median plateau return (mean training return over the final quarter).
  std::vector<std::pair<BonusKind, double>> best_lr;
};

struct ExperimentConfigAgent {
  std::vector<double> lr_sweep = {0.01, 0.1, 0.5, 0.7};
  std::vector<BonusKind> algorithms = {BonusKind::kNone, BonusKind::kCount, BonusKind::kSmtw};
  int repeats = 2;
  double epsilon = 0.1;
  double gamma = 0.99;
  int episodes = 300;
  int episode_cap = 1000;
  uint64_t master_seed = 0;
};

ExperimentResult run_experiment(std::span<const EnvInstance> test_instances,
                                const ExperimentConfigAgent& cfg, const BonusNet* bonus_model);

// Median over runs at each episode index, restricted to (kind, lr) runs.
std::vector<double> median_train_curve(const ExperimentResult& result, BonusKind kind,
                                       double lr);
std::vector<double> median_eval_curve(const ExperimentResult& result, BonusKind kind,
                                      double lr);

void write_curves_csv(const std::string& path, const ExperimentResult& result);

}  // namespace smtw
