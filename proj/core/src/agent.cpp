#include "smtw/agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

#include "smtw/threading.hpp"

namespace smtw {

const char* bonus_kind_name(BonusKind k) {
  switch (k) {
    case BonusKind::kNone: return "none";
    case BonusKind::kCount: return "count";
    case BonusKind::kSmtw: return "smtw";
    case BonusKind::kRnd: return "rnd";
  }
  return "?";
}

BonusKind bonus_kind_from_name(std::string_view name) {
  for (BonusKind k : {BonusKind::kNone, BonusKind::kCount, BonusKind::kSmtw, BonusKind::kRnd}) {
    if (name == bonus_kind_name(k)) return k;
  }
  throw std::invalid_argument("unknown bonus kind: " + std::string(name));
}

double QTable::max_value(int s) const {
  double best = at(s, 0);
  for (int a = 1; a < n_actions_; ++a) best = std::max(best, at(s, a));
  return best;
}

int QTable::argmax_action(int s) const {
  int best = 0;
  for (int a = 1; a < n_actions_; ++a) {
    if (at(s, a) > at(s, best)) best = a;
  }
  return best;
}

int QTable::argmax_action_uniform(int s, Rng& rng) const {
  const double best = max_value(s);
  int ties = 0;
  int pick = 0;
  for (int a = 0; a < n_actions_; ++a) {
    if (at(s, a) == best) {
      ++ties;
      if (rng.uniform_index(static_cast<uint64_t>(ties)) == 0) pick = a;
    }
  }
  return pick;
}

bool QTable::finite() const {
  for (double v : q_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void q_update(QTable& q, int s, int a, double reward, double bonus, int s_next,
              bool goal_terminal, double lr, double gamma) {
  double target = reward + bonus;
  if (!goal_terminal) target += gamma * q.max_value(s_next);
  q.at(s, a) += lr * (target - q.at(s, a));
}

namespace {

// Greedy rollout with learning and bonuses off; ties break to the lowest
// action index so the probe is deterministic.
double evaluate_greedy(const QTable& q, const EnvInstance& inst, int cap) {
  EnvState state = reset(inst).first;
  double ret = 0.0;
  while (!state.terminal) {
    const int s = ground_truth_state(state, inst);
    StepResult r = step(state, static_cast<Action>(q.argmax_action(s)), inst, cap);
    ret += r.reward;
    state = r.state;
  }
  return ret;
}

}  // namespace

std::vector<CurvePoint> train_agent(const AgentConfig& cfg, const EnvInstance& instance,
                                    const BonusNet* bonus_model, Rng& rng, BonusTrace* trace) {
  if (cfg.bonus_kind == BonusKind::kSmtw && bonus_model == nullptr) {
    throw std::invalid_argument("train_agent: smtw bonus requested without a model");
  }
  if (cfg.bonus_kind == BonusKind::kRnd) {
    throw std::invalid_argument("train_agent: rnd is an analysis comparator, not an agent bonus");
  }

  QTable q(ground_truth_state_count(instance.n), kNumActions);
  CountBonus counts;
  std::vector<CurvePoint> curve;
  curve.reserve(static_cast<size_t>(cfg.episodes));

  uint64_t global_step = 0;  // k in the 1/sqrt(k) decay
  std::vector<Frame> history;  // only kept when tracing

  for (int episode = 0; episode < cfg.episodes; ++episode) {
    auto [state, obs] = reset(instance);
    BonusNet::EvalState bonus_state =
        bonus_model != nullptr ? bonus_model->make_state() : BonusNet::EvalState{};
    Frame frame = pack_frame(obs);
    if (cfg.bonus_kind == BonusKind::kSmtw) {
      bonus_model->feed(frame, bonus_state);  // history starts with the reset frame
      if (trace != nullptr) history.assign(1, frame);
    }

    double total_bonus = 0.0;
    double train_return = 0.0;
    while (!state.terminal) {
      const int s = ground_truth_state(state, instance);
      int a;
      if (rng.next_double() < cfg.epsilon) {
        a = static_cast<int>(rng.uniform_index(kNumActions));
      } else {
        a = q.argmax_action_uniform(s, rng);
      }

      ++global_step;
      double bonus = 0.0;
      switch (cfg.bonus_kind) {
        case BonusKind::kNone:
          break;
        case BonusKind::kCount:
          bonus = counts.record_and_bonus(s, static_cast<Action>(a));
          break;
        case BonusKind::kSmtw:
          bonus = bonus_model->score(bonus_state, static_cast<Action>(a)) /
                  std::sqrt(static_cast<double>(global_step));
          break;
        case BonusKind::kRnd:
          break;
      }
      total_bonus += bonus;
      if (trace != nullptr && cfg.bonus_kind == BonusKind::kSmtw) {
        trace->global_step.push_back(global_step);
        trace->action.push_back(static_cast<Action>(a));
        trace->applied.push_back(bonus);
        trace->history.push_back(history);
      }

      StepResult r = step(state, static_cast<Action>(a), instance, cfg.episode_cap);
      train_return += r.reward;
      const int s_next = ground_truth_state(r.state, instance);
      q_update(q, s, a, r.reward, bonus, s_next, r.terminal, cfg.lr, cfg.gamma);
      state = r.state;
      if (cfg.bonus_kind == BonusKind::kSmtw && !state.terminal) {
        frame = pack_frame(r.obs);
        bonus_model->feed(frame, bonus_state);
        if (trace != nullptr) history.push_back(frame);
      }
    }
    if (!q.finite()) throw std::runtime_error("train_agent: Q-table became non-finite");

    curve.push_back({train_return, evaluate_greedy(q, instance, cfg.episode_cap), total_bonus});
  }
  return curve;
}

ExperimentResult run_experiment(std::span<const EnvInstance> test_instances,
                                const ExperimentConfigAgent& cfg, const BonusNet* bonus_model) {
  ExperimentResult result;
  int run_id = 0;
  for (BonusKind kind : cfg.algorithms) {
    for (double lr : cfg.lr_sweep) {
      for (const EnvInstance& inst : test_instances) {
        for (int rep = 0; rep < cfg.repeats; ++rep) {
          ExperimentRun run;
          run.run_id = run_id++;
          run.kind = kind;
          run.lr = lr;
          run.instance_seed = inst.seed;
          run.repeat = rep;
          result.runs.push_back(std::move(run));
        }
      }
    }
  }

  parallel_for(result.runs.size(), [&](size_t i) {
    ExperimentRun& run = result.runs[i];
    AgentConfig acfg;
    acfg.lr = run.lr;
    acfg.epsilon = cfg.epsilon;
    acfg.gamma = cfg.gamma;
    acfg.episodes = cfg.episodes;
    acfg.episode_cap = cfg.episode_cap;
    acfg.bonus_kind = run.kind;
    Rng rng(derive_stream(cfg.master_seed, "agent_run", static_cast<uint64_t>(run.run_id)));
    const EnvInstance* inst = nullptr;
    for (const EnvInstance& candidate : test_instances) {
      if (candidate.seed == run.instance_seed) inst = &candidate;
    }
    run.curve = train_agent(acfg, *inst, bonus_model, rng);
  });

  // Plateau score per run: mean training return over the final quarter.
  auto plateau = [&](const ExperimentRun& run) {
    const size_t len = run.curve.size();
    const size_t from = len - std::max<size_t>(1, len / 4);
    double sum = 0.0;
    for (size_t e = from; e < len; ++e) sum += run.curve[e].train_return;
    return sum / static_cast<double>(len - from);
  };

  for (BonusKind kind : cfg.algorithms) {
    double best_lr = cfg.lr_sweep.empty() ? 0.0 : cfg.lr_sweep[0];
    double best_median = -std::numeric_limits<double>::infinity();
    for (double lr : cfg.lr_sweep) {
      std::vector<double> scores;
      for (const ExperimentRun& run : result.runs) {
        if (run.kind == kind && run.lr == lr) scores.push_back(plateau(run));
      }
      std::sort(scores.begin(), scores.end());
      const size_t m = scores.size();
      const double median =
          m % 2 == 1 ? scores[m / 2] : 0.5 * (scores[m / 2 - 1] + scores[m / 2]);
      if (median > best_median) {
        best_median = median;
        best_lr = lr;
      }
    }
    result.best_lr.emplace_back(kind, best_lr);
  }
  return result;
}

namespace {
std::vector<double> median_curve_impl(const ExperimentResult& result, BonusKind kind,
                                      double lr, bool train) {
  std::vector<const ExperimentRun*> runs;
  for (const ExperimentRun& run : result.runs) {
    if (run.kind == kind && run.lr == lr) runs.push_back(&run);
  }
  if (runs.empty()) return {};
  const size_t episodes = runs[0]->curve.size();
  std::vector<double> median(episodes);
  std::vector<double> column(runs.size());
  for (size_t e = 0; e < episodes; ++e) {
    for (size_t i = 0; i < runs.size(); ++i) {
      column[i] = train ? runs[i]->curve[e].train_return : runs[i]->curve[e].eval_return;
    }
    std::sort(column.begin(), column.end());
    const size_t m = column.size();
    median[e] = m % 2 == 1 ? column[m / 2] : 0.5 * (column[m / 2 - 1] + column[m / 2]);
  }
  return median;
}
}  // namespace

std::vector<double> median_train_curve(const ExperimentResult& result, BonusKind kind,
                                       double lr) {
  return median_curve_impl(result, kind, lr, true);
}

std::vector<double> median_eval_curve(const ExperimentResult& result, BonusKind kind,
                                      double lr) {
  return median_curve_impl(result, kind, lr, false);
}

void write_curves_csv(const std::string& path, const ExperimentResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "run_id,algorithm,lr,episode,return,total_bonus\n";
  char buf[64];
  for (const ExperimentRun& run : result.runs) {
    for (size_t e = 0; e < run.curve.size(); ++e) {
      out << run.run_id << ',' << bonus_kind_name(run.kind) << ',';
      snprintf(buf, sizeof(buf), "%.17g", run.lr);
      out << buf << ',' << e << ',';
      snprintf(buf, sizeof(buf), "%.17g", run.curve[e].train_return);
      out << buf << ',';
      snprintf(buf, sizeof(buf), "%.17g", run.curve[e].total_bonus);
      out << buf << '\n';
    }
  }
}

}  // namespace smtw
