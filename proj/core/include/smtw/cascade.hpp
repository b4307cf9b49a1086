#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smtw/episode.hpp"
#include "smtw/nn.hpp"

namespace smtw {

// The cascaded supervised bonus learner. Stage one trains a recurrent
// classifier on demonstrated actions; its logits are read as optimal Q-values.
// Stage two regresses a recurrent bonus network on the one-step residual of
// those logits minus the observed task reward, pushing a sampled
// non-demonstrated action towards the dataset minimum (b_min) so the bonus
// generalizes below demonstrated values.
//
// Both networks consume observation histories only; nothing in this module
// sees ground-truth states.

struct CascadeConfig {
  int n = 5;
  double gamma = 0.99;
  double bc_lr = 1e-3;
  double bonus_lr = 1e-4;
  int bc_epochs = 10;
  int bonus_epochs = 10;
  size_t lstm_units = 64;
  size_t dense_units = 512;
  uint64_t seed = 0;
  std::optional<double> b_min_override;
};

// Recurrent classifier over observation histories; 7 logits per prefix.
class PolicyNet {
 public:
  PolicyNet(int n, size_t lstm_units, size_t dense_units, uint64_t init_seed);
  static std::unique_ptr<PolicyNet> from_checkpoint(const std::string& path);

  PolicyNet(const PolicyNet&) = delete;
  PolicyNet& operator=(const PolicyNet&) = delete;

  int n() const { return n_; }
  size_t input_size() const { return input_; }

  // Summed cross-entropy over the episode's demonstrated actions; fills
  // parameter gradients. Throws on a non-finite loss.
  double forward_backward(const Episode& ep);
  double episode_loss(const Episode& ep);

  // Logits for every history prefix (length()+1 entries; entry t covers
  // frames 0..t).
  std::vector<std::array<double, kNumActions>> episode_logits(const Episode& ep);

  struct EvalState {
    LstmCore::State lstm;
  };
  EvalState make_state() const;
  std::array<double, kNumActions> step_logits(const Frame& frame, EvalState& state) const;

  // Fraction of transitions whose demonstrated action equals the logit argmax.
  double accuracy(std::span<const Episode* const> episodes);

  void save(const std::string& path) const;
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

 private:
  PolicyNet(int n, size_t lstm_units, size_t dense_units);
  void head_forward(const double* h, double* prerelu, double* logits) const;

  int n_;
  size_t input_, hidden_, dense_;
  ParamStore params_;
  LstmCore lstm_;
  DenseLayer fc1_, fc2_;

  // per-episode scratch, reused across calls
  std::vector<double> xs_, prerelu_, logits_, drelu_, dh_;
};

// Recurrent bonus head: the queried action joins the recurrent feature as a
// one-of-7 vector right before the dense layers.
class BonusNet {
 public:
  BonusNet(int n, size_t lstm_units, size_t dense_units, uint64_t init_seed);
  static std::unique_ptr<BonusNet> from_checkpoint(const std::string& path);

  BonusNet(const BonusNet&) = delete;
  BonusNet& operator=(const BonusNet&) = delete;

  int n() const { return n_; }

  double forward_backward(const Episode& ep, std::span<const double> targets,
                          std::span<const Action> contrast_actions, double b_min);
  double episode_loss(const Episode& ep, std::span<const double> targets,
                      std::span<const Action> contrast_actions, double b_min);

  struct EvalState {
    LstmCore::State lstm;
  };
  EvalState make_state() const;
  // Appends one observation to the history.
  void feed(const Frame& frame, EvalState& state) const;
  // B(history, action) for the current history; any number of actions may be
  // scored per step.
  double score(const EvalState& state, Action action) const;

  void save(const std::string& path) const;
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

 private:
  BonusNet(int n, size_t lstm_units, size_t dense_units);
  double head_forward(const double* h, Action a, double* prerelu) const;

  int n_;
  size_t input_, hidden_, dense_;
  ParamStore params_;
  LstmCore lstm_;
  DenseLayer fc1_, fc2_;

  std::vector<double> xs_, prerelu_, dh_;
};

// Per-transition regression data, parallel to `episodes`.
struct RegressionTargets {
  std::vector<std::vector<double>> y;
  std::vector<std::vector<Action>> contrast;
  double b_min = 0.0;
};

struct BcResult {
  std::unique_ptr<PolicyNet> policy;
  double final_accuracy = 0.0;
  double final_mean_loss = 0.0;
};

struct BonusResult {
  std::unique_ptr<BonusNet> bonus;
  double rms_demo = 0.0;      // residual on demonstrated-action targets
  double rms_contrast = 0.0;  // residual on the b_min term
  double final_mean_loss = 0.0;
};

std::vector<const Episode*> flatten_demonstrations(std::span<const Demonstration> demos);

// Optional observer invoked after each training pass (diagnostics, early
// inspection); epochs count from 1.
using EpochHook = std::function<void(int epoch, PolicyNet& net)>;

// One optimizer update per episode, recurrent state reset at episode
// boundaries, episode order reshuffled each pass.
BcResult train_bc(std::span<const Episode* const> episodes, const CascadeConfig& cfg,
                  const EpochHook& on_epoch = {});

// y = Q(h,a_E) - gamma * max_a' Q(h',a') - r, with the bootstrap term dropped
// on goal-terminal transitions. One contrast action is sampled uniformly from
// the six others per transition. b_min is the dataset minimum of y unless
// overridden.
RegressionTargets make_regression_targets(PolicyNet& policy,
                                          std::span<const Episode* const> episodes,
                                          const CascadeConfig& cfg);

BonusResult train_bonus(std::span<const Episode* const> episodes,
                        const RegressionTargets& targets, const CascadeConfig& cfg);

// From-scratch evaluation of B(history, action); equals the incremental path
// bit for bit.
double bonus_from_scratch(const BonusNet& net, std::span<const Frame> history, Action action);

}  // namespace smtw
