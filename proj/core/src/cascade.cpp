#include "smtw/cascade.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace smtw {

namespace {

constexpr size_t kPolicyOut = kNumActions;

void widen_episode(const Episode& ep, size_t frames, size_t input, std::vector<double>& xs) {
  xs.resize(frames * input);
  for (size_t t = 0; t < frames; ++t) widen_frame(ep.frames[t], xs.data() + t * input);
}

}  // namespace

PolicyNet::PolicyNet(int n, size_t lstm_units, size_t dense_units)
    : n_(n),
      input_(static_cast<size_t>(n) * n * 3),
      hidden_(lstm_units),
      dense_(dense_units),
      lstm_(params_, "lstm", input_, lstm_units),
      fc1_(params_, "fc1", lstm_units, dense_units),
      fc2_(params_, "fc2", dense_units, kPolicyOut) {}

PolicyNet::PolicyNet(int n, size_t lstm_units, size_t dense_units, uint64_t init_seed)
    : PolicyNet(n, lstm_units, dense_units) {
  Rng rng(init_seed);
  lstm_.init(rng);
  fc1_.init(rng);
  fc2_.init(rng);
}

void PolicyNet::head_forward(const double* h, double* prerelu, double* logits) const {
  fc1_.forward(h, prerelu);
  std::vector<double> r(dense_);
  for (size_t i = 0; i < dense_; ++i) r[i] = relu(prerelu[i]);
  fc2_.forward(r.data(), logits);
}

double PolicyNet::forward_backward(const Episode& ep) {
  const size_t frames = ep.frames.size();
  const size_t T = ep.length();
  widen_episode(ep, frames, input_, xs_);
  lstm_.forward(xs_.data(), frames);

  prerelu_.resize(frames * dense_);
  logits_.resize(frames * kPolicyOut);
  for (size_t t = 0; t < frames; ++t) {
    head_forward(lstm_.hidden(t), prerelu_.data() + t * dense_, logits_.data() + t * kPolicyOut);
  }

  params_.zero_grad();
  dh_.assign(frames * hidden_, 0.0);
  drelu_.resize(dense_);
  double loss = 0.0;
  std::array<double, kPolicyOut> dlogits;
  for (size_t t = 0; t < T; ++t) {
    loss += softmax_cross_entropy(
        std::span<const double>(logits_.data() + t * kPolicyOut, kPolicyOut),
        static_cast<int>(ep.actions[t]), dlogits);

    // head backward: fc2 -> relu -> fc1
    const double* pre = prerelu_.data() + t * dense_;
    std::vector<double> r(dense_);
    for (size_t i = 0; i < dense_; ++i) r[i] = relu(pre[i]);
    std::fill(drelu_.begin(), drelu_.end(), 0.0);
    fc2_.backward(r.data(), dlogits.data(), drelu_.data());
    for (size_t i = 0; i < dense_; ++i) {
      if (pre[i] <= 0.0) drelu_[i] = 0.0;
    }
    fc1_.backward(lstm_.hidden(t), drelu_.data(), dh_.data() + t * hidden_);
  }
  if (!std::isfinite(loss)) {
    throw std::runtime_error("behavior-cloning loss is not finite");
  }
  lstm_.backward(xs_.data(), dh_.data());
  return loss;
}

double PolicyNet::episode_loss(const Episode& ep) {
  auto logits = episode_logits(ep);
  double loss = 0.0;
  std::array<double, kPolicyOut> scratch;
  for (size_t t = 0; t < ep.length(); ++t) {
    loss += softmax_cross_entropy(logits[t], static_cast<int>(ep.actions[t]), scratch);
  }
  return loss;
}

std::vector<std::array<double, kNumActions>> PolicyNet::episode_logits(const Episode& ep) {
  const size_t frames = ep.frames.size();
  widen_episode(ep, frames, input_, xs_);
  lstm_.forward(xs_.data(), frames);
  std::vector<std::array<double, kNumActions>> out(frames);
  std::vector<double> prerelu(dense_);
  for (size_t t = 0; t < frames; ++t) {
    head_forward(lstm_.hidden(t), prerelu.data(), out[t].data());
  }
  return out;
}

PolicyNet::EvalState PolicyNet::make_state() const { return {lstm_.initial_state()}; }

std::array<double, kNumActions> PolicyNet::step_logits(const Frame& frame,
                                                       EvalState& state) const {
  std::vector<double> x(input_);
  widen_frame(frame, x.data());
  lstm_.step(x.data(), state.lstm);
  std::array<double, kNumActions> logits;
  std::vector<double> prerelu(dense_);
  head_forward(state.lstm.h.data(), prerelu.data(), logits.data());
  return logits;
}

double PolicyNet::accuracy(std::span<const Episode* const> episodes) {
  size_t correct = 0, total = 0;
  for (const Episode* ep : episodes) {
    auto logits = episode_logits(*ep);
    for (size_t t = 0; t < ep->length(); ++t) {
      if (argmax_index(logits[t]) == static_cast<int>(ep->actions[t])) ++correct;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

BonusNet::BonusNet(int n, size_t lstm_units, size_t dense_units)
    : n_(n),
      input_(static_cast<size_t>(n) * n * 3),
      hidden_(lstm_units),
      dense_(dense_units),
      lstm_(params_, "lstm", input_, lstm_units),
      fc1_(params_, "fc1", lstm_units + kNumActions, dense_units),
      fc2_(params_, "fc2", dense_units, 1) {}

BonusNet::BonusNet(int n, size_t lstm_units, size_t dense_units, uint64_t init_seed)
    : BonusNet(n, lstm_units, dense_units) {
  Rng rng(init_seed);
  lstm_.init(rng);
  fc1_.init(rng);
  fc2_.init(rng);
}

double BonusNet::head_forward(const double* h, Action a, double* prerelu) const {
  std::vector<double> hin(hidden_ + kNumActions, 0.0);
  std::memcpy(hin.data(), h, hidden_ * sizeof(double));
  hin[hidden_ + static_cast<size_t>(a)] = 1.0;
  fc1_.forward(hin.data(), prerelu);
  std::vector<double> r(dense_);
  for (size_t i = 0; i < dense_; ++i) r[i] = relu(prerelu[i]);
  double out = 0.0;
  fc2_.forward(r.data(), &out);
  return out;
}

double BonusNet::forward_backward(const Episode& ep, std::span<const double> targets,
                                  std::span<const Action> contrast_actions, double b_min) {
  const size_t T = ep.length();
  if (targets.size() != T || contrast_actions.size() != T) {
    throw std::invalid_argument("bonus training: targets misaligned with episode");
  }
  widen_episode(ep, T, input_, xs_);  // histories h_0..h_{T-1}; the final frame is unused
  lstm_.forward(xs_.data(), T);

  params_.zero_grad();
  dh_.assign(T * hidden_, 0.0);
  prerelu_.resize(dense_);
  std::vector<double> r(dense_), dhin(hidden_ + kNumActions), drelu(dense_);
  double loss = 0.0;

  for (size_t t = 0; t < T; ++t) {
    const Action acts[2] = {ep.actions[t], contrast_actions[t]};
    const double tgt[2] = {targets[t], b_min};
    for (int branch = 0; branch < 2; ++branch) {
      std::vector<double> hin(hidden_ + kNumActions, 0.0);
      std::memcpy(hin.data(), lstm_.hidden(t), hidden_ * sizeof(double));
      hin[hidden_ + static_cast<size_t>(acts[branch])] = 1.0;

      fc1_.forward(hin.data(), prerelu_.data());
      for (size_t i = 0; i < dense_; ++i) r[i] = relu(prerelu_[i]);
      double out = 0.0;
      fc2_.forward(r.data(), &out);

      const double err = out - tgt[branch];
      loss += err * err;
      const double dout = 2.0 * err;
      std::fill(drelu.begin(), drelu.end(), 0.0);
      fc2_.backward(r.data(), &dout, drelu.data());
      for (size_t i = 0; i < dense_; ++i) {
        if (prerelu_[i] <= 0.0) drelu[i] = 0.0;
      }
      std::fill(dhin.begin(), dhin.end(), 0.0);
      fc1_.backward(hin.data(), drelu.data(), dhin.data());
      for (size_t j = 0; j < hidden_; ++j) dh_[t * hidden_ + j] += dhin[j];
    }
  }
  if (!std::isfinite(loss)) {
    throw std::runtime_error("bonus regression loss is not finite");
  }
  lstm_.backward(xs_.data(), dh_.data());
  return loss;
}

double BonusNet::episode_loss(const Episode& ep, std::span<const double> targets,
                              std::span<const Action> contrast_actions, double b_min) {
  const size_t T = ep.length();
  widen_episode(ep, T, input_, xs_);
  lstm_.forward(xs_.data(), T);
  std::vector<double> prerelu(dense_);
  double loss = 0.0;
  for (size_t t = 0; t < T; ++t) {
    const double d1 = head_forward(lstm_.hidden(t), ep.actions[t], prerelu.data()) - targets[t];
    const double d2 =
        head_forward(lstm_.hidden(t), contrast_actions[t], prerelu.data()) - b_min;
    loss += d1 * d1 + d2 * d2;
  }
  return loss;
}

BonusNet::EvalState BonusNet::make_state() const { return {lstm_.initial_state()}; }

void BonusNet::feed(const Frame& frame, EvalState& state) const {
  std::vector<double> x(input_);
  widen_frame(frame, x.data());
  lstm_.step(x.data(), state.lstm);
}

double BonusNet::score(const EvalState& state, Action action) const {
  std::vector<double> prerelu(dense_);
  return head_forward(state.lstm.h.data(), action, prerelu.data());
}

std::unique_ptr<PolicyNet> PolicyNet::from_checkpoint(const std::string& path) {
  CheckpointMeta meta = read_checkpoint_meta(path);
  if (meta.kind != "policy") {
    throw std::runtime_error("checkpoint " + path + " is not a policy checkpoint");
  }
  auto net = std::unique_ptr<PolicyNet>(
      new PolicyNet(meta.n, static_cast<size_t>(meta.extra.at("lstm_units")),
                    static_cast<size_t>(meta.extra.at("dense_units"))));
  load_checkpoint(path, net->params_);
  return net;
}

void PolicyNet::save(const std::string& path) const {
  CheckpointMeta meta;
  meta.kind = "policy";
  meta.n = n_;
  meta.extra["lstm_units"] = static_cast<int64_t>(hidden_);
  meta.extra["dense_units"] = static_cast<int64_t>(dense_);
  save_checkpoint(path, params_, meta);
}

std::unique_ptr<BonusNet> BonusNet::from_checkpoint(const std::string& path) {
  CheckpointMeta meta = read_checkpoint_meta(path);
  if (meta.kind != "bonus") {
    throw std::runtime_error("checkpoint " + path + " is not a bonus checkpoint");
  }
  auto net = std::unique_ptr<BonusNet>(
      new BonusNet(meta.n, static_cast<size_t>(meta.extra.at("lstm_units")),
                   static_cast<size_t>(meta.extra.at("dense_units"))));
  load_checkpoint(path, net->params_);
  return net;
}

void BonusNet::save(const std::string& path) const {
  CheckpointMeta meta;
  meta.kind = "bonus";
  meta.n = n_;
  meta.extra["lstm_units"] = static_cast<int64_t>(hidden_);
  meta.extra["dense_units"] = static_cast<int64_t>(dense_);
  save_checkpoint(path, params_, meta);
}

std::vector<const Episode*> flatten_demonstrations(std::span<const Demonstration> demos) {
  std::vector<const Episode*> eps;
  eps.reserve(demos.size() * 6);
  for (const Demonstration& d : demos) {
    eps.push_back(&d.exploration);
    for (const Episode& e : d.exploits) eps.push_back(&e);
  }
  return eps;
}

BcResult train_bc(std::span<const Episode* const> episodes, const CascadeConfig& cfg,
                  const EpochHook& on_epoch) {
  if (episodes.empty()) throw std::invalid_argument("train_bc: empty dataset");
  BcResult result;
  result.policy = std::unique_ptr<PolicyNet>(
      new PolicyNet(cfg.n, cfg.lstm_units, cfg.dense_units, derive_stream(cfg.seed, "bc_init", 0)));
  Adam adam({.lr = cfg.bc_lr});
  Rng shuffle_rng(derive_stream(cfg.seed, "bc_shuffle", 0));

  std::vector<size_t> order(episodes.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.bc_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (size_t idx : order) {
      result.policy->forward_backward(*episodes[idx]);
      adam.step(result.policy->params());
    }
    if (on_epoch) on_epoch(epoch + 1, *result.policy);
  }

  // Clean evaluation pass over the dataset.
  double loss = 0.0;
  size_t steps = 0;
  for (const Episode* ep : episodes) {
    loss += result.policy->episode_loss(*ep);
    steps += ep->length();
  }
  result.final_mean_loss = steps == 0 ? 0.0 : loss / static_cast<double>(steps);
  result.final_accuracy = result.policy->accuracy(episodes);
  return result;
}

RegressionTargets make_regression_targets(PolicyNet& policy,
                                          std::span<const Episode* const> episodes,
                                          const CascadeConfig& cfg) {
  RegressionTargets targets;
  targets.y.resize(episodes.size());
  targets.contrast.resize(episodes.size());
  Rng contrast_rng(derive_stream(cfg.seed, "contrast", 0));

  double min_y = std::numeric_limits<double>::infinity();
  for (size_t e = 0; e < episodes.size(); ++e) {
    const Episode& ep = *episodes[e];
    auto logits = policy.episode_logits(ep);
    const size_t T = ep.length();
    targets.y[e].resize(T);
    targets.contrast[e].resize(T);
    for (size_t t = 0; t < T; ++t) {
      const int a = static_cast<int>(ep.actions[t]);
      double y = logits[t][static_cast<size_t>(a)] - ep.rewards[t];
      const bool goal_terminal = (t + 1 == T) && ep.terminal;
      if (!goal_terminal) {
        const int greedy = argmax_index(logits[t + 1]);
        y -= cfg.gamma * logits[t + 1][static_cast<size_t>(greedy)];
      }
      targets.y[e][t] = y;
      min_y = std::min(min_y, y);

      int pick = static_cast<int>(contrast_rng.uniform_index(kNumActions - 1));
      if (pick >= a) ++pick;
      targets.contrast[e][t] = static_cast<Action>(pick);
    }
  }
  targets.b_min = cfg.b_min_override.value_or(min_y);
  return targets;
}

BonusResult train_bonus(std::span<const Episode* const> episodes,
                        const RegressionTargets& targets, const CascadeConfig& cfg) {
  if (episodes.empty()) throw std::invalid_argument("train_bonus: empty dataset");
  BonusResult result;
  result.bonus = std::unique_ptr<BonusNet>(new BonusNet(
      cfg.n, cfg.lstm_units, cfg.dense_units, derive_stream(cfg.seed, "bonus_init", 0)));
  Adam adam({.lr = cfg.bonus_lr});
  Rng shuffle_rng(derive_stream(cfg.seed, "bonus_shuffle", 0));

  std::vector<size_t> order(episodes.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.bonus_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (size_t idx : order) {
      const Episode& ep = *episodes[idx];
      double loss = result.bonus->forward_backward(ep, targets.y[idx], targets.contrast[idx],
                                                   targets.b_min);
      if (ep.length() > 0 && loss / static_cast<double>(ep.length()) > 1e6) {
        throw std::runtime_error("bonus regression diverged (mean step loss > 1e6)");
      }
      adam.step(result.bonus->params());
    }
  }

  // Residuals from a clean pass.
  double sq_demo = 0.0, sq_contrast = 0.0, loss_total = 0.0;
  size_t steps = 0;
  for (size_t e = 0; e < episodes.size(); ++e) {
    const Episode& ep = *episodes[e];
    auto state = result.bonus->make_state();
    for (size_t t = 0; t < ep.length(); ++t) {
      result.bonus->feed(ep.frames[t], state);
      const double d1 = result.bonus->score(state, ep.actions[t]) - targets.y[e][t];
      const double d2 = result.bonus->score(state, targets.contrast[e][t]) - targets.b_min;
      sq_demo += d1 * d1;
      sq_contrast += d2 * d2;
      ++steps;
    }
  }
  loss_total = sq_demo + sq_contrast;
  if (steps > 0) {
    result.rms_demo = std::sqrt(sq_demo / static_cast<double>(steps));
    result.rms_contrast = std::sqrt(sq_contrast / static_cast<double>(steps));
    result.final_mean_loss = loss_total / static_cast<double>(steps);
  }
  return result;
}

double bonus_from_scratch(const BonusNet& net, std::span<const Frame> history, Action action) {
  if (history.empty()) throw std::invalid_argument("bonus: empty history");
  auto state = net.make_state();
  for (const Frame& f : history) net.feed(f, state);
  return net.score(state, action);
}

}  // namespace smtw
