#include "smtw/baselines.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace smtw {

namespace {
uint64_t pair_key(int gts, Action a) {
  return static_cast<uint64_t>(gts) * kNumActions + static_cast<uint64_t>(a);
}
}  // namespace

double CountBonus::record_and_bonus(int ground_truth_state, Action a) {
  uint64_t& n = counts_[pair_key(ground_truth_state, a)];
  ++n;
  ++total_;
  return 1.0 / std::sqrt(static_cast<double>(n));
}

uint64_t CountBonus::count(int ground_truth_state, Action a) const {
  auto it = counts_.find(pair_key(ground_truth_state, a));
  return it == counts_.end() ? 0 : it->second;
}

RndBonus::RndBonus(int n, uint64_t seed, const RndConfig& cfg)
    : cfg_(cfg),
      input_(static_cast<size_t>(n) * n * 3),
      t1_(target_, "l1", input_, cfg.hidden),
      t2_(target_, "l2", cfg.hidden, cfg.embed),
      p1_(predictor_, "l1", input_, cfg.hidden),
      p2_(predictor_, "l2", cfg.hidden, cfg.embed),
      adam_({.lr = cfg.lr}) {
  Rng target_rng(derive_stream(seed, "rnd_target", 0));
  t1_.init(target_rng);
  t2_.init(target_rng);
  Rng pred_rng(derive_stream(seed, "rnd_predictor", 0));
  p1_.init(pred_rng);
  p2_.init(pred_rng);
}

void RndBonus::embed(const DenseLayer& l1, const DenseLayer& l2, const double* x,
                     double* hidden_buf, double* out) const {
  l1.forward(x, hidden_buf);
  std::vector<double> r(cfg_.hidden);
  for (size_t i = 0; i < cfg_.hidden; ++i) r[i] = relu(hidden_buf[i]);
  l2.forward(r.data(), out);
}

double RndBonus::score_and_update(const Frame& obs) {
  std::vector<double> x(input_);
  widen_frame(obs, x.data());

  std::vector<double> t_hidden(cfg_.hidden), t_out(cfg_.embed);
  std::vector<double> p_hidden(cfg_.hidden), p_out(cfg_.embed);
  embed(t1_, t2_, x.data(), t_hidden.data(), t_out.data());
  embed(p1_, p2_, x.data(), p_hidden.data(), p_out.data());

  double raw = 0.0;
  std::vector<double> dout(cfg_.embed);
  for (size_t i = 0; i < cfg_.embed; ++i) {
    const double err = p_out[i] - t_out[i];
    raw += err * err;
    dout[i] = 2.0 * err;
  }
  if (!std::isfinite(raw)) {
    throw std::runtime_error("rnd: prediction error is not finite");
  }
  last_raw_ = raw;

  // Bonus first, from statistics that exclude the current sample.
  double bonus = 0.0;
  if (stats_count_ >= cfg_.warmup) {
    const double var = stats_m2_ / static_cast<double>(stats_count_);
    bonus = (raw - stats_mean_) / std::sqrt(var + cfg_.eps);
  }

  // One predictor update on this observation.
  std::vector<double> p_r(cfg_.hidden), dr(cfg_.hidden, 0.0);
  for (size_t i = 0; i < cfg_.hidden; ++i) p_r[i] = relu(p_hidden[i]);
  predictor_.zero_grad();
  p2_.backward(p_r.data(), dout.data(), dr.data());
  for (size_t i = 0; i < cfg_.hidden; ++i) {
    if (p_hidden[i] <= 0.0) dr[i] = 0.0;
  }
  p1_.backward(x.data(), dr.data(), nullptr);
  adam_.step(predictor_);

  // Welford update with the raw error.
  ++stats_count_;
  const double delta = raw - stats_mean_;
  stats_mean_ += delta / static_cast<double>(stats_count_);
  stats_m2_ += delta * (raw - stats_mean_);

  return bonus;
}

}  // namespace smtw
