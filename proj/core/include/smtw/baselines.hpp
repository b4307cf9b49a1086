#pragma once

#include <cstdint>
#include <unordered_map>

#include "smtw/episode.hpp"
#include "smtw/nn.hpp"

namespace smtw {

// Visit-count bonus over ground-truth states: B(s,a) = N(s,a)^{-1/2}, with the
// visit recorded before the bonus is computed, so a first visit pays 1.0. The
// table never sees observations.
class CountBonus {
 public:
  double record_and_bonus(int ground_truth_state, Action a);
  uint64_t count(int ground_truth_state, Action a) const;
  uint64_t total_visits() const { return total_; }

 private:
  std::unordered_map<uint64_t, uint64_t> counts_;
  uint64_t total_ = 0;
};

struct RndConfig {
  size_t hidden = 128;
  size_t embed = 64;
  double lr = 1e-4;
  // Online mean/variance is seeded with this many raw errors before any
  // normalized value is emitted; earlier calls return 0. Long enough to keep
  // the variance estimate away from zero, short enough not to blank out a
  // meaningful share of short trajectories.
  int warmup = 10;
  double eps = 1e-8;
};

// Random-network-distillation comparator: a fixed random embedding network and
// a trained predictor of identical shape. Each presented observation costs one
// predictor update, and the squared prediction error, normalized to zero mean
// and unit variance by online statistics, is the bonus.
class RndBonus {
 public:
  RndBonus(int n, uint64_t seed, const RndConfig& cfg = {});

  // Normalized bonus for this observation (0 during warmup). Also performs the
  // predictor update and pushes the raw error into the running statistics.
  double score_and_update(const Frame& obs);

  double last_raw_error() const { return last_raw_; }
  int64_t samples_seen() const { return stats_count_; }

  // Test hook: copying target parameters into the predictor makes the raw
  // error exactly zero.
  ParamStore& predictor_params() { return predictor_; }
  const ParamStore& target_params() const { return target_; }

 private:
  void embed(const DenseLayer& l1, const DenseLayer& l2, const double* x,
             double* hidden_buf, double* out) const;

  RndConfig cfg_;
  size_t input_;
  ParamStore target_, predictor_;
  DenseLayer t1_, t2_, p1_, p2_;
  Adam adam_;

  int64_t stats_count_ = 0;
  double stats_mean_ = 0.0;
  double stats_m2_ = 0.0;
  double last_raw_ = 0.0;
};

}  // namespace smtw
