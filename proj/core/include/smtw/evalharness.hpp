#pragma once

#include <span>
#include <string>
#include <vector>

#include "smtw/agent.hpp"
#include "smtw/baselines.hpp"
#include "smtw/behaviors.hpp"
#include "smtw/cascade.hpp"

namespace smtw {

// The bonus-analysis protocol: run every behavior once on each held-out
// instance and present the very same trajectory to the learned bonus, the
// count bonus and the RND bonus. Comparator state (count table, RND pair) is
// owned per cell, so no behavior's novelty leaks into another's score.

inline constexpr BonusKind kAnalysisBonuses[3] = {BonusKind::kSmtw, BonusKind::kCount,
                                                  BonusKind::kRnd};

std::vector<double> score_trajectory_smtw(const BonusNet& net, const Episode& ep);
std::vector<double> score_trajectory_count(CountBonus& table, const Episode& ep);
std::vector<double> score_trajectory_rnd(RndBonus& pair, const Episode& ep);

struct AnalysisCell {
  uint64_t instance_seed = 0;
  BehaviorKind behavior = BehaviorKind::kDemonstrator;
  size_t episode_length = 0;
  // indexed by position of the kind in kAnalysisBonuses
  std::vector<double> values[3];
};

struct AnalysisResult {
  std::vector<AnalysisCell> cells;  // instance-major, behavior-minor

  std::vector<double> pooled(BehaviorKind behavior, BonusKind bonus) const;
  // Per-instance means, in instance order (the bootstrap resampling unit).
  std::vector<double> instance_means(BehaviorKind behavior, BonusKind bonus) const;
};

struct AnalysisConfig {
  BehaviorConfig behavior;
  RndConfig rnd;
  uint64_t master_seed = 0;
};

// Train/test instance sets intersect.
struct OverlapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scores all 8 behaviors x 3 bonuses on the test instances. Refuses to run if
// any test instance id appears in `train_seeds`.
AnalysisResult run_analysis(const BonusNet& bonus_net,
                            std::span<const EnvInstance> test_instances,
                            std::span<const uint64_t> train_seeds, const AnalysisConfig& cfg);

struct MeanCi {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile bootstrap over instances (the clustering unit: per-step values
// within one environment are heavily correlated, so instances are resampled,
// not steps).
MeanCi bootstrap_mean(std::span<const double> instance_means, int resamples, Rng& rng);

struct OrderingRow {
  BonusKind bonus;
  BehaviorKind behavior_a;  // always the demonstrator in the emitted table
  BehaviorKind behavior_b;
  double mean_a = 0.0;
  double mean_b = 0.0;
  MeanCi diff;  // paired per-instance bootstrap of mean_a - mean_b
  MeanCi a_ci;
  MeanCi b_ci;
};

// Demonstrator-vs-other rows for every bonus kind.
std::vector<OrderingRow> pairwise_orderings(const AnalysisResult& analysis, int resamples,
                                            uint64_t seed);

struct SummaryRow {
  BehaviorKind behavior;
  BonusKind bonus;
  size_t count = 0;
  double mean = 0.0, median = 0.0, q25 = 0.0, q75 = 0.0, min = 0.0, max = 0.0;
};

std::vector<SummaryRow> summarize(const AnalysisResult& analysis);

// raw_values.csv, summary.csv, orderings.csv and one SVG histogram per
// (bonus, behavior) panel with 40 bins and a shared x-range per bonus kind.
void write_raw_values_csv(const std::string& path, const AnalysisResult& analysis);
void write_summary_csv(const std::string& path, std::span<const SummaryRow> rows);
void write_orderings_csv(const std::string& path, std::span<const OrderingRow> rows);
void write_histograms(const std::string& dir, const AnalysisResult& analysis, int bins = 40);

// Reads a raw_values.csv back into an AnalysisResult (used by `report` to
// recompute all downstream statistics from the raw file alone).
AnalysisResult read_raw_values_csv(const std::string& path);

}  // namespace smtw
